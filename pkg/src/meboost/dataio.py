"""CSV ingestion, column standardization, and assumed-error specification
for the dataset-analysis commands."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


class DataError(Exception):
    """Malformed input data: missing columns, non-numeric cells, bad error spec."""


def read_csv_dataset(path: str, outcome: str):
    """Read an RFC-4180 CSV with a header row into (predictor names,
    predictor matrix, outcome vector). Missing or non-numeric cells are
    reported with their row and column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if outcome not in header:
            raise DataError(f"{path}: outcome column {outcome!r} not in header {header}")
        rows = []
        for i, row in enumerate(reader, start=2):  # header is line 1
            if len(row) != len(header):
                raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
            parsed = []
            for name, cell in zip(header, row):
                if cell.strip() == "":
                    raise DataError(f"{path}: missing value at row {i}, column {name!r}")
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {i}, column {name!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    y_idx = header.index(outcome)
    x_idx = [j for j in range(len(header)) if j != y_idx]
    names = [header[j] for j in x_idx]
    return names, data[:, x_idx], data[:, y_idx]


def standardize_columns(X, names=None):
    """Center and scale columns to unit variance (population sd). Constant
    columns cannot be standardized and are reported by name."""
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    sds = X.std(axis=0)
    zero = np.nonzero(sds == 0.0)[0]
    if zero.size:
        labels = [names[j] for j in zero] if names else zero.tolist()
        raise DataError(f"constant columns cannot be standardized: {labels}")
    return (X - means) / sds, means, sds


def apply_standardization(X, means, sds):
    return (np.asarray(X, dtype=float) - means) / sds


def destandardize_coefficients(beta_std, means, sds):
    """Raw-scale slopes and the intercept shift reproducing standardized-scale
    predictions: x_raw @ slopes + shift == x_std @ beta_std."""
    beta_std = np.asarray(beta_std, dtype=float)
    slopes = beta_std / sds
    shift = -float(np.sum(beta_std * means / sds))
    return slopes, shift


def train_test_split_indices(n: int, test_fraction: float, seed: int):
    """Seeded shuffle split; the test set gets round(n * test_fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


@dataclass
class ErrorSpec:
    """Assumed measurement-error structure for named dataset columns, on the
    standardized (unit-variance) scale. Columns not listed are error-free.

    JSON form::

        {"columns": {"calories": 0.887, "protein": 0.443},
         "correlation_blocks": [{"columns": ["calories", "protein"], "rho": 0.3}]}
    """

    variances: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list)  # (column names, rho)

    def __post_init__(self):
        for name, v in self.variances.items():
            if not 0.0 <= float(v) < 1.0:
                raise DataError(
                    f"error variance for {name!r} must lie in [0, 1) on the "
                    f"standardized scale, got {v}"
                )
        for cols, rho in self.blocks:
            if not -1.0 < float(rho) < 1.0:
                raise DataError(f"block correlation must lie in (-1, 1), got {rho}")
            missing = [c for c in cols if c not in self.variances]
            if missing:
                raise DataError(
                    f"correlation block references columns without variances: {missing}"
                )

    @classmethod
    def from_dict(cls, doc: dict) -> "ErrorSpec":
        unknown = sorted(set(doc) - {"columns", "correlation_blocks"})
        if unknown:
            raise DataError(f"unknown error-spec fields: {unknown}")
        variances = {str(k): float(v) for k, v in doc.get("columns", {}).items()}
        blocks = [
            (list(b["columns"]), float(b["rho"])) for b in doc.get("correlation_blocks", [])
        ]
        return cls(variances=variances, blocks=blocks)

    @classmethod
    def from_json_file(cls, path: str) -> "ErrorSpec":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def build_delta(self, names, scale: float = 1.0) -> np.ndarray:
        """Assemble the assumed error covariance for the given column order,
        optionally scaled (sensitivity analysis)."""
        index = {name: j for j, name in enumerate(names)}
        missing = sorted(set(self.variances) - set(index))
        if missing:
            raise DataError(f"error spec references unknown columns: {missing}")
        p = len(names)
        delta = np.zeros((p, p))
        for name, v in self.variances.items():
            scaled = float(v) * scale
            if not 0.0 <= scaled < 1.0:
                raise DataError(
                    f"scaled error variance for {name!r} is {scaled:.4g}, outside [0, 1)"
                )
            delta[index[name], index[name]] = scaled
        for cols, rho in self.blocks:
            for a in cols:
                for b in cols:
                    if a == b:
                        continue
                    ia, ib = index[a], index[b]
                    delta[ia, ib] = rho * np.sqrt(delta[ia, ia] * delta[ib, ib])
        return delta


def format_float(v: float) -> str:
    """17 significant digits: round-trips any double exactly."""
    return f"{v:.17g}"
