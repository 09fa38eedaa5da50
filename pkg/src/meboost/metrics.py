"""Evaluation metrics: prediction error on true and on observed covariates,
coefficient L1 distance, and exact-support selection sensitivity/specificity,
plus interpolation of metric curves onto a common L1 grid and aggregation
across replications."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .boost import CoefficientPath, interpolate_path


@dataclass
class FitMetrics:
    mse: float
    mse_m: float
    l1_dist: float
    sensitivity: float
    specificity: float
    l1_norm: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class AggregatedMetrics:
    mean: FitMetrics
    se: FitMetrics  # NaN markers when undefined (single replication)
    count: int


def _support_rates(nonzero_hat: np.ndarray, beta_true: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    true_nz = beta_true != 0
    if not np.any(true_nz):
        raise ValueError("beta_true has no nonzero entries; sensitivity is undefined")
    sens = nonzero_hat[..., true_nz].mean(axis=-1)
    if np.all(true_nz):
        spec = np.ones(nonzero_hat.shape[:-1])
    else:
        spec = (~nonzero_hat[..., ~true_nz]).mean(axis=-1)
    return sens, spec


def evaluate_fit(beta_hat, beta_true, X_test, W_test, Y_test) -> FitMetrics:
    """Metrics of a single coefficient vector on a held-out dataset.

    Support comparisons use exact zero/nonzero: both the boosting path and
    coordinate descent produce structural zeros.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    W_test = np.asarray(W_test, dtype=float)
    Y_test = np.asarray(Y_test, dtype=float)
    n, p = X_test.shape
    if W_test.shape != (n, p) or Y_test.shape != (n,) or beta_hat.shape != (p,) or beta_true.shape != (p,):
        raise ValueError("dimension mismatch")
    rx = Y_test - X_test @ beta_hat
    rw = Y_test - W_test @ beta_hat
    sens, spec = _support_rates(beta_hat != 0, beta_true)
    return FitMetrics(
        mse=float(rx @ rx / n),
        mse_m=float(rw @ rw / n),
        l1_dist=float(np.abs(beta_hat - beta_true).sum()),
        sensitivity=float(sens),
        specificity=float(spec),
        l1_norm=float(np.abs(beta_hat).sum()),
    )


def path_metrics_on_grid(
    path: CoefficientPath, beta_true, X_test, W_test, Y_test, grid
) -> list[FitMetrics | None]:
    """Per-step metrics interpolated onto an increasing L1 grid.

    Every statistic, including sensitivity and specificity, is interpolated
    linearly between the bracketing path steps. Grid points the path never
    reaches from below are None.
    """
    beta_true = np.asarray(beta_true, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    W_test = np.asarray(W_test, dtype=float)
    Y_test = np.asarray(Y_test, dtype=float)
    grid = np.asarray(grid, dtype=float)
    betas = path.betas
    n = X_test.shape[0]
    rx = Y_test[:, None] - X_test @ betas.T
    rw = Y_test[:, None] - W_test @ betas.T
    mse = (rx * rx).sum(axis=0) / n
    mse_m = (rw * rw).sum(axis=0) / n
    l1_dist = np.abs(betas - beta_true[None, :]).sum(axis=1)
    sens, spec = _support_rates(betas != 0, beta_true)

    cols = {
        "mse": interpolate_path(path, grid, mse),
        "mse_m": interpolate_path(path, grid, mse_m),
        "l1_dist": interpolate_path(path, grid, l1_dist),
        "sensitivity": interpolate_path(path, grid, sens),
        "specificity": interpolate_path(path, grid, spec),
    }
    out: list[FitMetrics | None] = []
    for i, g in enumerate(grid):
        if math.isnan(cols["mse"][i]):
            out.append(None)
            continue
        out.append(
            FitMetrics(
                mse=float(cols["mse"][i]),
                mse_m=float(cols["mse_m"][i]),
                l1_dist=float(cols["l1_dist"][i]),
                sensitivity=float(cols["sensitivity"][i]),
                specificity=float(cols["specificity"][i]),
                l1_norm=float(g),
            )
        )
    return out


def select_min_mse_m(per_grid_metrics) -> FitMetrics:
    """Grid point with the smallest observed-covariate prediction error;
    ties go to the smaller L1 norm."""
    best = None
    for m in per_grid_metrics:
        if m is None:
            continue
        if best is None or m.mse_m < best.mse_m:
            best = m
    if best is None:
        raise ValueError("no evaluable grid points")
    return best


def select_min_mse(per_grid_metrics) -> FitMetrics:
    """Companion rule using the true-covariate prediction error."""
    best = None
    for m in per_grid_metrics:
        if m is None:
            continue
        if best is None or m.mse < best.mse:
            best = m
    if best is None:
        raise ValueError("no evaluable grid points")
    return best


def aggregate_replications(metrics_list) -> AggregatedMetrics:
    """Componentwise mean and Monte Carlo standard error across replications."""
    metrics_list = list(metrics_list)
    if not metrics_list:
        raise ValueError("empty replication list")
    names = [f.name for f in fields(FitMetrics)]
    data = np.array([[getattr(m, name) for name in names] for m in metrics_list])
    mean = data.mean(axis=0)
    if data.shape[0] > 1:
        se = data.std(axis=0, ddof=1) / np.sqrt(data.shape[0])
    else:
        se = np.full(len(names), np.nan)
    return AggregatedMetrics(
        mean=FitMetrics(**dict(zip(names, mean.tolist()))),
        se=FitMetrics(**dict(zip(names, se.tolist()))),
        count=data.shape[0],
    )
