"""K-fold cross-validation for choosing the boosting threshold and stopping
point, and for choosing the Lasso penalty.

The boosting selector follows the fold protocol: fit the full path on each
training fold, find the path point minimizing held-out loss, average the
L1 norms of those minimizers across folds, then refit on all data and stop
at the path step closest to the averaged L1 norm. The threshold is chosen
by smallest mean held-out loss.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .boost import BoostConfig, CoefficientPath, meboost_path
from .cocolasso import cocolasso_path
from .quadlasso import LassoPath, naive_lasso_path
from .scores import MeasurementErrorModel


def kfold_split(n: int, k_folds: int, seed: int) -> list[np.ndarray]:
    """Seeded uniform shuffle of 0..n-1 partitioned into k folds whose sizes
    differ by at most one (larger folds first)."""
    if not 2 <= k_folds <= n:
        raise ValueError(f"k_folds must lie in [2, {n}], got {k_folds}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, k_folds)]


def poisson_deviance(Y, mu) -> float:
    """Poisson deviance 2 * sum[y log(y/mu) - (y - mu)]; zero counts
    contribute 2*mu."""
    Y = np.asarray(Y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if Y.shape != mu.shape:
        raise ValueError("Y and mu must have the same shape")
    if np.any(Y < 0):
        raise ValueError("Y must be nonnegative")
    if np.any(mu <= 0):
        raise ValueError("mu must be positive elementwise")
    pos = Y > 0
    terms = np.where(pos, np.where(pos, Y, 1.0) * np.log(np.where(pos, Y, 1.0) / mu) - (Y - mu), mu)
    return float(2.0 * terms.sum())


def _path_losses(betas: np.ndarray, W_test, Y_test, family: str) -> np.ndarray:
    """Held-out loss of every path step: mean squared prediction error on the
    observed covariates for the linear family, mean deviance per observation
    for the Poisson family."""
    W_test = np.asarray(W_test, dtype=float)
    Y_test = np.asarray(Y_test, dtype=float)
    n = W_test.shape[0]
    preds = W_test @ betas.T
    if family == "linear":
        r = Y_test[:, None] - preds
        return (r * r).sum(axis=0) / n
    mu = np.exp(np.clip(preds, -700.0, 700.0))
    y = Y_test[:, None]
    pos = y > 0
    safe_y = np.where(pos, y, 1.0)
    terms = np.where(pos, safe_y * np.log(safe_y / mu) - (y - mu), mu)
    return 2.0 * terms.sum(axis=0) / n


@dataclass
class FoldRecord:
    fold: int
    test_indices: np.ndarray
    tunings: np.ndarray  # candidate tuning values (L1 norms or lambdas)
    losses: np.ndarray  # held-out loss per candidate
    best_tuning: float
    best_loss: float


@dataclass
class CVResult:
    method: str
    family: str
    final_beta: np.ndarray
    chosen_tau: float | None = None
    chosen_l1_norm: float | None = None
    chosen_lambda: float | None = None
    per_fold: list[FoldRecord] = field(default_factory=list)
    tuning_table: dict | None = None  # candidate -> (mean loss, mean L1)
    refit_path: CoefficientPath | None = None
    variance_floored: bool = False


def cv_select_meboost(
    W,
    Y,
    family: str,
    err: MeasurementErrorModel,
    tau_grid,
    cfg: BoostConfig,
    k_folds: int,
    seed: int,
) -> CVResult:
    """Choose the threshold and stopping point by K-fold cross-validation.

    ``cfg`` supplies gamma, the iteration budget, and the family; its tau is
    replaced by each candidate in ``tau_grid``.
    """
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = W.shape[0]
    tau_grid = [float(t) for t in tau_grid]
    if not tau_grid:
        raise ValueError("tau_grid must be nonempty")
    folds = kfold_split(n, k_folds, seed)
    all_idx = np.arange(n)

    table = {}
    fold_records = {}
    for tau in tau_grid:
        tau_cfg = dataclasses.replace(cfg, tau=tau, family=family)
        best_l1s, best_losses, records = [], [], []
        for k, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            path = meboost_path(W[train_idx], Y[train_idx], err, tau_cfg)
            losses = _path_losses(path.betas, W[test_idx], Y[test_idx], family)
            i = int(np.argmin(losses))
            best_l1s.append(float(path.l1[i]))
            best_losses.append(float(losses[i]))
            records.append(
                FoldRecord(
                    fold=k,
                    test_indices=test_idx,
                    tunings=path.l1.copy(),
                    losses=losses,
                    best_tuning=float(path.l1[i]),
                    best_loss=float(losses[i]),
                )
            )
        table[tau] = (float(np.mean(best_losses)), float(np.mean(best_l1s)))
        fold_records[tau] = records

    chosen_tau = min(tau_grid, key=lambda t: table[t][0])
    chosen_l1 = table[chosen_tau][1]
    refit = meboost_path(W, Y, err, dataclasses.replace(cfg, tau=chosen_tau, family=family))
    stop = int(np.argmin(np.abs(refit.l1 - chosen_l1)))
    return CVResult(
        method="meboost",
        family=family,
        final_beta=refit.betas[stop].copy(),
        chosen_tau=chosen_tau,
        chosen_l1_norm=chosen_l1,
        per_fold=fold_records[chosen_tau],
        tuning_table=table,
        refit_path=refit,
        variance_floored=refit.variance_floored,
    )


def cv_select_lasso(
    W,
    Y,
    err: MeasurementErrorModel | None,
    lambdas,
    k_folds: int,
    seed: int,
    method: str = "naive",
    **path_kwargs,
) -> CVResult:
    """Standard K-fold cross-validation over a shared penalty grid using
    held-out squared error on the observed covariates."""
    if method not in ("naive", "cocolasso"):
        raise ValueError("method must be 'naive' or 'cocolasso'")
    if method == "cocolasso" and err is None:
        raise ValueError("cocolasso requires a measurement error model")
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    n = W.shape[0]
    folds = kfold_split(n, k_folds, seed)
    all_idx = np.arange(n)

    def fit(Wf, Yf) -> LassoPath:
        if method == "naive":
            return naive_lasso_path(Wf, Yf, lambdas, **path_kwargs)
        path, _ = cocolasso_path(Wf, Yf, err, lambdas, **path_kwargs)
        return path

    records = []
    curves = np.empty((len(folds), lambdas.size))
    for k, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
        path = fit(W[train_idx], Y[train_idx])
        losses = _path_losses(path.betas, W[test_idx], Y[test_idx], "linear")
        curves[k] = losses
        i = int(np.argmin(losses))
        records.append(
            FoldRecord(
                fold=k,
                test_indices=test_idx,
                tunings=lambdas.copy(),
                losses=losses,
                best_tuning=float(lambdas[i]),
                best_loss=float(losses[i]),
            )
        )
    mean_losses = curves.mean(axis=0)
    best = int(np.argmin(mean_losses))
    chosen_lambda = float(lambdas[best])
    refit = fit(W, Y)
    final_beta = refit.betas[best].copy()
    return CVResult(
        method=method,
        family="linear",
        final_beta=final_beta,
        chosen_lambda=chosen_lambda,
        chosen_l1_norm=float(np.abs(final_beta).sum()),
        per_fold=records,
        tuning_table={float(l): (float(m), None) for l, m in zip(lambdas, mean_losses)},
    )
