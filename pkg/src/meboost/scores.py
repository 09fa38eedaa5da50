"""Measurement-error-corrected score functions for linear and Poisson models.

The corrected score evaluated on noisy covariates W has, in expectation over
the noise, the value of the ordinary score evaluated on the unobserved true
covariates. The linear-model correction also adjusts the residual-variance
estimate downward by the noise contribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Residual-variance floor: the corrected estimate can go negative under heavy
# correction, and the path iteration needs a positive value to continue.
SIGMA2_FLOOR = 1e-4

# exp() overflows just above exp(709); anything this large is divergence.
EXP_OVERFLOW = 700.0


class ScoreOverflowError(FloatingPointError):
    """Poisson corrected score diverged: an exponent exceeded the overflow guard."""

    def __init__(self, row: int, value: float):
        self.row = int(row)
        self.value = float(value)
        super().__init__(
            f"poisson score overflow at row {row}: exponent {value:.3g} exceeds {EXP_OVERFLOW:g}"
        )


@dataclass(frozen=True)
class MeasurementErrorModel:
    """Assumed covariance of the additive covariate noise."""

    delta: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
            raise ValueError("delta must be a square matrix")
        if np.max(np.abs(delta - delta.T)) > 1e-12:
            raise ValueError("delta must be symmetric (tolerance 1e-12)")
        if np.any(np.diag(delta) < 0):
            raise ValueError("delta diagonal entries must be nonnegative")
        object.__setattr__(self, "delta", delta)

    @property
    def p(self) -> int:
        return self.delta.shape[0]


@dataclass
class ModelState:
    """Current coefficient vector and (for the linear family) residual variance."""

    beta: np.ndarray
    sigma2: float | None = None

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


def _check_design(W, Y, beta):
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if W.ndim != 2:
        raise ValueError("W must be 2-dimensional")
    n, p = W.shape
    if Y.shape != (n,):
        raise ValueError(f"Y must have shape ({n},), got {Y.shape}")
    if beta.shape != (p,):
        raise ValueError(f"beta must have shape ({p},), got {beta.shape}")
    return W, Y, beta


def naive_score_linear(W, Y, beta, sigma2: float) -> np.ndarray:
    """Gaussian score of the working model, evaluated on the noisy covariates:
    (W'Y - W'W beta) / sigma2."""
    W, Y, beta = _check_design(W, Y, beta)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return (W.T @ Y - W.T @ (W @ beta)) / sigma2


def corrected_score_linear(W, Y, beta, sigma2: float, err: MeasurementErrorModel) -> np.ndarray:
    """Noise-corrected Gaussian score: naive score plus n * delta beta / sigma2."""
    W, Y, beta = _check_design(W, Y, beta)
    if err.p != W.shape[1]:
        raise ValueError("delta dimension does not match W")
    n = W.shape[0]
    return naive_score_linear(W, Y, beta, sigma2) + (n / sigma2) * (err.delta @ beta)


def corrected_variance_linear(W, Y, beta, err: MeasurementErrorModel, floor: float = SIGMA2_FLOOR) -> float:
    """Residual variance with the noise contribution beta' delta beta removed,
    floored at ``floor`` to keep downstream iterations well-defined."""
    W, Y, beta = _check_design(W, Y, beta)
    if err.p != W.shape[1]:
        raise ValueError("delta dimension does not match W")
    resid = Y - W @ beta
    raw = resid @ resid / W.shape[0] - beta @ (err.delta @ beta)
    return max(raw, floor)


def corrected_loglik_linear(W, Y, beta, sigma: float, err: MeasurementErrorModel) -> float:
    """Noise-corrected Gaussian log-likelihood at coefficients ``beta`` and
    residual sd ``sigma``."""
    W, Y, beta = _check_design(W, Y, beta)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if err.p != W.shape[1]:
        raise ValueError("delta dimension does not match W")
    n = W.shape[0]
    resid = Y - W @ beta
    correction = beta @ (err.delta @ beta)
    rss = resid @ resid - n * correction
    return -0.5 * n * np.log(2.0 * np.pi) - n * np.log(sigma) - rss / (2.0 * sigma**2)


def corrected_score_poisson(W, Y, beta, err: MeasurementErrorModel) -> np.ndarray:
    """Noise-corrected Poisson score with log link.

    Raises ScoreOverflowError (naming the first offending row) if any
    exponent argument exceeds the overflow guard.
    """
    W, Y, beta = _check_design(W, Y, beta)
    if err.p != W.shape[1]:
        raise ValueError("delta dimension does not match W")
    if np.any(Y < 0):
        raise ValueError("poisson responses must be nonnegative")
    db = err.delta @ beta
    eta = W @ beta - 0.5 * (beta @ db)
    too_big = eta > EXP_OVERFLOW
    if np.any(too_big):
        row = int(np.argmax(too_big))
        raise ScoreOverflowError(row, float(eta[row]))
    ez = np.exp(eta)
    return W.T @ Y - W.T @ ez + db * ez.sum()


def reliability_to_error_variance(rho: float) -> float:
    """Error variance of a unit-variance observed covariate whose correlation
    with the true covariate is ``rho``: 1 - rho**2."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    return 1.0 - rho * rho
