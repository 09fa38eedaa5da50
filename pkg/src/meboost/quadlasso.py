"""Coordinate descent for the quadratic-form Lasso objective
0.5 * b' Sigma b - rho' b + lambda * ||b||_1.

Both the naive Lasso (Sigma = W'W/n, rho = W'Y/n) and the corrected-moments
Lasso reduce to this problem; all moments use the 1/n scaling so penalty
values are comparable across sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boost import CoefficientPath


@dataclass(frozen=True)
class QuadProblem:
    sigma: np.ndarray
    rho: np.ndarray
    lam: float

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("sigma must be square")
        if rho.shape != (sigma.shape[0],):
            raise ValueError("rho length must match sigma")
        if np.max(np.abs(sigma - sigma.T)) > 1e-10:
            raise ValueError("sigma must be symmetric (tolerance 1e-10)")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @property
    def p(self) -> int:
        return self.rho.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.sigma)[0])

    def objective(self, beta) -> float:
        beta = np.asarray(beta, dtype=float)
        return float(0.5 * beta @ (self.sigma @ beta) - self.rho @ beta + self.lam * np.abs(beta).sum())


@dataclass
class CDResult:
    beta: np.ndarray
    sweeps: int
    converged: bool
    frozen: np.ndarray  # indices held at zero because sigma_jj == 0


def soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def kkt_violation(prob: QuadProblem, beta) -> float:
    """Largest subgradient-condition violation at beta (0 means exact)."""
    beta = np.asarray(beta, dtype=float)
    grad = prob.sigma @ beta - prob.rho
    active = beta != 0
    viol = np.where(active, np.abs(grad + prob.lam * np.sign(beta)), np.maximum(np.abs(grad) - prob.lam, 0.0))
    return float(viol.max())


def coordinate_descent_quadratic(
    prob: QuadProblem,
    init=None,
    tol: float = 1e-7,
    max_sweeps: int = 10000,
    debug: bool = False,
) -> CDResult:
    """Cyclic coordinate descent from ``init`` (zeros when omitted).

    Stops once the largest coordinate change in a sweep is <= tol and the
    KKT residual is <= 10*tol; hitting max_sweeps first is reported via
    ``converged=False`` rather than an error. Coordinates with a zero
    diagonal are frozen at zero; such a coordinate with a nonzero rho or
    init entry is rejected as ill-posed.
    """
    p = prob.p
    sigma = prob.sigma
    rho = prob.rho
    lam = prob.lam
    diag = np.diag(sigma).copy()
    frozen = np.nonzero(diag == 0.0)[0]
    if frozen.size:
        bad = (rho[frozen] != 0.0) | (init is not None and np.asarray(init)[frozen] != 0.0)
        if np.any(bad):
            raise ValueError(
                f"coordinates {frozen[np.nonzero(bad)[0]].tolist()} have zero curvature "
                "but nonzero rho/init"
            )

    beta = np.zeros(p) if init is None else np.array(init, dtype=float)
    s = sigma @ beta  # running Sigma @ beta
    free = diag > 0.0
    kkt_tol = 10.0 * tol

    converged = False
    sweeps = 0
    prev_obj = prob.objective(beta) if debug else None
    for sweeps in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in range(p):
            if not free[j]:
                continue
            bj = beta[j]
            z = rho[j] - s[j] + diag[j] * bj
            nb = soft_threshold(z, lam) / diag[j]
            if nb != bj:
                d = nb - bj
                s += sigma[:, j] * d
                beta[j] = nb
                ad = abs(d)
                if ad > max_change:
                    max_change = ad
        if debug:
            obj = prob.objective(beta)
            if obj > prev_obj + 1e-12:
                raise AssertionError(f"objective increased within a sweep: {prev_obj} -> {obj}")
            prev_obj = obj
        if max_change <= tol:
            grad = s - rho
            active = beta != 0
            viol = np.where(
                active,
                np.abs(grad + lam * np.sign(beta)),
                np.maximum(np.abs(grad) - lam, 0.0),
            )
            if viol.max() <= kkt_tol:
                converged = True
                break
    return CDResult(beta=beta, sweeps=sweeps, converged=converged, frozen=frozen)


def lambda_grid(lambda_max: float, count: int = 100, ratio: float = 0.001) -> np.ndarray:
    """Geometric sequence from lambda_max down to lambda_max * ratio."""
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    if count < 2:
        raise ValueError("count must be at least 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    return lambda_max * ratio ** (np.arange(count) / (count - 1))


@dataclass
class LassoPath:
    """Solutions along a decreasing penalty grid, warm-started left to right."""

    lambdas: np.ndarray
    betas: np.ndarray  # (len(lambdas), p)
    converged: np.ndarray  # bool per lambda
    sigma: np.ndarray
    rho: np.ndarray

    def __iter__(self):
        return iter(zip(self.lambdas, self.betas))

    def beta_at(self, lam: float) -> np.ndarray:
        idx = int(np.argmin(np.abs(self.lambdas - lam)))
        return self.betas[idx]

    def as_coefficient_path(self, family: str = "linear") -> CoefficientPath:
        return CoefficientPath(
            family=family,
            betas=self.betas,
            l1=np.abs(self.betas).sum(axis=1),
            lambdas=self.lambdas,
        )


def solve_quadratic_path(
    sigma,
    rho,
    lambdas,
    tol: float = 1e-7,
    max_sweeps: int = 10000,
    l1_stop: float | None = None,
) -> LassoPath:
    """Warm-started coordinate descent across a strictly decreasing grid.

    ``l1_stop`` truncates the grid once a solution's L1 norm reaches it;
    deeper penalties only grow the path beyond the region of interest and,
    for singular sigma, are the expensive ones to solve.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a nonempty vector")
    if np.any(lambdas <= 0):
        raise ValueError("lambdas must be positive")
    if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be strictly decreasing")
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    p = rho.shape[0]
    betas = np.empty((lambdas.size, p))
    converged = np.empty(lambdas.size, dtype=bool)
    warm = np.zeros(p)
    used = lambdas.size
    for i, lam in enumerate(lambdas):
        res = coordinate_descent_quadratic(
            QuadProblem(sigma, rho, float(lam)), init=warm, tol=tol, max_sweeps=max_sweeps
        )
        betas[i] = res.beta
        converged[i] = res.converged
        warm = res.beta
        if l1_stop is not None and np.abs(res.beta).sum() >= l1_stop:
            used = i + 1
            break
    return LassoPath(
        lambdas=lambdas[:used],
        betas=betas[:used],
        converged=converged[:used],
        sigma=sigma,
        rho=rho,
    )


def naive_lasso_path(
    W,
    Y,
    lambdas=None,
    tol: float = 1e-7,
    max_sweeps: int = 10000,
    l1_stop: float | None = None,
) -> LassoPath:
    """Lasso on the observed covariates: Sigma = W'W/n, rho = W'Y/n.

    When ``lambdas`` is omitted the default geometric grid starts at
    lambda_max = max_j |W'Y|_j / n, whose solution is exactly zero.
    """
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = W.shape[0]
    sigma = W.T @ W / n
    rho = W.T @ Y / n
    if lambdas is None:
        lambdas = lambda_grid(float(np.max(np.abs(rho))))
    return solve_quadratic_path(
        sigma, rho, lambdas, tol=tol, max_sweeps=max_sweeps, l1_stop=l1_stop
    )
