"""Thresholded score-following path algorithm (MEBoost).

Starting from beta = 0, each iteration evaluates the corrected score, selects
every coordinate whose score magnitude reaches a fraction ``tau`` of the
largest one, and steps those coordinates by ``gamma`` in the score's sign
direction. The linear family refreshes the corrected residual-variance
estimate after each step; the Poisson family carries no variance state.
"""

from __future__ import annotations

import csv
import io
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .scores import (
    SIGMA2_FLOOR,
    EXP_OVERFLOW,
    MeasurementErrorModel,
    ScoreOverflowError,
)

FAMILIES = ("linear", "poisson")

PathStep = namedtuple("PathStep", ["t", "beta", "l1", "sigma2"])


class StationaryScoreError(ValueError):
    """The score vector is exactly zero; no ascent direction exists."""


@dataclass(frozen=True)
class BoostConfig:
    tau: float = 0.6
    gamma: float = 0.01
    iterations: int = 1000
    family: str = "linear"

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")


@dataclass
class CoefficientPath:
    """Ordered sequence of coefficient vectors indexed by iteration.

    Also used as the common representation of penalty-grid Lasso paths, in
    which case ``lambdas`` is set and ``config``/``sigma2`` are None.
    """

    family: str
    betas: np.ndarray  # (n_steps, p)
    l1: np.ndarray  # (n_steps,)
    sigma2: np.ndarray | None = None
    config: BoostConfig | None = None
    lambdas: np.ndarray | None = None
    stopped_early: str | None = None
    variance_floored: bool = False

    @property
    def n_steps(self) -> int:
        return self.betas.shape[0]

    @property
    def p(self) -> int:
        return self.betas.shape[1]

    @property
    def final_beta(self) -> np.ndarray:
        return self.betas[-1]

    @property
    def steps(self) -> list[PathStep]:
        s2 = self.sigma2 if self.sigma2 is not None else [None] * self.n_steps
        return [
            PathStep(t, self.betas[t], float(self.l1[t]), None if s2[t] is None else float(s2[t]))
            for t in range(self.n_steps)
        ]


def threshold_set(nu: np.ndarray, tau: float) -> np.ndarray:
    """Indices j with |nu_j| >= tau * max_j |nu_j|.

    Raises StationaryScoreError when nu is exactly zero everywhere, since no
    threshold is defined at a stationary point.
    """
    nu = np.asarray(nu, dtype=float)
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    mags = np.abs(nu)
    top = mags.max()
    if top == 0.0:
        raise StationaryScoreError("score vector is exactly zero")
    return np.nonzero(mags >= tau * top)[0]


def meboost_path(W, Y, err: MeasurementErrorModel, cfg: BoostConfig) -> CoefficientPath:
    """Run the thresholded corrected-score path for cfg.iterations steps.

    Deterministic in its inputs. Every recorded coefficient is an exact
    integer multiple of cfg.gamma (coordinates are stored as step counts and
    multiplied out). Terminates early, recording the reason, on a zero score
    or on Poisson score overflow.
    """
    W = np.asarray(W, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if W.ndim != 2 or Y.shape != (W.shape[0],):
        raise ValueError("W must be n x p and Y length n")
    n, p = W.shape
    if err.p != p:
        raise ValueError("delta dimension does not match W")
    linear = cfg.family == "linear"
    if not linear and (np.any(Y < 0) or np.any(Y != np.round(Y))):
        raise ValueError("poisson responses must be nonnegative integers")

    delta = err.delta
    gamma = cfg.gamma
    counts = np.zeros(p, dtype=np.int64)
    beta = np.zeros(p)
    db = np.zeros(p)  # delta @ beta
    wty = W.T @ Y

    if linear:
        gram = W.T @ W
        gb = np.zeros(p)  # gram @ beta
        resid = Y.copy()
        sigma2 = 1.0
    else:
        xb = np.zeros(n)  # W @ beta
        sigma2 = None

    betas = np.empty((cfg.iterations + 1, p))
    l1 = np.empty(cfg.iterations + 1)
    sig = np.empty(cfg.iterations + 1) if linear else None
    betas[0] = 0.0
    l1[0] = 0.0
    if linear:
        sig[0] = 1.0

    stopped = None
    floored = False
    last = cfg.iterations
    for t in range(1, cfg.iterations + 1):
        if linear:
            nu = (wty - gb + n * db) / sigma2
        else:
            shift = 0.5 * (beta @ db)
            eta = xb - shift
            big = eta > EXP_OVERFLOW
            if np.any(big):
                row = int(np.argmax(big))
                stopped = f"poisson score overflow at row {row} (iteration {t})"
                last = t - 1
                break
            ez = np.exp(eta)
            nu = wty - W.T @ ez + db * ez.sum()

        mags = np.abs(nu)
        top = mags.max()
        if top == 0.0:
            stopped = f"stationary score (iteration {t})"
            last = t - 1
            break
        sel = np.nonzero(mags >= cfg.tau * top)[0]
        counts[sel] += np.sign(nu[sel]).astype(np.int64)
        newbeta = counts * gamma
        dsel = newbeta[sel] - beta[sel]
        db += delta[:, sel] @ dsel
        if linear:
            gb += gram[:, sel] @ dsel
            resid -= W[:, sel] @ dsel
        else:
            xb += W[:, sel] @ dsel
        beta = newbeta
        # periodic refresh kills accumulated round-off on long paths
        if t % 512 == 0:
            db = delta @ beta
            if linear:
                gb = gram @ beta
                resid = Y - W @ beta
            else:
                xb = W @ beta

        if linear:
            raw = resid @ resid / n - beta @ db
            sigma2 = raw if raw > SIGMA2_FLOOR else SIGMA2_FLOOR
            if raw <= SIGMA2_FLOOR:
                floored = True
            sig[t] = sigma2
        betas[t] = beta
        l1[t] = np.abs(beta).sum()

    m = last + 1
    return CoefficientPath(
        family=cfg.family,
        betas=betas[:m],
        l1=l1[:m],
        sigma2=sig[:m] if linear else None,
        config=cfg,
        stopped_early=stopped,
        variance_floored=floored,
    )


def default_l1_grid(step: float = 0.05, maximum: float = 15.0) -> np.ndarray:
    """Evaluation positions along the coefficient L1 norm: step, 2*step, ..., maximum."""
    count = int(round(maximum / step))
    return np.arange(1, count + 1) * step


def interpolate_path(path: CoefficientPath, grid, statistic) -> np.ndarray:
    """Linearly interpolate a per-step statistic onto an increasing L1 grid.

    For each grid value the first pair of consecutive path steps whose l1
    values bracket it defines the interpolation segment. Beyond the path's
    largest l1 the last step's value is carried forward; grid values below
    the path's first l1 (possible only when the path does not start at the
    origin) get NaN.
    """
    grid = np.asarray(grid, dtype=float)
    statistic = np.asarray(statistic, dtype=float)
    if path.n_steps == 0:
        raise ValueError("empty path")
    if statistic.shape != (path.n_steps,):
        raise ValueError("statistic must have one value per path step")
    if grid.ndim != 1 or (len(grid) > 1 and np.any(np.diff(grid) <= 0)):
        raise ValueError("grid must be increasing")

    l1 = path.l1
    out = np.full(len(grid), np.nan)
    beyond = grid > l1.max()
    out[beyond] = statistic[-1]
    if path.n_steps == 1:
        out[grid >= l1[0]] = statistic[-1]
        return out

    a, b = l1[:-1], l1[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    inner = ~beyond
    g = grid[inner]
    # first bracketing segment per grid point (segments x points fits in memory
    # at the path lengths this code sees)
    mask = (lo[:, None] <= g[None, :]) & (g[None, :] <= hi[:, None])
    hit = mask.any(axis=0)
    seg = np.argmax(mask, axis=0)
    vals = np.full(len(g), np.nan)
    if np.any(hit):
        k = seg[hit]
        ga = a[k]
        gb = b[k]
        span = gb - ga
        w = np.where(span != 0.0, (g[hit] - ga) / np.where(span == 0.0, 1.0, span), 0.0)
        vals[hit] = (1.0 - w) * statistic[k] + w * statistic[k + 1]
    out[inner] = vals
    return out


def write_path_csv(path: CoefficientPath, fileobj: io.TextIOBase) -> None:
    """Columns: t, l1, sigma2, beta_1..beta_p. sigma2 cells are empty for
    families that carry no variance state. Numbers use 17 significant digits."""
    writer = csv.writer(fileobj, lineterminator="\n")
    header = ["t", "l1", "sigma2"] + [f"beta_{j + 1}" for j in range(path.p)]
    writer.writerow(header)
    for t in range(path.n_steps):
        s2 = "" if path.sigma2 is None else f"{path.sigma2[t]:.17g}"
        row = [str(t), f"{path.l1[t]:.17g}", s2]
        row.extend(f"{v:.17g}" for v in path.betas[t])
        writer.writerow(row)


def read_path_csv(fileobj: io.TextIOBase) -> CoefficientPath:
    """Inverse of write_path_csv. Family is inferred from the sigma2 column."""
    reader = csv.reader(fileobj)
    header = next(reader)
    if header[:3] != ["t", "l1", "sigma2"]:
        raise ValueError("unrecognized path CSV header")
    p = len(header) - 3
    betas, l1, sig = [], [], []
    has_sigma = True
    for row in reader:
        l1.append(float(row[1]))
        if row[2] == "":
            has_sigma = False
        else:
            sig.append(float(row[2]))
        betas.append([float(v) for v in row[3 : 3 + p]])
    return CoefficientPath(
        family="linear" if has_sigma else "poisson",
        betas=np.asarray(betas),
        l1=np.asarray(l1),
        sigma2=np.asarray(sig) if has_sigma else None,
    )
