"""Linear model from the n smallest eigenvalues to the noise variance.

The prediction is ``theta_0 + theta_1 lambda_1 + ... + theta_n lambda_n``.
Training targets are noise *variances* (sigma^2), so a trained intercept sits
near sigma^2 and the estimate itself is the square root of the prediction.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from tnle.errors import NumericalError

log = logging.getLogger(__name__)

DIVERGENCE_PATIENCE = 50
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class TrainingSample:
    lambdas: np.ndarray
    target: float
    sigma_label: float = float("nan")

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=np.float64).ravel()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        if self.target < 0:
            raise ValueError("training target (a variance) must be >= 0")

    @classmethod
    def from_sigma(cls, lambdas, sigma: float) -> "TrainingSample":
        return cls(lambdas, sigma * sigma, sigma)


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    theta: np.ndarray
    sigma_ref: float = float("nan")

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64).ravel()
        if th.size < 1 or not np.all(np.isfinite(th)):
            raise ValueError("coefficients must be a non-empty finite vector")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @property
    def n(self) -> int:
        return self.theta.size - 1

    def __eq__(self, other):
        if not isinstance(other, CoefficientSet):
            return NotImplemented
        same_ref = (self.sigma_ref == other.sigma_ref
                    or (math.isnan(self.sigma_ref) and math.isnan(other.sigma_ref)))
        return same_ref and np.array_equal(self.theta, other.theta)


@dataclass(frozen=True, eq=False)
class CoefficientBank:
    M1: int
    n: int
    entries: tuple
    pooled: Optional[CoefficientSet] = None

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.sigma_ref))
        refs = [e.sigma_ref for e in entries]
        if any(b <= a for a, b in zip(refs, refs[1:])):
            raise ValueError("bank sigma_ref values must be strictly increasing")
        sets = list(entries) + ([self.pooled] if self.pooled is not None else [])
        if any(e.n != self.n for e in sets):
            raise ValueError(f"every coefficient set in the bank must have n={self.n}")
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, CoefficientBank):
            return NotImplemented
        return (self.M1 == other.M1 and self.n == other.n and self.entries == other.entries
                and self.pooled == other.pooled)


@dataclass(frozen=True)
class GdConfig:
    alpha: float = 0.05
    epsilon: float = 1e-10
    max_iters: int = 200_000
    normalize: bool = True

    def __post_init__(self):
        if not self.alpha > 0 or not self.epsilon > 0:
            raise ValueError("alpha and epsilon must be > 0")


def predict(theta: CoefficientSet, lambdas) -> float:
    lam = np.asarray(lambdas, dtype=np.float64).ravel()
    if lam.size != theta.n:
        raise ValueError(f"expected {theta.n} eigenvalues, got {lam.size}")
    return float(theta.theta[0] + theta.theta[1:] @ lam)


def _design(data: Sequence[TrainingSample]):
    if len(data) == 0:
        raise ValueError("training data is empty")
    x = np.vstack([d.lambdas for d in data])
    y = np.array([d.target for d in data])
    return x, y


def _theta_vec(theta) -> np.ndarray:
    return theta.theta if isinstance(theta, CoefficientSet) else np.asarray(theta, dtype=np.float64)


def loss(theta, data: Sequence[TrainingSample]) -> float:
    """J = 1/(2M) sum_i (f(lambda^(i)) - target_i)^2."""
    x, y = _design(data)
    th = _theta_vec(theta)
    resid = th[0] + x @ th[1:] - y
    return float(resid @ resid / (2 * len(y)))


def gradient(theta, data: Sequence[TrainingSample]) -> np.ndarray:
    """dJ/dtheta_j = 1/M sum_i (f(lambda^(i)) - target_i) lambda_j^(i), lambda_0 = 1."""
    x, y = _design(data)
    th = _theta_vec(theta)
    resid = th[0] + x @ th[1:] - y
    m = len(y)
    return np.concatenate([[resid.sum() / m], resid @ x / m])


def _gd(x: np.ndarray, y: np.ndarray, w: np.ndarray, cfg: GdConfig) -> np.ndarray:
    m = len(y)
    xa = np.hstack([np.ones((m, 1)), x])
    resid = xa @ w - y
    j_prev = resid @ resid / (2 * m)
    growth = 0
    for it in range(cfg.max_iters):
        grad = xa.T @ resid / m
        step = cfg.alpha * grad
        if np.all(np.abs(step) <= cfg.epsilon):
            return w
        w = w - step
        resid = xa @ w - y
        j = resid @ resid / (2 * m)
        if not np.isfinite(j):
            raise NumericalError("gd divergence: reduce alpha")
        growth = growth + 1 if j > j_prev else 0
        if growth >= DIVERGENCE_PATIENCE:
            raise NumericalError("gd divergence: reduce alpha")
        j_prev = j
    log.warning("gradient descent hit max_iters=%d before reaching epsilon", cfg.max_iters)
    return w


def gd_train(data: Sequence[TrainingSample], cfg: GdConfig = GdConfig(),
             theta0: Optional[CoefficientSet] = None, sigma_ref: float = float("nan")) -> CoefficientSet:
    """Batch gradient descent on J, stopping once every |alpha dJ/dtheta_j| <= epsilon.

    With ``cfg.normalize`` the features are standardized before descent and the
    coefficients mapped back to raw-feature space on return; ``theta0`` is then
    interpreted in raw space and converted.
    """
    x, y = _design(data)
    m, n = x.shape
    if m < n + 1:
        warnings.warn(f"only {m} training samples for {n + 1} coefficients", stacklevel=2)
    w0 = np.zeros(n + 1) if theta0 is None else _theta_vec(theta0).copy()
    if w0.size != n + 1:
        raise ValueError("theta0 has the wrong length")

    if not cfg.normalize:
        return CoefficientSet(_gd(x, y, w0, cfg), sigma_ref)

    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    live = sd > 0
    scale = np.where(live, sd, 1.0)
    z = np.where(live, (x - mu) / scale, 0.0)
    # raw -> standardized: w_j = theta_j * sd_j, w_0 = theta_0 + sum theta_j mu_j
    wz = np.concatenate([[w0[0] + w0[1:] @ mu], w0[1:] * scale])
    wz = _gd(z, y, wz, cfg)
    theta = np.zeros(n + 1)
    theta[1:] = np.where(live, wz[1:] / scale, 0.0)
    theta[0] = wz[0] - theta[1:] @ mu
    return CoefficientSet(theta, sigma_ref)


def _solve_pivoted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    a = a.astype(np.float64).copy()
    b = b.astype(np.float64).copy()
    k = len(b)
    for col in range(k):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if a[piv, col] == 0.0:
            raise NumericalError("rank deficient normal equations")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(f, a[col, col:])
        b[col + 1:] -= f * b[col]
    out = np.zeros(k)
    for row in range(k - 1, -1, -1):
        out[row] = (b[row] - a[row, row + 1:] @ out[row + 1:]) / a[row, row]
    return out


def normal_eq_solve(data: Sequence[TrainingSample], sigma_ref: float = float("nan")) -> CoefficientSet:
    """Closed-form least-squares minimizer of J from the (n+1) x (n+1) normal equations.

    Columns are equilibrated before forming X^T X; the condition number of the
    equilibrated system must stay below 1e12.
    """
    x, y = _design(data)
    m, n = x.shape
    if m < n + 1:
        raise NumericalError(f"rank deficient: {m} samples for {n + 1} coefficients")
    xa = np.hstack([np.ones((m, 1)), x])
    col = np.max(np.abs(xa), axis=0)
    if np.any(col == 0):
        raise NumericalError("rank deficient: all-zero feature column")
    xs = xa / col
    gram = xs.T @ xs
    if not np.linalg.cond(gram) < COND_LIMIT:
        raise NumericalError("rank deficient normal equations")
    return CoefficientSet(_solve_pivoted(gram, xs.T @ y) / col, sigma_ref)


def pilot_estimate(lambdas) -> float:
    """Coarse variance used to pick a bank entry: the median of the given eigenvalues."""
    lam = np.asarray(lambdas, dtype=np.float64).ravel()
    if lam.size == 0:
        raise ValueError("pilot estimate needs at least one eigenvalue")
    return float(np.median(lam))


def select_coefficients(bank: CoefficientBank, sigma0_sq: float, mode: str = "nearest") -> CoefficientSet:
    """Entry whose sigma_ref^2 is closest to the pilot; ties go to the smaller sigma_ref."""
    if mode == "pooled":
        if bank.pooled is None:
            raise ValueError("bank has no pooled coefficient set")
        return bank.pooled
    if mode not in ("nearest", "bank-nearest"):
        raise ValueError(f"unknown selection mode {mode!r}")
    if not bank.entries:
        raise ValueError("coefficient bank is empty")
    best = bank.entries[0]
    best_gap = abs(best.sigma_ref ** 2 - sigma0_sq)
    for e in bank.entries[1:]:
        gap = abs(e.sigma_ref ** 2 - sigma0_sq)
        if gap < best_gap:
            best, best_gap = e, gap
    return best
