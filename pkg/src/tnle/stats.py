"""Seeded Gaussian noise, the inverse gamma CDF and accuracy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tnle.errors import NumericalError
from tnle.tensor import Tensor3

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit hash."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Case seed ``seed XOR mix64(...)`` chained over the given indices."""
    h = 0
    for i in indices:
        h = mix64(h ^ (i & MASK64))
    return (seed ^ h) & MASK64


def standard_normal(seed: int, size: int) -> np.ndarray:
    """``size`` N(0, 1) draws by Box-Muller over a PCG64 stream seeded with ``seed``.

    Uniform pairs (u1, u2) come from consecutive doubles of the stream, u1 is
    shifted to (0, 1] so the log is finite; both Box-Muller outputs are used.
    """
    gen = np.random.Generator(np.random.PCG64(seed))
    half = (size + 1) // 2
    u = gen.random(2 * half)
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * half)
    z[0::2] = rad * np.cos(2.0 * np.pi * u2)
    z[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return z[:size]


def awgn(img: Tensor3, spec: NoiseSpec) -> Tensor3:
    """Return ``img + e`` with e i.i.d. N(0, sigma^2); no clipping or quantization."""
    if spec.sigma == 0:
        return img
    z = standard_normal(spec.seed, img.data.size).reshape(img.data.shape)
    return Tensor3(img.data + spec.sigma * z)


# -- regularized incomplete gamma ---------------------------------------------

_EPS = 1e-16
_FPMIN = 1e-300


def _gser(a: float, x: float, gln: float) -> float:
    ap = a
    term = total = 1.0 / a
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - gln)
    raise NumericalError("incomplete gamma series did not converge")


def _gcf(a: float, x: float, gln: float) -> float:
    # modified Lentz for the continued fraction of Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - gln) * h
    raise NumericalError("incomplete gamma continued fraction did not converge")


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("shape must be > 0")
    if x <= 0:
        return 0.0
    gln = math.lgamma(a)
    if x < a + 1.0:
        return min(1.0, _gser(a, x, gln))
    return max(0.0, 1.0 - _gcf(a, x, gln))


def gamma_cdf(x: float, shape: float, scale: float) -> float:
    return gamma_p(shape, x / scale)


def _gamma_logpdf_std(a: float, x: float) -> float:
    return (a - 1.0) * math.log(x) - x - math.lgamma(a)


def gamma_cdf_inv(p: float, shape: float, scale: float, max_iter: int = 200) -> float:
    """x with P(shape, x / scale) = p, by Newton steps safeguarded with bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be > 0")
    a = shape

    # Wilson-Hilferty start
    z = _norm_ppf(p)
    x = a * (1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))) ** 3
    if not x > 0:
        x = (p * math.gamma(a + 1.0)) ** (1.0 / a) if a < 100 else a

    lo, hi = 0.0, max(2.0 * x, a + 1.0)
    while gamma_p(a, hi) < p:
        lo, hi = hi, 2.0 * hi
    x = min(max(x, lo), hi)

    ftol = 1e-14 * min(p, 1.0 - p)
    for _ in range(max_iter):
        f = gamma_p(a, x) - p
        if abs(f) <= ftol:
            return x * scale
        if f < 0:
            lo = x
        else:
            hi = x
        dens = math.exp(_gamma_logpdf_std(a, x)) if x > 0 else 0.0
        step_ok = False
        if dens > 0:
            x_new = x - f / dens
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4 * _EPS * max(x, 1e-300):
            return x_new * scale
        x = x_new
    raise NumericalError(f"gamma_cdf_inv non-convergence after {max_iter} iterations")


def _norm_ppf(p: float) -> float:
    # Acklam's rational approximation, only used as a Newton start
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    lo = 0.02425
    if p < lo:
        q = math.sqrt(-2 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p > 1 - lo:
        return -_norm_ppf(1 - p)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)


# -- metrics ------------------------------------------------------------------

def _as_values(estimates) -> np.ndarray:
    vals = np.asarray(list(estimates), dtype=np.float64)
    if vals.size == 0:
        raise ValueError("metric needs at least one estimate")
    return vals


def rmse_spread(estimates) -> float:
    """Root mean squared deviation of the estimates from their own mean."""
    vals = _as_values(estimates)
    return math.sqrt(float(np.mean((vals - vals.mean()) ** 2)))


def rmse_truth(estimates, truth: float) -> float:
    vals = _as_values(estimates)
    return math.sqrt(float(np.mean((vals - truth) ** 2)))


def mae(estimates) -> float:
    """Mean absolute deviation of the estimates from their own mean."""
    vals = _as_values(estimates)
    return float(np.mean(np.abs(vals - vals.mean())))


def mae_truth(estimates, truth: float) -> float:
    vals = _as_values(estimates)
    return float(np.mean(np.abs(vals - truth)))


@dataclass(frozen=True)
class MetricReport:
    rmse_spread: float
    rmse_truth: float
    mae: float
    mae_truth: float
    n_samples: int

    @classmethod
    def from_estimates(cls, estimates, truth: float) -> "MetricReport":
        vals = _as_values(estimates)
        return cls(rmse_spread(vals), rmse_truth(vals, truth), mae(vals), mae_truth(vals, truth), len(vals))
