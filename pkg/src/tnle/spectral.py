"""Symmetric eigenvalues and the covariance spectrum fed to the noise model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from tnle.errors import NumericalError
from tnle.tensor import Tensor3, bdiag_from_stacked, identity_slice_tensor, t_product, unfold

MAX_ORDER = 256
MAX_SWEEPS = 100
OFF_TOL = 1e-11
# relative slack below zero tolerated (and clamped) for PSD spectra
NEG_TOL = 1e-9


@lru_cache(maxsize=32)
def _round_robin(n: int) -> tuple:
    """Pairings of 0..n-1 into rounds of disjoint pairs; one sweep visits every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = sorted((min(a, b), max(a, b)) for a, b in pairs if a < n and b < n)
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> float:
    return math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))


def sym_eig(a, vectors: bool = False):
    """Eigenvalues (ascending) of a real symmetric matrix by cyclic Jacobi.

    Rotations are applied in round-robin order, so each round annihilates a set
    of disjoint (p, q) pairs at once. Iterates until the off-diagonal Frobenius
    norm drops to ``1e-11 * ||A||_F``.

    With ``vectors=True`` returns ``(w, V)`` with ``A @ V[:, k] = w[k] V[:, k]``.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_ORDER:
        raise ValueError(f"sym_eig supports order <= {MAX_ORDER}, got {n}")
    if not np.all(np.isfinite(a)):
        raise ValueError("sym_eig input contains non-finite values")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-8 * scale:
        raise ValueError("sym_eig input is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n) if vectors else None

    tol = OFF_TOL * scale
    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        if _off_norm(a) <= tol:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            safe = np.where(active, apq, 1.0)
            tau = (a[q, q] - a[p, p]) / (2.0 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            ap, aq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * ap - s[:, None] * aq, s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            if v is not None:
                vp, vq = v[:, p], v[:, q]
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        if _off_norm(a) > tol:
            raise NumericalError(f"eig non-convergence after {MAX_SWEEPS} sweeps (order {n})")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    if vectors:
        return w[order], v[:, order]
    return w[order]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues of bdiag(B) together with the patch count behind them."""

    values: np.ndarray
    s_used: int

    @property
    def r(self) -> int:
        return len(self.values)


def bdiag_spectrum(cs) -> Spectrum:
    """Spectrum of bdiag(unfold(B * I_2)) for the three channel covariances in ``cs``.

    B stacks the covariances as frontal slices; the T-product with I_2 cycles
    them into the order (S3, S1, S2) before the block-diagonal split. The
    eigenvalue multiset does not depend on that order.
    """
    sigmas = cs.sigma
    m = sigmas[0].shape[0]
    b = Tensor3.from_slices(sigmas)
    stacked = unfold(t_product(b, identity_slice_tensor(m, b.n3, 2)))
    values = bdiag_from_stacked(stacked, b.n3).eigenvalues()
    values.setflags(write=False)
    return Spectrum(values=values, s_used=cs.s_used)


def n_smallest(sp: Spectrum, n: int) -> np.ndarray:
    """The n smallest eigenvalues, with round-off negatives clamped to zero."""
    if not 1 <= n <= sp.r:
        raise ValueError(f"n must lie in 1..{sp.r}, got {n}")
    vals = np.array(sp.values[:n], dtype=np.float64)
    top = max(float(np.max(np.abs(sp.values))), 0.0)
    if np.any(vals < -NEG_TOL * top):
        raise NumericalError(f"spectrum has a significantly negative eigenvalue {vals.min():.6g}")
    return np.maximum(vals, 0.0)


def spectrum_band(sigma: float, r: int, s: int) -> tuple[float, float]:
    """Interval sigma^2 -/+ sqrt(2r) sigma^2 / sqrt(s - 1) for the small eigenvalues."""
    if s < 2:
        raise ValueError("band needs at least 2 patches")
    if r < 1 or sigma < 0:
        raise ValueError("band needs r >= 1 and sigma >= 0")
    var = sigma * sigma
    half = math.sqrt(2 * r) * var / math.sqrt(s - 1)
    return var - half, var + half
