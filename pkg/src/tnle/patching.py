"""Sliding-window patch tensors, per-channel covariances and weak-texture selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tnle.spectral import bdiag_spectrum, n_smallest
from tnle.stats import gamma_cdf_inv
from tnle.tensor import Tensor3

log = logging.getLogger(__name__)

POLICIES = ("all", "weak-texture")


@dataclass(frozen=True, eq=False)
class PatchStack:
    """M1^2 x s x 3 tensor: column t of slice j is channel j of patch t, vectorized.

    ``index`` holds the window positions (row-major order) the columns came
    from, and ``warnings`` carries notes produced while selecting patches.
    """

    M1: int
    data: Tensor3
    index: np.ndarray
    warnings: tuple = ()

    @property
    def s(self) -> int:
        return self.data.n2

    def subset(self, keep: np.ndarray, warnings: tuple = ()) -> "PatchStack":
        return PatchStack(self.M1, Tensor3(self.data.data[:, :, keep]), self.index[keep],
                          self.warnings + tuple(warnings))


@dataclass(frozen=True, eq=False)
class CovarianceSet:
    sigma: tuple
    s_used: int


@dataclass(frozen=True)
class TextureSelector:
    delta: float = 0.99
    max_iters: int = 10
    policy: str = "all"

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie strictly inside (0, 1), got {self.delta}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown selection policy {self.policy!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


def extract_patches(img: Tensor3, M1: int) -> PatchStack:
    """All M1 x M1 windows of a 3-channel image, positions enumerated row-major.

    Each channel patch is vectorized column-major (down the first column first).
    """
    if M1 < 2:
        raise ValueError("window must be at least 2")
    if M1 > min(img.n1, img.n2):
        raise ValueError(f"window too large: M1={M1} for a {img.n1}x{img.n2} image")
    # (n3, H', W', M1, M1) with the last two axes the (row, col) offsets
    win = sliding_window_view(img.data, (M1, M1), axis=(1, 2))
    n3, h, w = win.shape[:3]
    cols = win.transpose(0, 4, 3, 1, 2).reshape(n3, M1 * M1, h * w)
    return PatchStack(M1, Tensor3(cols), np.arange(h * w))


def slice_covariance(ps: PatchStack, j: int) -> np.ndarray:
    """(1/s) sum_i (y_i - u)(y_i - u)^T over the columns of slice j (1-based)."""
    if ps.s < 2:
        raise ValueError(f"insufficient patches: s={ps.s}")
    y = ps.data.data[j - 1]
    centered = y - y.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / ps.s
    return 0.5 * (cov + cov.T)


def covariance_set(ps: PatchStack) -> CovarianceSet:
    return CovarianceSet(tuple(slice_covariance(ps, j) for j in range(1, ps.data.n3 + 1)), ps.s)


@lru_cache(maxsize=16)
def _operators(M1: int):
    n = M1 * M1
    dh = np.zeros((n, n))
    dv = np.zeros((n, n))

    def idx(i, j):
        return i + j * M1

    for j in range(M1):
        for i in range(M1):
            k = idx(i, j)
            if j < M1 - 1:
                dh[k, idx(i, j + 1)] = 1.0
                dh[k, k] = -1.0
            if i < M1 - 1:
                dv[k, idx(i + 1, j)] = 1.0
                dv[k, k] = -1.0
    dh.setflags(write=False)
    dv.setflags(write=False)
    return dh, dv


def gradient_operators(M1: int) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference matrices (kernel [-1, 1]) acting on column-major patch vectors.

    Rows for the last column (horizontal) or last row (vertical) are zero.
    """
    if M1 < 2:
        raise ValueError("window must be at least 2")
    return _operators(M1)


def gradient_trace(M1: int) -> float:
    dh, dv = gradient_operators(M1)
    return float(np.trace(dh.T @ dh + dv.T @ dv))


def weak_texture_threshold(sigma2: float, selector: TextureSelector, M1: int) -> float:
    """tau = sigma^2 F^-1(delta, N/2, (2/N) tr(Dh^T Dh + Dv^T Dv)) with N = M1^2."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if not 0.0 < selector.delta < 1.0:
        raise ValueError("delta must lie strictly inside (0, 1)")
    n = M1 * M1
    return sigma2 * gamma_cdf_inv(selector.delta, n / 2.0, 2.0 / n * gradient_trace(M1))


def patch_texture_strength(ps: PatchStack) -> np.ndarray:
    """Per-patch max eigenvalue of the 2x2 gradient matrix G^T G, max over channels."""
    dh, dv = gradient_operators(ps.M1)
    best = np.zeros(ps.s)
    for y in ps.data.data:
        gh = dh @ y
        gv = dv @ y
        a = np.einsum("ij,ij->j", gh, gh)
        c = np.einsum("ij,ij->j", gv, gv)
        b = np.einsum("ij,ij->j", gh, gv)
        lam = 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b * b)
        np.maximum(best, lam, out=best)
    return best


def select_weak_texture(ps: PatchStack, selector: TextureSelector, sigma2_init: float,
                        n: int = 8) -> PatchStack:
    """Iteratively keep the patches whose gradient strength falls below tau.

    Each round recomputes tau from the current variance, keeps patches under it
    and re-estimates the variance as the mean of the n smallest covariance
    eigenvalues of the kept set. Stops when the kept set repeats or after
    ``selector.max_iters`` rounds. An empty selection falls back to the full
    stack with a warning attached.
    """
    if selector.policy == "all":
        return ps
    if sigma2_init < 0:
        raise ValueError("sigma2_init must be >= 0")
    strength = patch_texture_strength(ps)
    sigma2 = float(sigma2_init)
    kept = None
    for _ in range(selector.max_iters):
        tau = weak_texture_threshold(sigma2, selector, ps.M1)
        keep = np.flatnonzero(strength < tau)
        if keep.size < 2:
            msg = f"weak-texture selection kept {keep.size} patches at tau={tau:.6g}; using all patches"
            log.warning(msg)
            return ps.subset(np.arange(ps.s), warnings=(msg,))
        if kept is not None and np.array_equal(keep, kept):
            break
        kept = keep
        sub = ps.subset(kept)
        sigma2 = float(np.mean(n_smallest(bdiag_spectrum(covariance_set(sub)), n)))
    return ps.subset(kept)
