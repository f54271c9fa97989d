"""Dense third-order tensors and the T-product algebra.

A tensor of size n1 x n2 x n3 is held as a C-ordered array of shape
``(n3, n1, n2)``: frontal slices outermost, each slice row-major. Slice
indices in the public API are 1-based to match the usual notation
``A_i = A(:, :, i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Immutable real tensor of size n1 x n2 x n3 (float64)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"tensor data must be a non-empty 3-d array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_slices(cls, slices: Sequence[np.ndarray]) -> "Tensor3":
        return cls(np.stack([np.asarray(s, dtype=np.float64) for s in slices]))

    @classmethod
    def from_hwc(cls, image: np.ndarray) -> "Tensor3":
        """Build from a height x width x channels array (channel c becomes slice c+1)."""
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3:
            raise ValueError("expected an H x W x C array")
        return cls(np.moveaxis(image, 2, 0))

    @classmethod
    def zeros(cls, n1: int, n2: int, n3: int) -> "Tensor3":
        return cls(np.zeros((n3, n1, n2)))

    @property
    def n1(self) -> int:
        return self.data.shape[1]

    @property
    def n2(self) -> int:
        return self.data.shape[2]

    @property
    def n3(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    def to_hwc(self) -> np.ndarray:
        return np.ascontiguousarray(np.moveaxis(self.data, 0, 2))

    def slices(self) -> list[np.ndarray]:
        return [self.data[k] for k in range(self.n3)]

    def __eq__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"Tensor3({self.n1}x{self.n2}x{self.n3})"


def frontal_slice(t: Tensor3, i: int) -> np.ndarray:
    """Return the i-th frontal slice (1-based) as a read-only n1 x n2 view."""
    if not 1 <= i <= t.n3:
        raise IndexError(f"slice index {i} out of range 1..{t.n3}")
    return t.data[i - 1]


def circ(t: Tensor3) -> np.ndarray:
    """Block-circulant expansion; block (p, q) is slice ((p - q) mod n3) + 1."""
    n1, n2, n3 = t.shape
    out = np.empty((n1 * n3, n2 * n3))
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = t.data[(p - q) % n3]
    return out


def mat_vec(t: Tensor3) -> np.ndarray:
    """Stack the frontal slices vertically, slice 1 on top."""
    return t.data.reshape(t.n3 * t.n1, t.n2).copy()


# the unfold of a T-product result is its MatVec
unfold = mat_vec


def fold(m: np.ndarray, n3: int) -> Tensor3:
    """Inverse of :func:`mat_vec`."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or n3 < 1 or m.shape[0] % n3:
        raise ValueError(f"fold shape: {m.shape} rows not divisible by n3={n3}")
    return Tensor3(m.reshape(n3, m.shape[0] // n3, m.shape[1]))


def t_product(a: Tensor3, b: Tensor3) -> Tensor3:
    """T-product ``a * b = fold(circ(a) @ mat_vec(b))``.

    Evaluated slice by slice as C_k = sum_q A_{(k-q) mod n3} B_q, which is the
    block-row k of circ(a) times mat_vec(b); no FFT.
    """
    if a.n2 != b.n1 or a.n3 != b.n3:
        raise ValueError(f"t-product shape mismatch: {a.shape} * {b.shape}")
    n3 = a.n3
    out = np.zeros((n3, a.n1, b.n2))
    for k in range(n3):
        for q in range(n3):
            out[k] += a.data[(k - q) % n3] @ b.data[q]
    return Tensor3(out)


def identity_slice_tensor(m: int, n3: int, i: int) -> Tensor3:
    """m x m x n3 tensor whose i-th slice (1-based) is the identity, all others zero."""
    if m < 1 or not 1 <= i <= n3:
        raise IndexError(f"slice index {i} out of range 1..{n3}")
    data = np.zeros((n3, m, m))
    data[i - 1] = np.eye(m)
    return Tensor3(data)


@dataclass(frozen=True, eq=False)
class BlockDiagMatrix:
    """Block-diagonal matrix kept as its ordered list of square blocks."""

    blocks: tuple

    @property
    def r(self) -> int:
        return sum(b.shape[0] for b in self.blocks)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.r, self.r))
        k = 0
        for b in self.blocks:
            m = b.shape[0]
            out[k:k + m, k:k + m] = b
            k += m
        return out

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues: the sorted union of the block spectra."""
        from tnle.spectral import sym_eig

        return np.sort(np.concatenate([sym_eig(b) for b in self.blocks]))


def bdiag(blocks: Sequence[np.ndarray]) -> BlockDiagMatrix:
    checked = []
    for b in blocks:
        b = np.array(b, dtype=np.float64)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"bdiag block must be square, got shape {b.shape}")
        b.setflags(write=False)
        checked.append(b)
    if not checked:
        raise ValueError("bdiag needs at least one block")
    return BlockDiagMatrix(tuple(checked))


def bdiag_from_stacked(b: np.ndarray, n3: int) -> BlockDiagMatrix:
    """Split an (n3*m) x m stacked matrix, e.g. unfold(B * I_2), into its diagonal blocks."""
    m = b.shape[1]
    if b.shape[0] != n3 * m:
        raise ValueError(f"expected a stack of {n3} square blocks, got shape {b.shape}")
    return bdiag([b[k * m:(k + 1) * m] for k in range(n3)])
