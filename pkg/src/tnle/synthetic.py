"""Noise-free synthetic color images standing in for a natural-image corpus.

``flat`` images carry no structure, so after noise injection they are pure
noise. ``gradient`` images are smooth ramps with a faint long-period ripple
(low texture). ``textured`` images add stronger oriented sinusoids on top.
"""

from __future__ import annotations

import numpy as np

from tnle.tensor import Tensor3

KINDS = ("flat", "gradient", "textured")


def _grid(h: int, w: int):
    return np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")


def flat(h: int, w: int, rng: np.random.Generator) -> Tensor3:
    levels = rng.uniform(60.0, 190.0, size=3)
    return Tensor3(np.broadcast_to(levels[:, None, None], (3, h, w)))


def gradient(h: int, w: int, rng: np.random.Generator) -> Tensor3:
    yy, xx = _grid(h, w)
    span = max(h, w)
    angle = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(angle) * yy + np.sin(angle) * xx) / span
    period = rng.uniform(2.0, 4.0) * span
    phase = rng.uniform(0, 2 * np.pi)
    ripple = np.sin(2 * np.pi * (yy * np.sin(angle) - xx * np.cos(angle)) / period + phase)
    out = np.empty((3, h, w))
    for c in range(3):
        out[c] = rng.uniform(80, 170) + rng.uniform(-40, 40) * ramp + rng.uniform(0, 6) * ripple
    return Tensor3(out)


def textured(h: int, w: int, rng: np.random.Generator) -> Tensor3:
    base = gradient(h, w, rng).data.copy()
    yy, xx = _grid(h, w)
    for _ in range(2):
        angle = rng.uniform(0, np.pi)
        period = rng.uniform(16.0, 48.0)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(2 * np.pi * (np.cos(angle) * yy + np.sin(angle) * xx) / period + phase)
        base += rng.uniform(10, 25, size=3)[:, None, None] * wave
    return Tensor3(base)


def make_image(kind: str, h: int, w: int, rng: np.random.Generator) -> Tensor3:
    if kind == "flat":
        return flat(h, w, rng)
    if kind == "gradient":
        return gradient(h, w, rng)
    if kind == "textured":
        return textured(h, w, rng)
    raise ValueError(f"unknown synthetic image kind {kind!r}")


def make_corpus(kind: str, count: int, size: int = 128, seed: int = 0) -> list[Tensor3]:
    rng = np.random.default_rng(seed)
    return [make_image(kind, size, size, rng) for _ in range(count)]


def training_corpus(count: int = 20, size: int = 128, seed: int = 0) -> list[Tensor3]:
    """Alternating flat and low-texture gradient images."""
    rng = np.random.default_rng(seed)
    return [make_image("flat" if i % 2 == 0 else "gradient", size, size, rng) for i in range(count)]
