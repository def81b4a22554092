"""Synthetic handwritten-style digits for runs without EMNIST files.

Each digit is a set of polylines in a unit box. A sample perturbs the
control points, applies a random affine map (scale, rotation, shear,
translation), renders the strokes with an anti-aliased distance profile at
a random pen width, and adds pixel noise.
"""
from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..rng import spawn
from .dataset import Dataset


def _ellipse(cx, cy, rx, ry, n=14, start=0.0, stop=2 * np.pi):
    t = np.linspace(start, stop, n)
    return [(cx + rx * np.cos(a), cy + ry * np.sin(a)) for a in t]


TEMPLATES = {
    0: [_ellipse(0.5, 0.5, 0.26, 0.38)],
    1: [[(0.35, 0.25), (0.52, 0.1), (0.52, 0.9)]],
    2: [[(0.22, 0.3), (0.3, 0.13), (0.5, 0.08), (0.7, 0.13), (0.77, 0.3), (0.68, 0.48), (0.22, 0.9), (0.8, 0.9)]],
    3: [[(0.22, 0.15), (0.5, 0.08), (0.74, 0.2), (0.7, 0.4), (0.45, 0.5), (0.72, 0.6), (0.77, 0.78),
         (0.5, 0.92), (0.22, 0.85)]],
    4: [[(0.64, 0.9), (0.64, 0.1), (0.2, 0.64), (0.82, 0.64)]],
    5: [[(0.77, 0.1), (0.3, 0.1), (0.26, 0.45), (0.55, 0.4), (0.75, 0.55), (0.75, 0.78), (0.5, 0.92),
         (0.22, 0.85)]],
    6: [[(0.7, 0.1), (0.42, 0.28), (0.26, 0.58), (0.3, 0.84), (0.5, 0.92), (0.7, 0.82), (0.72, 0.62),
         (0.5, 0.52), (0.28, 0.62)]],
    7: [[(0.2, 0.1), (0.8, 0.1), (0.42, 0.9)]],
    8: [_ellipse(0.5, 0.29, 0.2, 0.19), _ellipse(0.5, 0.7, 0.25, 0.21)],
    9: [_ellipse(0.5, 0.32, 0.22, 0.21), [(0.72, 0.32), (0.66, 0.9)]],
}

_GRID = np.stack(np.meshgrid(np.arange(28) + 0.5, np.arange(28) + 0.5, indexing="xy"), axis=-1).reshape(-1, 2)


def _segments(label, rng):
    segs = []
    for line in TEMPLATES[label]:
        pts = np.asarray(line, dtype=np.float64)
        pts = pts + rng.normal(0.0, 0.025, size=pts.shape)
        segs.append(np.stack([pts[:-1], pts[1:]], axis=1))
    return np.concatenate(segs)  # (S, 2, 2)


def _render(segs, rng):
    # random affine from the unit box to pixel space
    size = rng.uniform(14.0, 20.0)
    angle = np.deg2rad(rng.uniform(-15, 15))
    shear = rng.uniform(-0.3, 0.3)
    aspect = rng.uniform(0.8, 1.15)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    lin = rot @ np.array([[1.0, shear], [0.0, 1.0]]) @ np.diag([size * aspect, size])
    offset = np.array([14.0, 14.0]) + rng.uniform(-3.0, 3.0, size=2)
    p = (segs - 0.5) @ lin.T + offset
    a, b = p[:, 0], p[:, 1]
    ab = b - a
    denom = np.maximum((ab * ab).sum(axis=1), 1e-12)
    ap = _GRID[:, None, :] - a[None]
    t = np.clip((ap * ab[None]).sum(axis=2) / denom, 0.0, 1.0)
    nearest = a[None] + t[..., None] * ab[None]
    dist = np.sqrt(((_GRID[:, None, :] - nearest) ** 2).sum(axis=2)).min(axis=1)
    width = rng.uniform(0.9, 2.0)
    img = np.clip(width + 0.5 - dist, 0.0, 1.0) * rng.uniform(0.7, 1.0)
    img = img + rng.normal(0.0, 0.08, size=img.shape)
    return np.clip(img, 0.0, 1.0).reshape(28, 28)


def synth_digits(n: int, seed: int = 0) -> Dataset:
    """``n`` class-balanced synthetic digits (n // 10 or n // 10 + 1 per class)."""
    if n < 10:
        raise DomainError("synth_digits needs n >= 10")
    rng = spawn(seed, 2)
    labels = np.arange(n, dtype=np.int64) % 10
    labels = labels[rng.permutation(n)]
    images = np.empty((n, 28, 28), dtype=np.float64)
    for i, lab in enumerate(labels):
        images[i] = _render(_segments(int(lab), rng), rng)
    return Dataset(images, labels)
