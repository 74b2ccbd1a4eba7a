"""Hypersphere state: center initialization, distances, loss, quantile radius."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tape
from .tape import Tensor

CENTER_SNAP = 0.01  # components nearer zero than this are snapped outward


@dataclass
class Hypersphere:
    center: np.ndarray
    radius: float = 0.0
    mu: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.mu <= 1.0):
            raise ValueError(f"mu must lie in (0, 1], got {self.mu}")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        self.center = np.asarray(self.center, dtype=np.float64)


def init_center(embeddings: np.ndarray) -> np.ndarray:
    """Column mean of untrained embeddings, with small components snapped
    to +/-CENTER_SNAP so the center cannot collapse to the origin."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] == 0:
        raise ValueError("need a non-empty N x D embedding matrix")
    c = embeddings.mean(axis=0)
    small = np.abs(c) < CENTER_SNAP
    sign = np.where(c < 0, -1.0, 1.0)  # zero counts as positive
    c[small] = sign[small] * CENTER_SNAP
    return c


def distances(embeddings: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Euclidean distances ||z_i - c|| (not squared)."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    if embeddings.shape[1] != center.shape[0]:
        raise ValueError(
            f"dimension mismatch: embeddings D={embeddings.shape[1]}, "
            f"center D={center.shape[0]}")
    diff = embeddings - center
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def sphere_loss(embeddings, sphere: Hypersphere):
    """r^2 + (1/(mu N)) sum_i max(0, ||z_i - c||^2 - r^2).

    Accepts a plain array (returns a float) or a tape Tensor (returns a
    differentiable scalar).
    """
    if isinstance(embeddings, Tensor):
        return tape.hinge_sphere(embeddings, sphere.center, sphere.radius, sphere.mu)
    if not (0.0 < sphere.mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1], got {sphere.mu}")
    d = distances(embeddings, sphere.center)
    n = len(d)
    viol = d * d - sphere.radius ** 2
    return sphere.radius ** 2 + float(np.sum(np.maximum(viol, 0.0))) / (sphere.mu * n)


def update_radius(dists: np.ndarray, mu: float) -> float:
    """Nearest-rank (1-mu) quantile of the training distances.

    At most a mu fraction of points end up strictly outside the radius.
    """
    dists = np.asarray(dists, dtype=np.float64)
    if dists.size == 0:
        raise ValueError("cannot update radius from empty distances")
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    srt = np.sort(dists)
    n = len(srt)
    rank = int(np.ceil((1.0 - mu) * n))
    rank = min(max(rank, 1), n)
    return float(srt[rank - 1])
