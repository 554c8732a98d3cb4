"""Exact k-nearest-neighbour graph and the shared filtration scale grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateCloudError
from .pointcloud import PointCloud

_CHUNK = 512


@dataclass(frozen=True)
class NeighborGraph:
    """Per-point neighbour lists sorted by distance (ties by index).

    ``neighbors`` and ``distances`` are n x k arrays; row i never contains i.
    """

    k: int
    neighbors: np.ndarray
    distances: np.ndarray

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]


@dataclass(frozen=True)
class ScaleGrid:
    D: float
    epsilons: np.ndarray

    @property
    def L(self) -> int:
        return len(self.epsilons)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances by explicit differences (no Gram-matrix trick,
    so equal geometric distances compare equal)."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def build_knn(pc: PointCloud, k: int) -> NeighborGraph:
    """Exact brute-force k nearest neighbours of every point.

    Ties in distance go to the smaller index.
    """
    n = pc.n
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if k > n - 1:
        raise ValueError(f"k={k} requires at least {k + 1} points, cloud has {n}")
    x = pc.points
    nbrs = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k))
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        d = pairwise_distances(x[start:stop], x)
        rows = np.arange(stop - start)
        d[rows, rows + start] = np.inf
        # stable sort keeps index order among equal distances
        nbrs[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
        dists[start:stop] = d[rows[:, None], nbrs[start:stop]]
    nbrs.setflags(write=False)
    dists.setflags(write=False)
    return NeighborGraph(int(k), nbrs, dists)


def max_kth_distance(g: NeighborGraph) -> float:
    """Largest k-th neighbour distance over all points."""
    return float(g.distances[:, g.k - 1].max())


def scale_grid(D: float, L: int) -> ScaleGrid:
    """``L`` equally spaced scales ``l * D / L`` for l = 1..L."""
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise ValueError(f"L must be a positive integer, got {L!r}")
    if not D > 0:
        raise DegenerateCloudError(f"scale grid needs D > 0, got D={D} (all neighbours coincide)")
    eps = np.arange(1, L + 1) * (D / L)
    eps[-1] = D
    eps.setflags(write=False)
    return ScaleGrid(float(D), eps)
