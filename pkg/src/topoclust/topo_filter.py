"""Betti-sequence similarity on k-NN edges, whisker thresholds and pruning."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .knn import NeighborGraph

SIMILARITIES = ("cosine", "l2")


@dataclass(frozen=True)
class SimilarityTensor:
    """Per-edge, per-dimension similarity scores.

    ``scores[i, j, m]`` belongs to the directed edge from point i to its
    j-th neighbour ``neighbors[i, j]`` in homology dimension m.
    """

    neighbors: np.ndarray
    scores: np.ndarray

    @property
    def n_dims(self) -> int:
        return self.scores.shape[2]

    def pooled(self, m: int) -> np.ndarray:
        return self.scores[:, :, m].ravel()


def cosine_similarity(u, v) -> float:
    """Cosine of two nonnegative sequences.

    Two zero vectors count as identical (1.0); a single zero vector is
    maximally dissimilar (0.0).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(_cosine(u[None], v[None])[0])


def l2_similarity(u, v) -> float:
    """``1 / (1 + ||u - v||)``, the distance-based ablation of the cosine."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(_l2(u[None], v[None])[0])


def _cosine(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    dot = (u * v).sum(axis=-1)
    nu2 = (u * u).sum(axis=-1)
    nv2 = (v * v).sum(axis=-1)
    # one square root of the product keeps cos(u, u) exactly 1
    denom = np.sqrt(nu2 * nv2)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, dot / np.where(denom > 0, denom, 1.0), 0.0)
    out = np.where((nu2 == 0) & (nv2 == 0), 1.0, out)
    # rounding can push the ratio a hair past 1
    return np.clip(out, 0.0, 1.0)


def _l2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    diff = u - v
    return 1.0 / (1.0 + np.sqrt((diff * diff).sum(axis=-1)))


def edge_similarities(g: NeighborGraph, seqs: np.ndarray, metric: str = "cosine") -> SimilarityTensor:
    """Scores between each point's Betti sequences and its neighbours'.

    ``seqs`` is the n x (M+1) x L array from ``betti_sequences``.
    """
    if metric not in SIMILARITIES:
        raise ValueError(f"unknown similarity {metric!r}; expected one of {SIMILARITIES}")
    seqs = np.asarray(seqs, dtype=float)
    if seqs.ndim != 3 or seqs.shape[0] != g.n:
        raise ValueError(f"expected Betti sequences for {g.n} points, got shape {seqs.shape}")
    own = seqs[:, None, :, :]
    other = seqs[g.neighbors]
    fn = _cosine if metric == "cosine" else _l2
    return SimilarityTensor(g.neighbors, fn(own, other))


def whisker_thresholds(t: SimilarityTensor) -> np.ndarray:
    """Lower box-plot whisker ``Q1 - 1.5 * IQR`` per dimension, floored at 0.

    Quartiles use linear interpolation between order statistics.
    """
    alphas = np.empty(t.n_dims)
    for m in range(t.n_dims):
        pool = t.pooled(m)
        if pool.size == 0:
            raise ValueError(f"no similarity scores in dimension {m}")
        q1, q3 = np.percentile(pool, [25, 75], method="linear")
        alphas[m] = max(0.0, q1 - 1.5 * (q3 - q1))
    return alphas


def prune_neighborhoods(g: NeighborGraph, t: SimilarityTensor, alphas) -> np.ndarray:
    """Boolean n x k mask of neighbours kept: every dimension's score must
    reach its threshold."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (t.n_dims,):
        raise ValueError(f"expected {t.n_dims} thresholds, got shape {alphas.shape}")
    if t.scores.shape[:2] != g.neighbors.shape:
        raise ValueError("similarity tensor does not match the neighbour graph")
    return np.all(t.scores >= alphas[None, None, :], axis=2)


def neighbor_lists(g: NeighborGraph, keep: np.ndarray) -> list[list[int]]:
    return [g.neighbors[i][keep[i]].tolist() for i in range(g.n)]


def write_scores_csv(t: SimilarityTensor, path: str | Path) -> None:
    """Long-format dump ``point,neighbor,dim,score`` of every directed edge."""
    n, k, dims = t.scores.shape
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "neighbor", "dim", "score"])
        for i in range(n):
            for j in range(k):
                for m in range(dims):
                    w.writerow([i, int(t.neighbors[i, j]), m, repr(float(t.scores[i, j, m]))])
