"""End-to-end clustering run: k-NN graph, local Betti sequences, pruning,
spectral embedding, k-means."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .homology import betti_sequences, resolve_threads
from .knn import NeighborGraph, ScaleGrid, build_knn, max_kth_distance, scale_grid
from .metrics import all_metrics
from .pointcloud import BENCHMARKS, PointCloud, add_gaussian_noise, gen_benchmark, load_csv
from .spectral import (
    KERNELS,
    Embedding,
    build_adjacency,
    data_sigma,
    kmeans,
    laplacian,
    smallest_eigenvectors,
)
from .topo_filter import SIMILARITIES, SimilarityTensor, edge_similarities, prune_neighborhoods, whisker_thresholds


@dataclass
class RunConfig:
    input: str
    p: int
    k: int = 10
    L: int = 10
    M: int = 1
    seed: int = 0
    rho: float = 0.0
    similarity: str = "cosine"
    kernel: str = "gaussian"
    out: Optional[str] = None
    label_column: Optional[str] = "auto"
    threads: Optional[int] = None

    def validate(self) -> "RunConfig":
        for name, lo in (("k", 1), ("L", 1), ("M", 0), ("p", 1)):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < lo:
                raise ValueError(f"{name} must be an integer >= {lo}, got {v!r}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if self.similarity not in SIMILARITIES:
            raise ValueError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunResult:
    labels: np.ndarray
    report: dict
    cloud: PointCloud
    sequences: np.ndarray
    scores: SimilarityTensor
    embedding: Embedding
    timings: dict = field(default_factory=dict)


def derive_seed(seed: int, tag: int) -> int:
    """Independent child seed for one consumer of the run seed."""
    state = np.random.SeedSequence([int(seed), int(tag)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


NOISE_TAG, EIGEN_TAG, KMEANS_TAG = 1, 2, 3


def make_dataset(name: str, seed: int, rho: float = 0.0) -> PointCloud:
    pc = gen_benchmark(name, seed)
    return add_gaussian_noise(pc, rho, derive_seed(seed, NOISE_TAG))


def load_input(cfg: RunConfig) -> PointCloud:
    """Benchmark name or CSV path, with optional noise applied."""
    if cfg.input in BENCHMARKS:
        return make_dataset(cfg.input, cfg.seed, cfg.rho)
    path = Path(cfg.input)
    label_column = cfg.label_column
    if label_column == "auto":
        label_column = None
        if path.is_file():
            with path.open(encoding="utf-8") as fh:
                header = [h.strip() for h in fh.readline().split(",")]
            if "label" in header:
                label_column = "label"
    pc = load_csv(path, label_column)
    return add_gaussian_noise(pc, cfg.rho, derive_seed(cfg.seed, NOISE_TAG))


class _Clock:
    def __init__(self):
        self.stages: dict[str, float] = {}
        self._t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.stages[name] = now - self._t
        self._t = now


def run_pipeline(pc: PointCloud, cfg: RunConfig, cache: Optional[dict] = None) -> RunResult:
    """Cluster ``pc`` according to ``cfg``.

    ``cache`` may be shared between calls on the same cloud; it memoizes the
    k-NN graph, scale grid and Betti sequences per (k, L, M).
    """
    cfg.validate()
    if cfg.k > pc.n - 1:
        raise ValueError(f"k={cfg.k} too large for {pc.n} points")
    if cfg.p > pc.n:
        raise ValueError(f"p={cfg.p} exceeds the number of points ({pc.n})")
    clock = _Clock()
    threads = resolve_threads(cfg.threads)
    sigma = data_sigma(pc)

    key = ("topo", cfg.k, cfg.L, cfg.M)
    if cache is not None and key in cache:
        g, grid, seqs = cache[key]
        clock.lap("cached_topology")
    else:
        g: NeighborGraph = build_knn(pc, cfg.k)
        clock.lap("knn")
        grid: ScaleGrid = scale_grid(max_kth_distance(g), cfg.L)
        seqs = betti_sequences(pc, g, grid, cfg.M, threads=threads)
        clock.lap("betti_sequences")
        if cache is not None:
            cache[key] = (g, grid, seqs)

    scores = edge_similarities(g, seqs, cfg.similarity)
    alphas = whisker_thresholds(scores)
    keep = prune_neighborhoods(g, scores, alphas)
    clock.lap("filter")

    A = build_adjacency(pc, g, keep, sigma, cfg.kernel)
    Lap = laplacian(A)
    clock.lap("graph")
    emb = smallest_eigenvectors(Lap, cfg.p, seed=derive_seed(cfg.seed, EIGEN_TAG))
    clock.lap("eigen")
    labels = kmeans(emb.U, cfg.p, derive_seed(cfg.seed, KMEANS_TAG))
    clock.lap("kmeans")

    n_components = _count_components(A)
    report = {
        "tool": "topoclust",
        "version": __version__,
        "config": cfg.to_dict(),
        "n": pc.n,
        "d": pc.d,
        "sigma": sigma,
        "D": grid.D,
        "epsilons": grid.epsilons.tolist(),
        "alphas": alphas.tolist(),
        "edges_directed_before": int(g.n * g.k),
        "edges_directed_after": int(keep.sum()),
        "edges_mutual": int(A.nnz // 2),
        "isolated_points": int(np.count_nonzero(np.diff(A.indptr) == 0)),
        "graph_components": n_components,
        "eigenvalues": emb.eigenvalues.tolist(),
        "timings": dict(clock.stages),
    }
    if pc.labels is not None:
        report.update(all_metrics(pc.labels, labels))
    return RunResult(labels, report, pc, seqs, scores, emb, dict(clock.stages))


def _count_components(A) -> int:
    from scipy.sparse.csgraph import connected_components

    return int(connected_components(A, directed=False)[0])
