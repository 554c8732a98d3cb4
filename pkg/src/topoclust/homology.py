"""Local Vietoris-Rips persistence over GF(2) and per-point Betti sequences.

Boundary columns are held as Python integers used as bitsets: bit ``r`` is
set when the simplex at filtration position ``r`` is a face. Adding two
columns over GF(2) is then a single XOR and the pivot ("low") of a column
is its highest set bit.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import FiltrationError
from .knn import NeighborGraph, ScaleGrid, pairwise_distances
from .pointcloud import PointCloud

THREADS_ENV = "TOPOCLUST_THREADS"
BRUTEFORCE_MAX_POINTS = 12


class Simplex(NamedTuple):
    vertices: tuple
    filtration_value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class Filtration:
    """Simplices in filtration order: (value, dimension, lexicographic).

    Stored column-wise: ``vertices`` is S x (max_dim + 1) padded with -1.
    """

    vertices: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    max_dim: int

    def __len__(self) -> int:
        return len(self.dims)

    @property
    def simplices(self) -> list[Simplex]:
        return [
            Simplex(tuple(int(v) for v in row[: q + 1]), float(val))
            for row, q, val in zip(self.vertices, self.dims, self.values)
        ]

    @classmethod
    def from_simplices(cls, simplices: Iterable, max_dim: Optional[int] = None) -> "Filtration":
        """Build a filtration from ``Simplex`` objects or ``(vertices, value)``
        pairs, sorting them into filtration order."""
        items = [Simplex(tuple(s[0]), float(s[1])) for s in simplices]
        for s in items:
            if len(s.vertices) == 0:
                raise FiltrationError("empty simplex")
            if any(a >= b for a, b in zip(s.vertices, s.vertices[1:])):
                raise FiltrationError(f"vertices of {s.vertices} are not strictly ascending")
        top = max((s.dim for s in items), default=0)
        if max_dim is None:
            max_dim = top
        elif top > max_dim:
            raise FiltrationError(f"simplex of dimension {top} exceeds max_dim={max_dim}")
        items.sort(key=lambda s: (s.filtration_value, s.dim, s.vertices))
        verts = np.full((len(items), max_dim + 1), -1, dtype=np.int64)
        for row, s in zip(verts, items):
            row[: len(s.vertices)] = s.vertices
        dims = np.array([s.dim for s in items], dtype=np.int64)
        vals = np.array([s.filtration_value for s in items], dtype=float)
        return cls(verts, dims, vals, int(max_dim))


@dataclass(frozen=True)
class Barcode:
    """Persistence intervals per homology dimension.

    ``intervals[m]`` is a (count, 2) array of (birth, death); essential
    classes have death ``inf``.
    """

    intervals: tuple

    @property
    def max_dim(self) -> int:
        return len(self.intervals) - 1

    def betti_curve(self, epsilons: Sequence[float]) -> np.ndarray:
        """(max_dim + 1) x L matrix of Betti numbers at each scale."""
        eps = np.asarray(epsilons, dtype=float)
        out = np.empty((len(self.intervals), len(eps)), dtype=np.int64)
        for m, iv in enumerate(self.intervals):
            alive = (iv[:, :1] <= eps[None, :]) & (eps[None, :] < iv[:, 1:])
            out[m] = alive.sum(axis=0)
        return out

    def to_jsonl(self, index: int) -> Iterator[str]:
        for m, iv in enumerate(self.intervals):
            for birth, death in iv:
                yield json.dumps({
                    "point": int(index),
                    "dim": m,
                    "birth": float(birth),
                    "death": "inf" if math.isinf(death) else float(death),
                })


@lru_cache(maxsize=256)
def _combinations(m: int, size: int) -> np.ndarray:
    if size > m:
        return np.empty((0, size), dtype=np.int64)
    c = np.array(list(itertools.combinations(range(m), size)), dtype=np.int64)
    c.setflags(write=False)
    return c.reshape(-1, size)


@lru_cache(maxsize=64)
def _pairs(size: int) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.triu_indices(size, k=1)
    return a, b


@lru_cache(maxsize=64)
def _binomials(n: int, kmax: int) -> np.ndarray:
    table = np.zeros((n + 1, kmax + 1), dtype=np.int64)
    for v in range(n + 1):
        for j in range(kmax + 1):
            table[v, j] = math.comb(v, j)
    return table


def local_point_set(pc: PointCloud, g: NeighborGraph, i: int) -> np.ndarray:
    """The point ``x_i`` followed by its k neighbours, as a (k+1) x d array."""
    if not 0 <= i < pc.n:
        raise IndexError(f"point index {i} out of range for {pc.n} points")
    return pc.points[np.concatenate(([i], g.neighbors[i]))]


def build_vr_filtration(points: np.ndarray, max_dim: int, max_scale: float) -> Filtration:
    """Vietoris-Rips filtration truncated at ``max_scale``.

    Every vertex subset of at most ``max_dim + 1`` points whose pairwise
    distances are all ``<= max_scale`` is included, valued by its longest
    edge. Enumeration is exhaustive over subsets, which is intended for
    small local neighbourhoods.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[0]
    if m < 1:
        raise ValueError("need at least one point")
    if max_dim < 0:
        raise ValueError(f"max_dim must be >= 0, got {max_dim}")
    if not max_scale > 0:
        raise ValueError(f"max_scale must be positive, got {max_scale}")
    dist = pairwise_distances(pts, pts)

    blocks_v, blocks_d, blocks_val, blocks_lex = [], [], [], []
    width = max_dim + 1
    for q in range(0, min(max_dim, m - 1) + 1):
        combos = _combinations(m, q + 1)
        if q == 0:
            vals = np.zeros(m)
        else:
            a, b = _pairs(q + 1)
            vals = dist[combos[:, a], combos[:, b]].max(axis=1)
        keep = np.flatnonzero(vals <= max_scale)
        if keep.size == 0:
            break
        v = np.full((keep.size, width), -1, dtype=np.int64)
        v[:, : q + 1] = combos[keep]
        blocks_v.append(v)
        blocks_d.append(np.full(keep.size, q, dtype=np.int64))
        blocks_val.append(vals[keep])
        blocks_lex.append(keep)

    verts = np.concatenate(blocks_v)
    dims = np.concatenate(blocks_d)
    vals = np.concatenate(blocks_val)
    order = np.lexsort((np.concatenate(blocks_lex), dims, vals))
    return Filtration(verts[order], dims[order], vals[order], int(max_dim))


def _boundary_columns(f: Filtration, top: int) -> list[int]:
    """GF(2) boundary of every simplex of dimension <= ``top`` as bitsets."""
    size = len(f)
    cols = [0] * size
    if size == 0:
        return cols
    nverts = int(f.vertices.max()) + 1
    binom = _binomials(nverts, f.max_dim + 1)
    position = np.arange(size)

    def keys(v: np.ndarray) -> np.ndarray:
        # colex rank of sorted vertex tuples, unique within one dimension
        return binom[v, np.arange(1, v.shape[1] + 1)[None, :]].sum(axis=1)

    for q in range(1, min(top, f.max_dim) + 1):
        sel = np.flatnonzero(f.dims == q)
        if sel.size == 0:
            continue
        low_sel = np.flatnonzero(f.dims == q - 1)
        vq = f.vertices[sel, : q + 1]
        if low_sel.size == 0:
            raise FiltrationError(f"filtration is not face-closed: no faces for {tuple(vq[0])}")
        low_keys = keys(f.vertices[low_sel, :q])
        order = np.argsort(low_keys, kind="stable")
        sorted_keys = low_keys[order]
        face_pos = np.empty((sel.size, q + 1), dtype=np.int64)
        for c in range(q + 1):
            fk = keys(np.delete(vq, c, axis=1))
            at = np.minimum(np.searchsorted(sorted_keys, fk), len(sorted_keys) - 1)
            found = sorted_keys[at] == fk
            if not np.all(found):
                bad = vq[np.flatnonzero(~found)[0]]
                raise FiltrationError(f"filtration is not face-closed: a face of {tuple(bad)} is missing")
            face_pos[:, c] = position[low_sel[order[at]]]
        late = face_pos.max(axis=1) > sel
        if np.any(late):
            bad = vq[np.flatnonzero(late)[0]]
            raise FiltrationError(f"filtration is not face-closed: a face of {tuple(bad)} appears after it")
        for j, row in zip(sel.tolist(), face_pos.tolist()):
            col = 0
            for r in row:
                col |= 1 << r
            cols[j] = col
    return cols


def compute_barcode(f: Filtration, max_hom_dim: int, clearing: bool = True) -> Barcode:
    """Persistence barcode in dimensions 0..``max_hom_dim`` over GF(2).

    Standard column reduction in filtration order; with ``clearing`` the
    dimensions are processed top-down and columns of simplices already
    known to be positive are zeroed without reduction. Both variants give
    identical pairings.
    """
    M = int(max_hom_dim)
    if M < 0:
        raise ValueError(f"max_hom_dim must be >= 0, got {M}")
    if f.max_dim < M + 1:
        raise ValueError(f"filtration max_dim={f.max_dim} is too small for H_{M}; need >= {M + 1}")
    top = M + 1
    cols = _boundary_columns(f, top)
    dims = f.dims.tolist()

    pivot_owner: dict[int, int] = {}
    reduced: dict[int, int] = {}
    if clearing:
        schedule = [j for q in range(top, 0, -1) for j in range(len(dims)) if dims[j] == q]
    else:
        schedule = [j for j in range(len(dims)) if 1 <= dims[j] <= top]
    cleared: set[int] = set()
    for j in schedule:
        if j in cleared:
            continue
        col = cols[j]
        while col:
            low = col.bit_length() - 1
            other = pivot_owner.get(low)
            if other is None:
                pivot_owner[low] = j
                reduced[j] = col
                if clearing:
                    cleared.add(low)
                break
            col ^= reduced[other]

    vals = f.values
    out = [[] for _ in range(M + 1)]
    for birth_pos, death_pos in pivot_owner.items():
        q = dims[birth_pos]
        if q <= M:
            out[q].append((vals[birth_pos], vals[death_pos]))
    for j, q in enumerate(dims):
        if q <= M and j not in reduced and j not in pivot_owner:
            out[q].append((vals[j], math.inf))
    intervals = tuple(
        np.array(sorted(iv), dtype=float).reshape(-1, 2) for iv in out
    )
    return Barcode(intervals)


def betti_at_scale(b: Barcode, m: int, eps: float) -> int:
    """Number of dimension-``m`` intervals with ``birth <= eps < death``."""
    if not 0 <= m <= b.max_dim:
        raise ValueError(f"dimension {m} outside barcode range 0..{b.max_dim}")
    iv = b.intervals[m]
    return int(np.count_nonzero((iv[:, 0] <= eps) & (eps < iv[:, 1])))


def _point_sequences(args) -> np.ndarray:
    points, neighbors, indices, eps, D, M = args
    out = np.empty((len(indices), M + 1, len(eps)), dtype=np.int64)
    for row, i in enumerate(indices):
        local = points[np.concatenate(([i], neighbors[i]))]
        f = build_vr_filtration(local, M + 1, D)
        out[row] = compute_barcode(f, M).betti_curve(eps)
    return out


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    if threads <= 0:
        threads = os.cpu_count() or 1
    return int(threads)


def betti_sequences(
    pc: PointCloud,
    g: NeighborGraph,
    grid: ScaleGrid,
    M: int,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Betti sequences of every point's local complex.

    Returns an n x (M+1) x L integer array; entry [i, m, l] is the m-th
    Betti number of the Rips complex of ``{x_i} + N(x_i)`` at scale
    ``grid.epsilons[l]``. Every local filtration is truncated at ``grid.D``.

    ``threads`` (default: ``$TOPOCLUST_THREADS`` or 1; <= 0 means all
    cores) sets the number of worker processes. Output does not depend on it.
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    threads = resolve_threads(threads)
    idx = np.arange(pc.n)
    if threads == 1 or pc.n < 64:
        return _point_sequences((pc.points, g.neighbors, idx, grid.epsilons, grid.D, M))
    chunks = np.array_split(idx, threads * 4)
    jobs = [(pc.points, g.neighbors, c, grid.epsilons, grid.D, M) for c in chunks if len(c)]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(_point_sequences, jobs))
    return np.concatenate(parts, axis=0)


def _gf2_rank(rows: list[int]) -> int:
    basis: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in basis:
                r ^= basis[top]
            else:
                basis[top] = r
                rank += 1
                break
    return rank


def betti_bruteforce(points, eps: float, m: int, max_points: int = BRUTEFORCE_MAX_POINTS) -> int:
    """Betti number of the Rips complex at a single scale by matrix ranks.

    Enumerates the complex directly and returns
    ``(#m-simplices - rank d_m) - rank d_{m+1}`` with ranks taken by
    Gaussian elimination over GF(2). Meant as a reference for small inputs.
    """
    pts = [tuple(float(c) for c in np.atleast_1d(p)) for p in points]
    n = len(pts)
    if n > max_points:
        raise ValueError(f"brute-force Betti limited to {max_points} points, got {n}")
    if m < 0:
        raise ValueError("m must be >= 0")
    close = [[math.dist(pts[a], pts[b]) <= eps for b in range(n)] for a in range(n)]

    def simplices(q):
        return [
            s for s in itertools.combinations(range(n), q + 1)
            if all(close[a][b] for a, b in itertools.combinations(s, 2))
        ]

    def boundary_rank(q):
        if q == 0:
            return 0
        faces = {s: i for i, s in enumerate(simplices(q - 1))}
        rows = []
        for s in simplices(q):
            bits = 0
            for drop in range(q + 1):
                bits |= 1 << faces[s[:drop] + s[drop + 1:]]
            rows.append(bits)
        return _gf2_rank(rows)

    n_m = len(simplices(m))
    return n_m - boundary_rank(m) - boundary_rank(m + 1)
