"""Topology-aware weighted graph, unnormalized Laplacian, spectral
embedding and seeded k-means."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .exceptions import ConvergenceError, DegenerateCloudError
from .knn import NeighborGraph
from .pointcloud import PointCloud, make_rng

KERNELS = ("gaussian", "none")

# Blocks larger than this go to shift-invert ARPACK.
DENSE_CUTOFF = 1500
_SHIFT = -1e-3


@dataclass(frozen=True)
class Embedding:
    U: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    history: tuple


def data_sigma(pc: PointCloud) -> float:
    """Root total variance about the centroid, sqrt(mean ||x - mean||^2)."""
    if pc.n < 2:
        raise ValueError("data_sigma needs at least two points")
    centered = pc.points - pc.points.mean(axis=0)
    sigma = float(np.sqrt((centered * centered).sum(axis=1).mean()))
    if sigma == 0.0:
        raise DegenerateCloudError("degenerate cloud: all points coincide (sigma = 0)")
    return sigma


def build_adjacency(
    pc: PointCloud,
    g: NeighborGraph,
    keep: np.ndarray,
    sigma: float,
    kernel: str = "gaussian",
) -> sp.csr_matrix:
    """Symmetric weighted adjacency over mutual pruned neighbours.

    ``keep`` is the n x k mask from ``prune_neighborhoods``. Edge (i, j)
    survives only when each endpoint keeps the other; its weight is
    ``exp(-||x_i - x_j||^2 / (2 sigma^2))``, or 1 with ``kernel="none"``.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n = g.n
    rows = np.repeat(np.arange(n), g.k)[keep.ravel()]
    cols = g.neighbors.ravel()[keep.ravel()]
    dist = g.distances.ravel()[keep.ravel()]
    directed = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    mutual = directed.multiply(directed.T).tocsr()

    upper = (rows < cols) & np.asarray(mutual[rows, cols]).ravel().astype(bool)
    r, c, d = rows[upper], cols[upper], dist[upper]
    if kernel == "gaussian":
        w = np.exp(-(d * d) / (2.0 * sigma * sigma))
    else:
        w = np.ones(r.size)
    half = sp.coo_matrix((w, (r, c)), shape=(n, n))
    A = (half + half.T).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def laplacian(A) -> sp.csr_matrix:
    """Unnormalized Laplacian ``L = D - A`` of a symmetric adjacency."""
    A = sp.csr_matrix(A, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got {A.shape}")
    if (A != A.T).nnz:
        raise ValueError("adjacency matrix is not symmetric")
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = (sp.diags(deg) - A).tocsr()
    L.sort_indices()
    return L


def _fix_signs(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def _block_eigs(B, r: int, seed: int, dense_cutoff: int):
    """``r`` smallest eigenpairs of one symmetric block."""
    size = B.shape[0]
    if size <= dense_cutoff or r >= size - 1:
        vals, vecs = scipy.linalg.eigh(B.toarray(), subset_by_index=[0, r - 1])
        return vals, vecs
    v0 = make_rng(seed).standard_normal(size)
    try:
        vals, vecs = eigsh(B.tocsc(), k=r, sigma=_SHIFT, which="LM", v0=v0)
    except (ArpackNoConvergence, ArpackError) as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals, kind="stable")
    vecs, _ = np.linalg.qr(vecs[:, order])
    return vals[order], vecs


def smallest_eigenvectors(L, p: int, seed: int = 0, dense_cutoff: int = DENSE_CUTOFF) -> Embedding:
    """The ``p`` smallest eigenpairs of a symmetric PSD matrix.

    The matrix is split into the connected blocks of its sparsity graph and
    each block is solved separately (dense LAPACK up to ``dense_cutoff``
    rows, seeded shift-invert Lanczos above). For Laplacian blocks the null
    vector is the exact normalized block indicator; when the null space is
    larger than ``p``, indicators of larger blocks come first.

    Eigenvalues are returned ascending; each eigenvector is signed so that
    its largest-magnitude entry is positive.
    """
    L = sp.csr_matrix(L, dtype=float)
    n = L.shape[0]
    if L.shape != (n, n):
        raise ValueError(f"matrix must be square, got {L.shape}")
    if not 1 <= p <= n:
        raise ValueError(f"p must satisfy 1 <= p <= n={n}, got {p}")
    n_blocks, block_of = connected_components(L, directed=False)
    members = [np.flatnonzero(block_of == b) for b in range(n_blocks)]
    row_sums = np.abs(np.asarray(L.sum(axis=1)).ravel())
    scale = max(1.0, float(np.abs(L.diagonal()).max(initial=0.0)))

    # (eigenvalue, -block size, first member, rank within block, block, vector)
    candidates = []
    pending = []
    for b, idx in enumerate(members):
        is_laplacian = bool(np.all(row_sums[idx] <= 1e-10 * scale * max(1, idx.size)))
        if is_laplacian:
            candidates.append((0.0, -idx.size, idx[0], 0, b, np.full(idx.size, 1.0 / np.sqrt(idx.size))))
        pending.append((b, idx, is_laplacian))

    zeros = len(candidates)
    want = p - zeros
    if want > 0:
        for b, idx, is_laplacian in pending:
            extra = 1 if is_laplacian else 0
            r = min(want + extra, idx.size)
            if r - extra <= 0:
                continue
            block = L[idx][:, idx]
            vals, vecs = _block_eigs(block, r, derive_block_seed(seed, b), dense_cutoff)
            for j in range(extra, r):
                candidates.append((float(vals[j]), -idx.size, idx[0], j, b, vecs[:, j]))

    candidates.sort(key=lambda c: c[:4])
    chosen = candidates[:p]
    U = np.zeros((n, p))
    for col, (_, _, _, _, b, vec) in enumerate(chosen):
        U[members[b], col] = vec
    vals = np.array([c[0] for c in chosen])
    return Embedding(_fix_signs(U), vals)


def derive_block_seed(seed: int, block: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(block)]).generate_state(1, dtype=np.uint64)[0])


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return (diff * diff).sum(axis=-1)


def _plusplus(X: np.ndarray, p: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((p, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for c in range(1, p):
        total = closest.sum()
        if total > 0:
            pick = rng.choice(n, p=closest / total)
        else:
            pick = rng.integers(n)
        centers[c] = X[pick]
        closest = np.minimum(closest, _sq_dists(X, centers[c : c + 1])[:, 0])
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int):
    n, p = X.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    history = []
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centers)
        new = np.argmin(d, axis=1)
        history.append(float(d[np.arange(n), new].sum()))
        if np.array_equal(new, labels):
            return labels, centers, history, it
        labels = new
        counts = np.bincount(labels, minlength=p)
        for empty in np.flatnonzero(counts == 0):
            cost = ((X - centers[labels]) ** 2).sum(axis=1)
            cost[counts[labels] <= 1] = -1.0
            far = int(np.argmax(cost))
            counts[labels[far]] -= 1
            labels[far] = empty
            counts[empty] = 1
            centers[empty] = X[far]
        for c in range(p):
            centers[c] = X[labels == c].mean(axis=0)
    d = _sq_dists(X, centers)
    history.append(float(d[np.arange(n), labels].sum()))
    return labels, centers, history, max_iter


def kmeans_fit(U, p: int, seed: int, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``n_init`` restarts
    by within-cluster sum of squares."""
    X = np.asarray(U, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"cannot form {p} clusters from {n} points")
    rng = make_rng(seed)
    best = None
    for _ in range(n_init):
        centers = _plusplus(X, p, rng)
        labels, centers, history, n_iter = _lloyd(X, centers, max_iter)
        inertia = float(_sq_dists(X, centers)[np.arange(n), labels].sum())
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels.copy(), centers.copy(), inertia, n_iter, tuple(history))
    return best


def kmeans(U, p: int, seed: int, n_init: int = 10, max_iter: int = 300) -> np.ndarray:
    return kmeans_fit(U, p, seed, n_init=n_init, max_iter=max_iter).labels


def write_embedding(emb: Embedding, csv_path: str | Path, json_path: str | Path) -> None:
    np.savetxt(csv_path, emb.U, delimiter=",", fmt="%.17g")
    Path(json_path).write_text(json.dumps([float(v) for v in emb.eigenvalues]) + "\n")
