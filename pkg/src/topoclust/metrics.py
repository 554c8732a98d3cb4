"""External clustering agreement scores: RI, ARI and NMI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency_table(truth, pred) -> ContingencyTable:
    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.shape != p.shape:
        raise ValueError(f"label vectors differ in length: {t.size} vs {p.size}")
    if t.size < 2:
        raise ValueError("need at least two labelled points")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    counts = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return ContingencyTable(counts)


def _pairs(x) -> int:
    return sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(x))


def _pair_counts(table: ContingencyTable) -> tuple[int, int, int, int]:
    """(pairs together in both, together in truth, together in pred, all pairs)."""
    return _pairs(table.counts), _pairs(table.row_sums), _pairs(table.col_sums), _pairs([table.n])


def rand_index(truth, pred) -> float:
    """Fraction of point pairs on which the two partitions agree."""
    both, same_t, same_p, total = _pair_counts(contingency_table(truth, pred))
    agree = total - same_t - same_p + 2 * both
    return agree / total


def adjusted_rand_index(truth, pred) -> float:
    """Rand index corrected for chance (Hubert-Arabie). Returns 1.0 when
    both partitions are trivial and the index is undefined."""
    both, same_t, same_p, total = _pair_counts(contingency_table(truth, pred))
    # (index - expected) / (max - expected), scaled by 2 * total to stay integral
    num = 2 * both * total - 2 * same_t * same_p
    den = (same_t + same_p) * total - 2 * same_t * same_p
    if den == 0:
        return 1.0
    return num / den


def _entropy(counts: np.ndarray, n: int) -> float:
    c = counts[counts > 0].astype(float)
    return float(-np.sum(c / n * np.log(c / n)))


def nmi(truth, pred) -> float:
    """Mutual information over the geometric mean of the entropies."""
    table = contingency_table(truth, pred)
    n = table.n
    ht = _entropy(table.row_sums, n)
    hp = _entropy(table.col_sums, n)
    if ht == 0.0 and hp == 0.0:
        return 1.0
    if ht == 0.0 or hp == 0.0:
        return 0.0
    # I(T;P) = H(T) + H(P) - H(T,P); identical partitions give exactly 1
    mi = ht + hp - _entropy(table.counts.ravel(), n)
    return min(1.0, max(0.0, mi / math.sqrt(ht * hp)))


def all_metrics(truth, pred) -> dict:
    return {
        "ri": rand_index(truth, pred),
        "ari": adjusted_rand_index(truth, pred),
        "nmi": nmi(truth, pred),
    }
