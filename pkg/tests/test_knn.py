import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoclust.exceptions import DegenerateCloudError
from topoclust.knn import build_knn, max_kth_distance, scale_grid
from topoclust.pointcloud import PointCloud


def knn_oracle(points, k):
    """Sort every other point by (distance, index) with plain Python."""
    out = []
    for i, p in enumerate(points):
        cand = sorted((math.dist(p, q), j) for j, q in enumerate(points) if j != i)
        out.append([j for _, j in cand[:k]])
    return out


def test_line_k1(line3):
    g = build_knn(line3, 1)
    assert g.neighbors.tolist() == [[1], [0], [1]]
    assert g.distances.tolist() == [[1.0], [1.0], [2.0]]
    assert max_kth_distance(g) == 2.0


def test_line_k2(line3):
    g = build_knn(line3, 2)
    assert g.neighbors.tolist() == [[1, 2], [0, 2], [1, 0]]
    assert max_kth_distance(g) == 3.0


@pytest.mark.parametrize("k", [0, 3])
def test_k_out_of_range(line3, k):
    with pytest.raises(ValueError):
        build_knn(line3, k)


def test_ties_go_to_smaller_index():
    pc = PointCloud(np.array([[0.0], [-1.0], [1.0], [2.0]]))
    assert build_knn(pc, 2).neighbors[0].tolist() == [1, 2]


def test_coincident_points_have_zero_D():
    g = build_knn(PointCloud(np.zeros((4, 2))), 2)
    assert max_kth_distance(g) == 0.0
    with pytest.raises(DegenerateCloudError):
        scale_grid(max_kth_distance(g), 5)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 30).flatmap(
        lambda n: st.tuples(
            st.lists(
                st.lists(st.integers(-5, 5).map(float), min_size=2, max_size=2),
                min_size=n, max_size=n,
            ),
            st.integers(1, n - 1),
        )
    )
)
def test_matches_oracle(data):
    # integer lattice coordinates produce many exact ties
    pts, k = data
    g = build_knn(PointCloud(np.array(pts)), k)
    assert g.neighbors.tolist() == knn_oracle(pts, k)
    assert np.all(np.diff(g.distances, axis=1) >= 0)
    for i in range(len(pts)):
        assert i not in g.neighbors[i]
        for j, d in zip(g.neighbors[i], g.distances[i]):
            assert d == pytest.approx(math.dist(pts[i], pts[j]), abs=1e-12)


def test_reordering_relabels():
    rng = np.random.default_rng(0)
    x = rng.random((60, 3))
    perm = rng.permutation(60)
    a = build_knn(PointCloud(x), 5)
    b = build_knn(PointCloud(x[perm]), 5)
    # neighbour sets agree after mapping indices back (distances are unique)
    for new_i, old_i in enumerate(perm):
        assert sorted(perm[b.neighbors[new_i]]) == sorted(a.neighbors[old_i])


@pytest.mark.parametrize(
    "D,L,expected",
    [(2.0, 4, [0.5, 1.0, 1.5, 2.0]), (1.0, 1, [1.0]), (3.0, 3, [1.0, 2.0, 3.0])],
)
def test_scale_grid(D, L, expected):
    grid = scale_grid(D, L)
    assert grid.epsilons.tolist() == expected
    assert grid.L == L


def test_scale_grid_ends_exactly_at_D():
    grid = scale_grid(0.1, 7)
    assert grid.epsilons[-1] == 0.1
    assert np.all(np.diff(grid.epsilons) > 0) and grid.epsilons[0] > 0
    with pytest.raises(ValueError):
        scale_grid(1.0, 0)
