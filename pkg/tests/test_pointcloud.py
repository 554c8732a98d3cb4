import numpy as np
import pytest

from topoclust.exceptions import DataFormatError
from topoclust.pointcloud import (
    BENCHMARKS,
    PointCloud,
    add_gaussian_noise,
    axis_rotation,
    gen_benchmark,
    gen_shape,
    load_csv,
    make_rng,
    save_csv,
)


def test_pointcloud_rejects_nonfinite():
    with pytest.raises(DataFormatError):
        PointCloud(np.array([[0.0, np.nan]]))


def test_pointcloud_rejects_label_gaps():
    with pytest.raises(DataFormatError):
        PointCloud(np.zeros((3, 2)), labels=[0, 2, 2])


def test_pointcloud_is_read_only():
    pc = PointCloud(np.zeros((2, 2)), labels=[0, 1])
    with pytest.raises(ValueError):
        pc.points[0, 0] = 1.0
    with pytest.raises(ValueError):
        pc.labels[0] = 1


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        make_rng(seed)


def test_sphere_residual():
    pc = gen_shape("sphere", 1000, seed=3, radius=1.0)
    assert np.max(np.abs(np.linalg.norm(pc.points, axis=1) - 1.0)) < 1e-9


def test_torus_residual():
    pc = gen_shape("torus", 2000, seed=4, R=2.0, r=0.5)
    x, y, z = pc.points.T
    tube = np.hypot(np.hypot(x, y) - 2.0, z)
    assert np.max(np.abs(tube - 0.5)) < 1e-9


def test_circle_and_segment_residuals():
    c = gen_shape("circle", 300, seed=1, radius=2.0, center=(1.0, 2.0, 3.0))
    rel = c.points - [1.0, 2.0, 3.0]
    assert np.max(np.abs(np.hypot(rel[:, 0], rel[:, 1]) - 2.0)) < 1e-9
    assert np.all(rel[:, 2] == 0)
    s = gen_shape("segment", 300, seed=1, length=6.0)
    assert np.all(np.abs(s.points[:, 0]) <= 3.0)
    assert np.all(s.points[:, 1:] == 0)


def test_circle_is_deterministic():
    a = gen_shape("circle", 4, seed=11, radius=1.0)
    b = gen_shape("circle", 4, seed=11, radius=1.0)
    assert np.array_equal(a.points, b.points)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="torus", n=10, R=0.5, r=0.5), dict(kind="sphere", n=0), dict(kind="circle", n=5, radius=-1.0)],
)
def test_gen_shape_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        gen_shape(seed=0, **kwargs)


def test_rotation_is_orthonormal():
    for axis in "xyz":
        rot = axis_rotation(axis, 0.7)
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-15)
        assert np.isclose(np.linalg.det(rot), 1.0)


@pytest.mark.parametrize(
    "name,hist",
    [
        ("linked_tori", [2000, 2000]),
        ("torus_sphere_line", [2000, 1000, 300]),
        ("two_sphere_two_circle", [1000, 1000, 500, 500]),
        ("smile", [500, 125, 125, 250]),
        ("three_mc", [200, 100, 100]),
    ],
)
def test_benchmark_sizes(name, hist):
    pc = gen_benchmark(name, 0)
    assert np.bincount(pc.labels).tolist() == hist


def test_benchmark_determinism():
    for name in BENCHMARKS:
        assert np.array_equal(gen_benchmark(name, 5).points, gen_benchmark(name, 5).points)


def test_linked_tori_geometry():
    pc = gen_benchmark("linked_tori", 2)
    a = pc.points[pc.labels == 0]
    b = pc.points[pc.labels == 1]
    x, y, z = a.T
    assert np.max(np.abs(np.hypot(np.hypot(x, y) - 2.0, z) - 0.5)) < 1e-9
    # second torus lies in the xz-plane centred at (2, 0, 0)
    x, y, z = (b - [2.0, 0.0, 0.0]).T
    assert np.max(np.abs(np.hypot(np.hypot(x, z) - 2.0, y) - 0.5)) < 1e-9
    # interlocked: torus 1 threads torus 0's hole and also passes outside it
    rad = np.hypot(b[:, 0], b[:, 1])
    flat = np.abs(b[:, 2]) < 0.5
    assert np.any(flat & (rad < 1.5)) and np.any(flat & (rad > 2.5))
    from scipy.spatial import cKDTree

    assert cKDTree(a).query(b)[0].min() > 0


def test_composite_gaps():
    from scipy.spatial import cKDTree

    for name in ("torus_sphere_line", "two_sphere_two_circle"):
        pc = gen_benchmark(name, 0)
        groups = [pc.points[pc.labels == c] for c in range(pc.labels.max() + 1)]
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                gap = cKDTree(groups[i]).query(groups[j])[0].min()
                assert gap >= 0.2, (name, i, j, gap)


def test_noise_identity_and_labels():
    pc = gen_benchmark("linked_tori", 1)
    assert np.array_equal(add_gaussian_noise(pc, 0.0, 9).points, pc.points)
    noisy = add_gaussian_noise(pc, 0.3, 9)
    assert np.array_equal(noisy.labels, pc.labels)
    std = (noisy.points - pc.points).std(axis=0, ddof=1)
    assert np.all((std >= 0.29) & (std <= 0.31)), std
    with pytest.raises(ValueError):
        add_gaussian_noise(pc, -0.1, 0)


def test_load_csv_labels(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x,y,lab\n0,0,a\n1,0,a\n5,5,b\n")
    pc = load_csv(f, label_column="lab")
    assert (pc.n, pc.d) == (3, 2)
    assert pc.labels.tolist() == [0, 0, 1]


def test_load_csv_label_order_is_first_occurrence(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x,lab\n0,z\n1,a\n2,z\n3,m\n")
    assert load_csv(f, "lab").labels.tolist() == [0, 1, 0, 2]


def test_load_csv_non_numeric(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x,y,lab\n0,0,a\n1,0,a\n5,5,b\n")
    with pytest.raises(DataFormatError, match="non-numeric cell.*row 2.*lab"):
        load_csv(f)


def test_load_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataFormatError, match="no data rows"):
        load_csv(empty)
    header_only = tmp_path / "h.csv"
    header_only.write_text("x,y\n")
    with pytest.raises(DataFormatError, match="no data rows"):
        load_csv(header_only)
    ragged = tmp_path / "r.csv"
    ragged.write_text("x,y\n1,2\n3\n")
    with pytest.raises(DataFormatError, match="row 3"):
        load_csv(ragged)
    with pytest.raises(DataFormatError, match="label column"):
        load_csv(ragged, "nope")
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv")


def test_csv_round_trip(tmp_path):
    pc = gen_benchmark("three_mc", 4)
    f = tmp_path / "c.csv"
    save_csv(pc, f)
    assert f.read_text().splitlines()[0] == "f0,f1,label"
    back = load_csv(f, "label")
    assert np.array_equal(back.points, pc.points)
    assert np.array_equal(back.labels, pc.labels)
