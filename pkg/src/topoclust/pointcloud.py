"""Point-cloud container, synthetic benchmark generators and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import DataFormatError

SEED_MAX = 2**64 - 1

SHAPE_KINDS = ("torus", "sphere", "circle", "segment")
BENCHMARKS = (
    "linked_tori",
    "torus_sphere_line",
    "two_sphere_two_circle",
    "smile",
    "three_mc",
)

# Shared geometry of the 3-D benchmarks.
TORUS_R = 2.0
TORUS_TUBE = 0.5


@dataclass(frozen=True)
class PointCloud:
    """Immutable n x d point set with optional ground-truth labels.

    ``points`` and ``labels`` are stored as read-only arrays. Labels, when
    present, must cover ``{0, ..., c-1}`` without gaps.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataFormatError(f"points must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataFormatError("points contain NaN or infinite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.ndim != 1 or lab.shape[0] != pts.shape[0]:
                raise DataFormatError(
                    f"labels must have length {pts.shape[0]}, got shape {lab.shape}"
                )
            if lab.size and not np.issubdtype(lab.dtype, np.integer):
                if not np.all(lab == np.round(lab)):
                    raise DataFormatError("labels must be integers")
            lab = lab.astype(np.int64, copy=True)
            uniq = np.unique(lab)
            if uniq[0] != 0 or uniq[-1] != len(uniq) - 1:
                raise DataFormatError("label values must form the set {0..c-1}")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points, self.labels, self.name)


def make_rng(seed: int) -> np.random.Generator:
    """Return a numpy generator for a 64-bit unsigned seed."""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must lie in [0, 2**64 - 1], got {seed}")
    return np.random.default_rng(seed)


def axis_rotation(axis: str | int, angle: float) -> np.ndarray:
    """3x3 rotation matrix by ``angle`` radians about a coordinate axis."""
    idx = {"x": 0, "y": 1, "z": 2}.get(axis, axis)
    if idx not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    c, s = math.cos(angle), math.sin(angle)
    i, j = [a for a in range(3) if a != idx]
    rot = np.eye(3)
    rot[i, i] = c
    rot[i, j] = -s
    rot[j, i] = s
    rot[j, j] = c
    return rot


def _place(x: np.ndarray, center, rotation) -> np.ndarray:
    d = x.shape[1]
    if rotation is not None:
        rot = np.asarray(rotation, dtype=float)
        if rot.shape != (d, d):
            raise ValueError(f"rotation must be {d}x{d}, got {rot.shape}")
        x = x @ rot.T
    if center is not None:
        c = np.asarray(center, dtype=float)
        if c.shape != (d,):
            raise ValueError(f"center must be a length-{d} vector, got {c.shape}")
        x = x + c
    return x


def gen_shape(
    kind: str,
    n: int,
    *,
    seed: int,
    center: Optional[Sequence[float]] = None,
    rotation: Optional[np.ndarray] = None,
    dim: Optional[int] = None,
    R: float = TORUS_R,
    r: float = TORUS_TUBE,
    radius: float = 1.0,
    length: float = 1.0,
) -> PointCloud:
    """Sample ``n`` points on a simple shape.

    Parameters
    ----------
    kind : {"torus", "sphere", "circle", "segment"}
        torus: major radius ``R`` and tube radius ``r`` in the xy-plane,
        angles uniform on [0, 2pi). sphere: radius ``radius`` in ``dim``
        dimensions (default 3), normalized Gaussian draws. circle: radius
        ``radius`` in the plane of the first two coordinates. segment:
        length ``length`` along the first axis, centred at the origin.
    center, rotation
        The canonical shape is rotated (``x @ rotation.T``) and then
        translated to ``center``.
    dim
        Ambient dimension; the torus is 3-D only, other shapes default to 3.

    Returns a cloud labelled uniformly 0.
    """
    if kind not in SHAPE_KINDS:
        raise ValueError(f"unknown shape {kind!r}; expected one of {SHAPE_KINDS}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    rng = make_rng(seed)
    dim = 3 if dim is None else int(dim)

    if kind == "torus":
        if dim != 3:
            raise ValueError("torus is only defined in 3 dimensions")
        if not (r > 0 and R > r):
            raise ValueError(f"torus requires R > r > 0, got R={R}, r={r}")
        theta = rng.uniform(0.0, 2 * np.pi, n)
        phi = rng.uniform(0.0, 2 * np.pi, n)
        ring = R + r * np.cos(theta)
        x = np.column_stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)])
    elif kind == "sphere":
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        g = rng.standard_normal((n, dim))
        norms = np.linalg.norm(g, axis=1)
        # a zero draw has probability zero; redraw defensively
        while np.any(norms == 0):
            bad = norms == 0
            g[bad] = rng.standard_normal((int(bad.sum()), dim))
            norms = np.linalg.norm(g, axis=1)
        x = radius * g / norms[:, None]
    elif kind == "circle":
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if dim < 2:
            raise ValueError("circle needs dim >= 2")
        t = rng.uniform(0.0, 2 * np.pi, n)
        x = np.zeros((n, dim))
        x[:, 0] = radius * np.cos(t)
        x[:, 1] = radius * np.sin(t)
    else:
        if length <= 0:
            raise ValueError(f"length must be positive, got {length}")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        x = np.zeros((n, dim))
        x[:, 0] = rng.uniform(-length / 2, length / 2, n)

    x = _place(x, center, rotation)
    return PointCloud(x, np.zeros(n, dtype=np.int64), kind)


def concat(parts: Sequence[PointCloud], name: str = "") -> PointCloud:
    """Stack component clouds; part ``i`` receives label ``i``."""
    pts = np.vstack([p.points for p in parts])
    labels = np.concatenate([np.full(p.n, i, dtype=np.int64) for i, p in enumerate(parts)])
    return PointCloud(pts, labels, name)


def _child_seeds(seed: int, count: int) -> list[int]:
    ss = np.random.SeedSequence(int(seed))
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in ss.spawn(count)]


def _band(rng, n, fn, width):
    """Points near a parametric curve ``fn(t)``, t in [0, 1), jittered
    uniformly across a band of total ``width``."""
    t = rng.uniform(0.0, 1.0, n)
    base, normal = fn(t)
    off = rng.uniform(-width / 2, width / 2, n)
    return base + off[:, None] * normal


def _smile(seed: int) -> PointCloud:
    rng = make_rng(seed)

    def arc(cx, cy, rad, a0, a1):
        def fn(t):
            a = a0 + (a1 - a0) * t
            u = np.column_stack([np.cos(a), np.sin(a)])
            return np.array([cx, cy]) + rad * u, u
        return fn

    face = _band(rng, 500, arc(0.0, 0.0, 1.0, 0.0, 2 * np.pi), 0.06)
    eyes = []
    for cx in (-0.35, 0.35):
        rad = 0.08 * np.sqrt(rng.uniform(0.0, 1.0, 125))
        ang = rng.uniform(0.0, 2 * np.pi, 125)
        eyes.append(np.column_stack([cx + 0.6 * rad * np.cos(ang), 0.3 + 1.6 * rad * np.sin(ang)]))
    mouth = _band(rng, 250, arc(0.0, 0.05, 0.5, np.pi * 1.15, np.pi * 1.85), 0.06)
    parts = [face, eyes[0], eyes[1], mouth]
    return concat([PointCloud(p) for p in parts], "smile")


def _three_mc(seed: int) -> PointCloud:
    rng = make_rng(seed)
    blobs = [((0.0, 0.0), 0.5, 200), ((3.5, 0.0), 0.3, 100), ((1.75, 3.0), 0.3, 100)]
    parts = [PointCloud(rng.normal(c, s, size=(m, 2))) for c, s, m in blobs]
    return concat(parts, "three_mc")


def gen_benchmark(name: str, seed: int) -> PointCloud:
    """Generate one of the named benchmark clouds.

    ``linked_tori``: two interlocked tori (R=2, r=0.5), 2000 points each; the
    second is rotated 90 degrees about the x-axis and shifted by (R, 0, 0).
    ``torus_sphere_line``: torus (2000) in the xy-plane, unit sphere (1000)
    centred at (5.5, 0, 0), and a segment (300) along the z-axis through
    the torus hole, z in [-3, 3].
    ``two_sphere_two_circle``: unit spheres (1000 each) at (-4, 0, 0) and
    (4, 0, 0), each encircled by a radius-2 circle (500 each) in the xz-plane.
    ``smile`` and ``three_mc`` are 2-D stand-ins for the Smile1 and 3MC
    clustering benchmarks (1000 and 400 points).
    """
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; valid names: {', '.join(BENCHMARKS)}")
    make_rng(seed)
    if name == "smile":
        return _smile(seed)
    if name == "three_mc":
        return _three_mc(seed)

    s = _child_seeds(seed, 4)
    if name == "linked_tori":
        parts = [
            gen_shape("torus", 2000, seed=s[0]),
            gen_shape("torus", 2000, seed=s[1], rotation=axis_rotation("x", np.pi / 2),
                      center=(TORUS_R, 0.0, 0.0)),
        ]
    elif name == "torus_sphere_line":
        parts = [
            gen_shape("torus", 2000, seed=s[0]),
            gen_shape("sphere", 1000, seed=s[1], radius=1.0, center=(5.5, 0.0, 0.0)),
            gen_shape("segment", 300, seed=s[2], length=6.0, rotation=axis_rotation("y", -np.pi / 2)),
        ]
    else:
        xz = axis_rotation("x", np.pi / 2)
        parts = [
            gen_shape("sphere", 1000, seed=s[0], radius=1.0, center=(-4.0, 0.0, 0.0)),
            gen_shape("sphere", 1000, seed=s[1], radius=1.0, center=(4.0, 0.0, 0.0)),
            gen_shape("circle", 500, seed=s[2], radius=2.0, rotation=xz, center=(-4.0, 0.0, 0.0)),
            gen_shape("circle", 500, seed=s[3], radius=2.0, rotation=xz, center=(4.0, 0.0, 0.0)),
        ]
    return concat(parts, name)


def add_gaussian_noise(pc: PointCloud, rho: float, seed: int) -> PointCloud:
    """Perturb every coordinate by independent N(0, rho^2) noise."""
    if not rho >= 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    rng = make_rng(seed)
    if rho == 0:
        return pc
    return pc.with_points(pc.points + rng.normal(0.0, rho, size=pc.points.shape))


def load_csv(path: str | Path, label_column: Optional[str] = None) -> PointCloud:
    """Read a headed, comma-separated numeric table.

    Feature columns are kept in file order. When ``label_column`` is given
    its values are mapped to 0, 1, ... in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no data rows (missing header)")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise DataFormatError(f"{path}: no data rows")

    label_idx = None
    if label_column is not None:
        if label_column not in header:
            raise DataFormatError(
                f"{path}: label column {label_column!r} not found in header {header}"
            )
        label_idx = header.index(label_column)

    feat_idx = [j for j in range(len(header)) if j != label_idx]
    if not feat_idx:
        raise DataFormatError(f"{path}: no feature columns")
    feats = np.empty((len(body), len(feat_idx)))
    label_map: dict[str, int] = {}
    labels = []
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}: row {line} has {len(row)} fields, expected {len(header)}"
            )
        for out_j, j in enumerate(feat_idx):
            cell = row[j].strip()
            try:
                feats[i, out_j] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric cell {cell!r} at row {line}, column {header[j]!r}"
                ) from None
        if label_idx is not None:
            key = row[label_idx].strip()
            labels.append(label_map.setdefault(key, len(label_map)))
    if not np.all(np.isfinite(feats)):
        bad_row, bad_col = np.argwhere(~np.isfinite(feats))[0]
        raise DataFormatError(
            f"{path}: non-finite value at row {bad_row + 2}, column {header[feat_idx[bad_col]]!r}"
        )
    lab = np.array(labels, dtype=np.int64) if label_idx is not None else None
    return PointCloud(feats, lab, path.stem)


def save_csv(pc: PointCloud, path: str | Path) -> None:
    """Write ``pc`` with columns ``f0..f{d-1}`` and, if labelled, ``label``."""
    header = [f"f{j}" for j in range(pc.d)]
    if pc.labels is not None:
        header.append("label")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(pc.n):
            row = [repr(float(v)) for v in pc.points[i]]
            if pc.labels is not None:
                row.append(str(int(pc.labels[i])))
            w.writerow(row)
