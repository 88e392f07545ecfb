"""Point clouds: representation, synthetic generators, perturbations, transforms.

All generators draw from numpy's default_rng (PCG64) so that identical
arguments always produce bitwise-identical clouds across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .activations import activation

__all__ = [
    "ALL",
    "PointCloud",
    "PerturbationRecord",
    "generate_loop_band",
    "generate_projective_plane",
    "generate_random_cloud",
    "perturb_gaussian",
    "apply_linear",
    "apply_activation",
    "load_cloud",
    "save_cloud",
]

# Sentinel for "perturb every point".
ALL = "all"


@dataclass(frozen=True)
class PointCloud:
    """Finite ordered set of points in Euclidean d-space.

    Point order is stable: index i identifies the same point across
    operations that do not add or remove points.
    """

    points: np.ndarray
    labels: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"need n >= 1 points of dim >= 1, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        if self.labels is not None and len(self.labels) != pts.shape[0]:
            raise ValueError("labels length must match point count")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distances(self) -> np.ndarray:
        """Dense symmetric matrix of pairwise Euclidean distances."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(d, 0.0)
        return d

    def enclosing_radius(self) -> float:
        """min over points of the max distance to any other point."""
        d = self.distances()
        if self.n == 1:
            return 0.0
        return float(d.max(axis=1).min())


@dataclass(frozen=True)
class PerturbationRecord:
    """Bookkeeping for a Gaussian perturbation of selected points."""

    shifted_indices: Tuple[int, ...]
    noise_sigma: float
    mse: float  # mean over all n points of the squared displacement

    def __post_init__(self) -> None:
        if self.mse < 0:
            raise ValueError("mse must be nonnegative")
        if len(set(self.shifted_indices)) != len(self.shifted_indices):
            raise ValueError("shifted_indices must be distinct")


def _maybe_jitter(pts: np.ndarray, jitter: float, rng: np.random.Generator) -> np.ndarray:
    # Optional general-position safeguard: break exact distance ties.
    if jitter:
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return pts


def generate_loop_band(
    windings: int,
    n_points: int,
    major_radius: float,
    band_width: float,
    twist: int,
    seed: int,
    tube_radius: Optional[float] = None,
    jitter: float = 0.0,
) -> PointCloud:
    """Sample a band that winds `windings` times around the z-axis.

    The band's core is a closed curve on a torus of radii
    (major_radius, tube_radius): as the parameter t runs once around
    [0, 2pi), the curve circles the z-axis `windings` times while the
    meridian phase advances once, so the strands passing through a common
    meridian half-plane sit on a regular `windings`-gon of circumradius
    tube_radius.  At Rips scales above the strand separation the strands
    coalesce into a single annulus and the core class maps to `windings`
    times the merged class, the mechanism behind coefficient-dependent
    (torsional) persistence.  `twist` counts half-turns of the band around
    its core per full loop; odd values glue the band like a Moebius strip.

    tube_radius defaults to 2 * band_width, which keeps the strand
    separation (2 * tube_radius * sin(pi / windings)) safely above the
    band's own extent.
    """
    if windings < 1:
        raise ValueError("windings must be >= 1")
    if n_points < 3 * windings:
        raise ValueError("need n_points >= 3 * windings")
    if band_width >= major_radius:
        raise ValueError("band_width must be < major_radius (self-intersection risk)")
    a = 2.0 * band_width if tube_radius is None else float(tube_radius)
    rng = np.random.default_rng(seed)
    # Stratified parameter samples: one point per cell of [0, 2pi).
    t = 2.0 * np.pi * (np.arange(n_points) + rng.uniform(0.0, 1.0, n_points)) / n_points
    s = rng.uniform(-band_width, band_width, n_points)

    phi = windings * t
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    rho = major_radius + a * np.cos(t)
    core = np.stack([rho * cos_phi, rho * sin_phi, a * np.sin(t)], axis=1)
    # Meridian-plane frame at the core point: m1 radial from the tube
    # center, m2 the meridian tangent; both transverse to the core curve.
    m1 = np.stack([np.cos(t) * cos_phi, np.cos(t) * sin_phi, np.sin(t)], axis=1)
    m2 = np.stack([-np.sin(t) * cos_phi, -np.sin(t) * sin_phi, np.cos(t)], axis=1)
    theta = 0.5 * twist * t
    u = np.cos(theta)[:, None] * m1 + np.sin(theta)[:, None] * m2
    pts = core + s[:, None] * u
    return PointCloud(_maybe_jitter(pts, jitter, rng))


def generate_projective_plane(n_points: int, seed: int, jitter: float = 0.0) -> PointCloud:
    """Sample the real projective plane embedded in R^4.

    Uniform points on the unit sphere are pushed through the antipodally
    symmetric map (x,y,z) -> (xy, xz, yz, x^2 - y^2), an embedding of RP^2.
    """
    if n_points < 20:
        raise ValueError("need n_points >= 20")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n_points, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    x, y, z = g[:, 0], g[:, 1], g[:, 2]
    pts = np.stack([x * y, x * z, y * z, x * x - y * y], axis=1)
    return PointCloud(_maybe_jitter(pts, jitter, rng))


def generate_random_cloud(n_points: int, dim: int, seed: int, jitter: float = 0.0) -> PointCloud:
    """I.i.d. uniform points in the unit cube of R^dim."""
    if dim < 2:
        raise ValueError("need dim >= 2")
    rng = np.random.default_rng(seed)
    pts = rng.random((n_points, dim))
    return PointCloud(_maybe_jitter(pts, jitter, rng))


def perturb_gaussian(
    cloud: PointCloud,
    indices: Union[str, Sequence[int]],
    sigma: float,
    seed: int,
) -> Tuple[PointCloud, PerturbationRecord]:
    """Add Gaussian noise of scale sigma to the selected points only.

    `indices` is either the ALL sentinel or a sequence of point indices.
    The record's mse is the mean over all n points of the squared
    displacement (unshifted points contribute 0).
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if isinstance(indices, str):
        if indices != ALL:
            raise ValueError(f"indices must be a sequence or {ALL!r}")
        idx = np.arange(cloud.n)
    else:
        idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.intp)
        if len(idx) != len(indices):
            raise ValueError("indices must be distinct")
        if len(idx) and (idx[0] < 0 or idx[-1] >= cloud.n):
            raise ValueError(f"index out of range [0, {cloud.n})")
    rng = np.random.default_rng(seed)
    pts = cloud.points.copy()
    noise = rng.normal(0.0, sigma, size=(len(idx), cloud.dim)) if sigma > 0 else np.zeros((len(idx), cloud.dim))
    pts[idx] += noise
    mse = float(np.sum(noise * noise) / cloud.n)
    record = PerturbationRecord(tuple(int(i) for i in idx), float(sigma), mse)
    return PointCloud(pts, cloud.labels), record


def apply_linear(cloud: PointCloud, matrix: np.ndarray) -> PointCloud:
    """Map every point by a d' x d matrix; the output has dimension d'."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != cloud.dim:
        raise ValueError(f"matrix must have {cloud.dim} columns, got shape {m.shape}")
    return PointCloud(cloud.points @ m.T, cloud.labels)


def apply_activation(cloud: PointCloud, kind: str) -> PointCloud:
    """Apply an activation function componentwise to every coordinate."""
    fn = activation(kind)
    return PointCloud(fn(cloud.points), cloud.labels)


def save_cloud(cloud: PointCloud, path: Union[str, Path], fmt: Optional[str] = None) -> None:
    """Write a cloud as CSV (one point per row, `# dim=<d>` header) or JSON."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt == "csv":
        lines = [f"# dim={cloud.dim}"]
        lines.extend(",".join(repr(float(v)) for v in row) for row in cloud.points)
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        obj = {"dim": cloud.dim, "points": [[float(v) for v in row] for row in cloud.points]}
        if cloud.labels is not None:
            obj["labels"] = list(cloud.labels)
        path.write_text(json.dumps(obj, sort_keys=True))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_cloud(path: Union[str, Path]) -> PointCloud:
    """Read a cloud saved by save_cloud (format inferred from content)."""
    path = Path(path)
    text = path.read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(text)
        labels = tuple(obj["labels"]) if "labels" in obj else None
        cloud = PointCloud(np.asarray(obj["points"], dtype=np.float64), labels)
        if "dim" in obj and cloud.dim != int(obj["dim"]):
            raise ValueError(f"declared dim {obj['dim']} != data dim {cloud.dim}")
        return cloud
    declared_dim = None
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "dim=" in line:
                declared_dim = int(line.split("dim=")[1].split()[0])
            continue
        rows.append([float(v) for v in line.replace(",", " ").split()])
    cloud = PointCloud(np.asarray(rows, dtype=np.float64))
    if declared_dim is not None and cloud.dim != declared_dim:
        raise ValueError(f"declared dim {declared_dim} != data dim {cloud.dim}")
    return cloud
