"""Vietoris-Rips filtrations: simplices, birth radii, boundary matrices.

Filtration order is the total order (birth, dim, lexicographic vertices);
determinism of this order is what makes "first simplex" indices
reproducible across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .pointcloud import PointCloud

__all__ = [
    "AUTO",
    "Simplex",
    "Filtration",
    "BoundaryMatrix",
    "SimplexCapExceeded",
    "build_rips",
    "boundary_matrix",
    "sublevel_restriction",
    "dump_filtration",
]

AUTO = "auto"

DEFAULT_SIMPLEX_CAP = 5_000_000


class SimplexCapExceeded(RuntimeError):
    """Raised when a construction would exceed the configured simplex cap."""


@dataclass(frozen=True)
class Simplex:
    """A simplex with strictly increasing vertex indices and birth radius."""

    vertices: Tuple[int, ...]
    birth: float

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.vertices, self.vertices[1:])):
            raise ValueError(f"vertices must be strictly increasing, got {self.vertices}")
        if self.birth < 0:
            raise ValueError("birth must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


class Filtration:
    """Totally ordered simplex list; every face precedes its cofaces."""

    def __init__(self, simplices: Sequence[Simplex], max_dim: int, validate: bool = True):
        self.simplices: Tuple[Simplex, ...] = tuple(simplices)
        self.max_dim = int(max_dim)
        self.index_of: Dict[Tuple[int, ...], int] = {
            s.vertices: i for i, s in enumerate(self.simplices)
        }
        if len(self.index_of) != len(self.simplices):
            raise ValueError("duplicate simplex in filtration")
        self._births: Optional[np.ndarray] = None
        self._dims: Optional[np.ndarray] = None
        if validate:
            self._validate()

    def _validate(self) -> None:
        prev_key = None
        for i, s in enumerate(self.simplices):
            if s.dim > self.max_dim:
                raise ValueError(f"simplex {s.vertices} exceeds max_dim {self.max_dim}")
            key = (s.birth, s.dim, s.vertices)
            if prev_key is not None and key < prev_key:
                raise ValueError(f"filtration order violated at index {i}")
            prev_key = key
            for face in codim1_faces(s.vertices):
                j = self.index_of.get(face)
                if j is None or j >= i:
                    raise ValueError(f"face {face} of {s.vertices} missing or out of order")

    def __len__(self) -> int:
        return len(self.simplices)

    @property
    def births(self) -> np.ndarray:
        if self._births is None:
            self._births = np.array([s.birth for s in self.simplices], dtype=np.float64)
        return self._births

    @property
    def dims(self) -> np.ndarray:
        if self._dims is None:
            self._dims = np.array([s.dim for s in self.simplices], dtype=np.int64)
        return self._dims

    def prefix_size(self, radius: float) -> int:
        """Number of simplices with birth <= radius."""
        return int(np.searchsorted(self.births, radius, side="right"))

    @classmethod
    def from_simplices(
        cls, entries: Iterable[Tuple[float, Sequence[int]]], validate: bool = True
    ) -> "Filtration":
        """Build a filtration from (birth, vertices) entries, sorting by the
        canonical key; entries must be face-closed."""
        sims = [Simplex(tuple(int(v) for v in verts), float(b)) for b, verts in entries]
        sims.sort(key=lambda s: (s.birth, s.dim, s.vertices))
        max_dim = max((s.dim for s in sims), default=0)
        return cls(sims, max_dim, validate=validate)


@dataclass
class BoundaryMatrix:
    """Sparse column-major boundary matrix over the integers.

    Column j of a p-simplex holds p+1 entries (row, coeff) with rows
    strictly below j in filtration order and coeffs alternating +-1 by
    face-omission parity.  Coefficients are reduced mod q or kept exact
    downstream; the matrix itself is ring-agnostic.
    """

    columns: List[List[Tuple[int, int]]]
    dims: np.ndarray

    def __len__(self) -> int:
        return len(self.columns)


def codim1_faces(vertices: Tuple[int, ...]) -> List[Tuple[int, ...]]:
    """All faces obtained by omitting one vertex, in omission order."""
    if len(vertices) == 1:
        return []
    return [vertices[:i] + vertices[i + 1 :] for i in range(len(vertices))]


def build_rips(
    cloud: PointCloud,
    max_dim: int,
    max_radius: Union[str, float] = AUTO,
    simplex_cap: int = DEFAULT_SIMPLEX_CAP,
) -> Filtration:
    """Build the Vietoris-Rips filtration of a point cloud.

    Contains every simplex of dimension <= max_dim whose diameter is
    <= max_radius.  max_radius=AUTO uses the enclosing radius (min over
    points of the max distance to the others), beyond which the complex
    becomes a cone and adds no further structure of interest.

    Raises SimplexCapExceeded once the simplex count crosses simplex_cap.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    n = cloud.n
    d = cloud.distances()
    if max_radius == AUTO:
        rmax = cloud.enclosing_radius()
    else:
        rmax = float(max_radius)
        if rmax <= 0:
            raise ValueError("max_radius must be positive")

    entries: List[Tuple[float, int, Tuple[int, ...]]] = [(0.0, 0, (i,)) for i in range(n)]
    count = n
    if count > simplex_cap:
        raise SimplexCapExceeded(f"simplex count {count} exceeds cap {simplex_cap}")

    if max_dim >= 1:
        within = d <= rmax
        np.fill_diagonal(within, False)
        nbrs: List[np.ndarray] = [np.flatnonzero(within[i]) for i in range(n)]
        # Depth-first clique extension: each stack item carries the simplex,
        # its birth, and the candidate vertices (> its max vertex, adjacent
        # to all its vertices).
        stack: List[Tuple[Tuple[int, ...], float, np.ndarray]] = []
        for i in range(n):
            cand = nbrs[i][nbrs[i] > i]
            if cand.size:
                stack.append(((i,), 0.0, cand))
        while stack:
            verts, birth, cand = stack.pop()
            varr = np.fromiter(verts, dtype=np.intp, count=len(verts))
            child_births = np.maximum(birth, d[varr][:, cand].max(axis=0))
            dim_child = len(verts)
            count += cand.size
            if count > simplex_cap:
                raise SimplexCapExceeded(f"simplex count exceeds cap {simplex_cap}")
            for pos in range(cand.size):
                v = int(cand[pos])
                child = verts + (v,)
                entries.append((float(child_births[pos]), dim_child, child))
                if dim_child < max_dim:
                    rest = cand[pos + 1 :]
                    child_cand = rest[np.isin(rest, nbrs[v], assume_unique=True)]
                    if child_cand.size:
                        stack.append((child, float(child_births[pos]), child_cand))

    entries.sort()
    sims = [Simplex(verts, birth) for birth, _, verts in entries]
    return Filtration(sims, max_dim, validate=False)


def boundary_matrix(filtration: Filtration) -> BoundaryMatrix:
    """Integer boundary matrix of a filtration, columns in filtration order."""
    index_of = filtration.index_of
    columns: List[List[Tuple[int, int]]] = []
    for s in filtration.simplices:
        if s.dim == 0:
            columns.append([])
            continue
        col = []
        for omit, face in enumerate(codim1_faces(s.vertices)):
            sign = 1 if omit % 2 == 0 else -1
            col.append((index_of[face], sign))
        col.sort()
        columns.append(col)
    return BoundaryMatrix(columns, filtration.dims.copy())


def sublevel_restriction(filtration: Filtration, radius: float) -> Filtration:
    """Prefix of the filtration with birth <= radius (the subcomplex K_r)."""
    if radius < 0:
        return Filtration([], filtration.max_dim, validate=False)
    k = filtration.prefix_size(radius)
    return Filtration(filtration.simplices[:k], filtration.max_dim, validate=False)


def dump_filtration(filtration: Filtration) -> str:
    """Text dump, one line per simplex: `birth dim v0 v1 ...`."""
    lines = [
        " ".join([repr(s.birth), str(s.dim)] + [str(v) for v in s.vertices])
        for s in filtration.simplices
    ]
    return "\n".join(lines) + ("\n" if lines else "")
