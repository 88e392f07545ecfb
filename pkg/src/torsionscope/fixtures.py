"""Fixed triangulations with known integral homology, used as oracle fixtures.

Unlike sampled clouds these enter the pipeline through explicit
simplex lists via `Filtration.from_simplices`, so the expected groups
are exact mathematical facts rather than empirical observations.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, List, Sequence, Tuple

from .rips import Filtration

__all__ = [
    "PROJECTIVE_PLANE_FACES",
    "MOBIUS_FACES",
    "MOBIUS_BOUNDARY_EDGES",
    "simplex_closure",
    "all_at_once_filtration",
    "two_stage_filtration",
    "projective_plane_filtration",
    "mobius_band_filtration",
]

# Minimal 6-vertex triangulation of the real projective plane: the
# antipodal quotient of the icosahedron (tests re-derive this list from
# the icosahedron's convex hull).  15 edges (the full K6), 10 faces,
# Euler characteristic 1, H1 = Z/2.
PROJECTIVE_PLANE_FACES: Tuple[Tuple[int, int, int], ...] = (
    (0, 1, 4),
    (0, 1, 5),
    (0, 2, 3),
    (0, 2, 5),
    (0, 3, 4),
    (1, 2, 3),
    (1, 2, 4),
    (1, 3, 5),
    (2, 4, 5),
    (3, 4, 5),
)

# 6-vertex Mobius band: strip of six triangles glued with a half twist.
# Its boundary is the hexagon 0-1-2-3-4-5; relative to that boundary the
# band has H1 = Z/2 (the core circle doubles onto the boundary).
MOBIUS_FACES: Tuple[Tuple[int, int, int], ...] = (
    (0, 1, 4),
    (0, 2, 3),
    (0, 2, 5),
    (0, 3, 4),
    (1, 2, 5),
    (1, 4, 5),
)

MOBIUS_BOUNDARY_EDGES: Tuple[Tuple[int, int], ...] = (
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (0, 5),
)


def simplex_closure(simplices: Iterable[Sequence[int]]) -> List[Tuple[int, ...]]:
    """All faces of the given simplices (including themselves), deduplicated."""
    out = set()
    for s in simplices:
        vs = tuple(sorted(s))
        if len(set(vs)) != len(vs):
            raise ValueError(f"repeated vertex in simplex {s}")
        for k in range(1, len(vs) + 1):
            out.update(combinations(vs, k))
    return sorted(out, key=lambda v: (len(v), v))


def all_at_once_filtration(
    top_simplices: Iterable[Sequence[int]], birth: float = 0.0
) -> Filtration:
    """Every simplex of the closure enters at the same birth value."""
    return Filtration.from_simplices(
        (birth, v) for v in simplex_closure(top_simplices)
    )


def two_stage_filtration(
    top_simplices: Iterable[Sequence[int]],
    early_simplices: Iterable[Sequence[int]],
    early_birth: float = 0.0,
    late_birth: float = 1.0,
) -> Filtration:
    """Closure of early_simplices first, the rest of the complex second.

    Realizes a pair (K, L): relative homology questions about K mod L
    become window questions about the prefix boundary between births.
    """
    if not late_birth > early_birth:
        raise ValueError("late_birth must exceed early_birth")
    early = set(simplex_closure(early_simplices))
    full = simplex_closure(top_simplices)
    missing = early.difference(full)
    if missing:
        raise ValueError(f"early simplices not in the complex: {sorted(missing)}")
    return Filtration.from_simplices(
        (early_birth if v in early else late_birth, v) for v in full
    )


def projective_plane_filtration(birth: float = 0.0) -> Filtration:
    return all_at_once_filtration(PROJECTIVE_PLANE_FACES, birth)


def mobius_band_filtration(two_stage: bool = False) -> Filtration:
    """The band all at once, or its boundary hexagon first (two_stage)."""
    if not two_stage:
        return all_at_once_filtration(MOBIUS_FACES)
    return two_stage_filtration(MOBIUS_FACES, MOBIUS_BOUNDARY_EDGES)
