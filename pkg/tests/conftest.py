"""Shared generators for randomized filtrations.

Two families feed the detector/oracle agreement checks:

* Rips filtrations of small random clouds, radius-capped so the oracle
  window sweep stays cheap.  Almost always torsion-free.
* Abstract filtrations built from random triangle sets over random edge
  weights, with strictly increasing births along faces so every sublevel
  prefix boundary is unambiguous (no birth ties above dimension 0).
  Optionally decorated with an embedded projective-plane face set to
  guarantee torsional positives in the mix.
"""

from __future__ import annotations

from itertools import combinations
from typing import List, Sequence, Tuple

import numpy as np

from torsionscope import build_rips, generate_random_cloud
from torsionscope.fixtures import (
    MOBIUS_FACES,
    PROJECTIVE_PLANE_FACES,
    all_at_once_filtration,
    mobius_band_filtration,
    projective_plane_filtration,
    simplex_closure,
)
from torsionscope.rips import Filtration


def capped_rips_filtration(seed: int, max_points: int = 12, max_ambient: int = 4):
    """Rips complex of a small random cloud, cut at a distance percentile."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, max_points + 1))
    d = int(rng.integers(2, max_ambient + 1))
    max_dim = int(rng.integers(2, 4))
    cloud = generate_random_cloud(n, d, seed=seed + 50_000)
    dm = cloud.distances()
    pair_d = dm[np.triu_indices(n, k=1)]
    radius = float(np.percentile(pair_d, 65.0))
    return build_rips(cloud, max_dim=max_dim, max_radius=radius)


def _strict_birth_filtration(
    rng: np.random.Generator,
    n_vertices: int,
    triangles: Sequence[Tuple[int, int, int]],
    tetrahedra: Sequence[Tuple[int, int, int, int]] = (),
) -> Filtration:
    """Abstract filtration: vertex birth 0, distinct edge weights, each
    higher simplex born just after its latest face (no ties above dim 0)."""
    closure = simplex_closure(list(triangles) + list(tetrahedra) + [(v,) for v in range(n_vertices)])
    birth = {}
    for v in closure:
        if len(v) == 1:
            birth[v] = 0.0
    edge_w = {}
    for v in closure:
        if len(v) == 2:
            edge_w[v] = float(rng.uniform(0.1, 1.0))
            birth[v] = edge_w[v]
    for v in sorted(closure, key=len):
        if len(v) >= 3:
            base = max(birth[f] for f in combinations(v, len(v) - 1))
            birth[v] = base * (1.0 + 1e-3 * float(rng.uniform(0.1, 1.0)))
    return Filtration.from_simplices((birth[v], v) for v in closure)


def abstract_random_filtration(seed: int, decorate_torsion: bool = False) -> Filtration:
    rng = np.random.default_rng(seed)
    if decorate_torsion:
        n = int(rng.integers(6, 10))
        perm = rng.permutation(n)[:6]
        triangles = [tuple(sorted(int(perm[i]) for i in f)) for f in PROJECTIVE_PLANE_FACES]
        extra = int(rng.integers(0, 4))
    else:
        n = int(rng.integers(6, 10))
        triangles = []
        extra = int(rng.integers(max(8, n), 2 * n + 4))
    pool = list(combinations(range(n), 3))
    picks = rng.choice(len(pool), size=min(extra, len(pool)), replace=False)
    triangles = sorted(set(triangles) | {pool[int(k)] for k in picks})
    tetras: List[Tuple[int, int, int, int]] = []
    if not decorate_torsion and rng.random() < 0.4 and n >= 5:
        quad_pool = list(combinations(range(n), 4))
        tetras = [quad_pool[int(rng.integers(0, len(quad_pool)))]]
    return _strict_birth_filtration(rng, n, triangles, tetras)


def fixture_variant_filtration(seed: int) -> Filtration:
    """Known-torsional triangulations, varied filtration styles."""
    choice = seed % 4
    if choice == 0:
        return projective_plane_filtration()
    if choice == 1:
        return projective_plane_filtration(birth=0.5 + 0.1 * (seed % 3))
    if choice == 2:
        return mobius_band_filtration(two_stage=True)
    return all_at_once_filtration(MOBIUS_FACES)


def agreement_fixture(index: int) -> Filtration:
    """Deterministic mixed source for detector-vs-oracle agreement runs.

    Blend per 20 consecutive indices: 12 capped Rips, 4 plain abstract,
    3 torsion-decorated abstract, 1 fixed triangulation variant.
    """
    slot = index % 20
    if slot < 12:
        return capped_rips_filtration(1000 + index)
    if slot < 16:
        return abstract_random_filtration(2000 + index)
    if slot < 19:
        return abstract_random_filtration(3000 + index, decorate_torsion=True)
    return fixture_variant_filtration(index // 20)
