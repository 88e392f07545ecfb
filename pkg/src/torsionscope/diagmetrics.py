"""Distances and statistics on persistence diagrams.

Conventions fixed here:

* Ground cost for both distances is the l-infinity norm on (birth, death)
  points; the diagonal is available at cost persistence/2.
* Wasserstein is the q=1 sum-cost version via assignment on the
  diagonal-augmented bipartite graph.
* Infinite bars are excluded from entropy and classification; distances
  match them infinite-to-infinite sorted by birth and error out when the
  counts differ, unless a finite cap is supplied.
* Natural logarithm throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matching import hopcroft_karp
from .phfield import PersistenceDiagram

__all__ = [
    "BarLengthSet",
    "NoiseSplit",
    "bottleneck",
    "wasserstein1",
    "persistence_entropy",
    "max_feature_count",
    "classify_noise",
    "min_feature_length",
    "min_torsion_bottleneck",
    "feature_scale_params",
]


# --- bar length sets and entropy ----------------------------------------


@dataclass(frozen=True)
class BarLengthSet:
    """Finite positive bar lengths, kept sorted descending."""

    lengths: Tuple[float, ...]
    total: float = field(init=False)

    def __post_init__(self) -> None:
        ordered = tuple(sorted((float(x) for x in self.lengths), reverse=True))
        for x in ordered:
            if not (x > 0.0 and math.isfinite(x)):
                raise ValueError(f"bar lengths must be positive and finite, got {x}")
        object.__setattr__(self, "lengths", ordered)
        object.__setattr__(self, "total", math.fsum(ordered))

    @property
    def n(self) -> int:
        return len(self.lengths)

    @classmethod
    def from_diagram(cls, diagram: PersistenceDiagram, dim: int) -> "BarLengthSet":
        pairs = diagram.pairs_in_dim(dim, include_infinite=False)
        return cls(tuple(p.persistence for p in pairs))


def persistence_entropy(bars: BarLengthSet) -> float:
    """Shannon entropy of the normalized bar lengths (0 for a single bar)."""
    if bars.n == 0:
        raise ValueError("entropy of an empty bar set is undefined")
    s = bars.total
    return -math.fsum((x / s) * math.log(x / s) for x in bars.lengths)


def max_feature_count(n: int, alpha: float) -> float:
    """Upper bound on how many of n bars can be features, given the
    noise-to-scale ratio alpha."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return n * (alpha * math.log(1.0 / alpha) - alpha * (1.0 - alpha)) / (1.0 - alpha) ** 2


def _tail_entropy_scale(tail: Sequence[float]) -> float:
    """e^{E(tail)} with the degenerate rule e^{E(empty)} = 1."""
    if not tail:
        return 1.0
    s = math.fsum(tail)
    ent = -math.fsum((x / s) * math.log(x / s) for x in tail)
    return math.exp(ent)


def min_feature_length(tail: BarLengthSet) -> float:
    """A bar prepended to this tail counts as a feature only when its
    length exceeds P / e^{E(tail)}."""
    return tail.total / _tail_entropy_scale(tail.lengths)


@dataclass(frozen=True)
class NoiseSplit:
    features: Tuple[float, ...]
    noise: Tuple[float, ...]
    c_values: Tuple[float, ...]
    q: float
    alpha: float

    @property
    def n(self) -> int:
        return len(self.features) + len(self.noise)


def classify_noise(bars: BarLengthSet, alpha: float) -> NoiseSplit:
    """Split bars into features and noise.

    Walks i = 1..n computing C_i = S_{L'_{i-1}} / S_{L'_i}, where L'_i
    replaces the i longest bars by i copies of P_i / e^{E(R_i)} (P_i the
    tail total, R_i the tail).  Bars from the first i with C_i >= 1 and
    i > Q onward are noise; Q = max_feature_count(n, alpha).
    """
    if bars.n == 0:
        raise ValueError("cannot classify an empty bar set")
    n = bars.n
    q = max_feature_count(n, alpha)
    ls = bars.lengths

    def s_prime(i: int) -> float:
        # total length of L'_i
        tail = ls[i:]
        p = math.fsum(tail)
        return p + i * (p / _tail_entropy_scale(tail))

    c_values: List[float] = []
    cut = n  # first noise index (0-based); n means everything is feature
    for i in range(1, n + 1):
        s_hi = s_prime(i - 1)
        s_lo = s_prime(i)
        c = math.inf if s_lo == 0.0 else s_hi / s_lo
        c_values.append(c)
        if c >= 1.0 and i > q and cut == n:
            cut = i - 1
    return NoiseSplit(ls[:cut], ls[cut:], tuple(c_values), q, alpha)


def feature_scale_params(cloud) -> Tuple[float, float, Tuple[float, ...]]:
    """(r, T, candidate alphas) for a point cloud: r the smallest pairwise
    distance, 2T the enclosing radius.  Candidates are the ratios r/(2T)
    and r/T clipped to (0, 1); the caller picks."""
    dm = cloud.distances()
    n = dm.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    iu = np.triu_indices(n, k=1)
    r = float(dm[iu].min())
    t = cloud.enclosing_radius() / 2.0
    candidates = tuple(
        x for x in (r / (2.0 * t), r / t) if 0.0 < x < 1.0
    )
    return r, t, candidates


# --- diagram distances ---------------------------------------------------


def _dim_points(
    diagram: PersistenceDiagram, dim: int, infinite_cap: Optional[float]
) -> Tuple[List[Tuple[float, float]], List[float]]:
    """(finite points, infinite-bar births); caps turn infinite into finite."""
    finite = []
    inf_births = []
    for p in diagram.pairs_in_dim(dim):
        if p.is_infinite:
            if infinite_cap is not None:
                if p.birth < infinite_cap:
                    finite.append((p.birth, float(infinite_cap)))
            else:
                inf_births.append(p.birth)
        else:
            finite.append((p.birth, p.death))
    return finite, sorted(inf_births)


def _infinite_part(
    a_births: List[float], b_births: List[float], combine
) -> float:
    if len(a_births) != len(b_births):
        raise ValueError(
            f"infinite-bar counts differ ({len(a_births)} vs {len(b_births)}); "
            "pass infinite_cap to compare them as finite bars"
        )
    return combine(abs(x - y) for x, y in zip(a_births, b_births)) if a_births else 0.0


def bottleneck(
    d1: PersistenceDiagram,
    d2: PersistenceDiagram,
    dim: int,
    infinite_cap: Optional[float] = None,
) -> float:
    """Bottleneck distance in one homology dimension.

    Exact: the optimum is always one of the candidate values (pairwise
    l-infinity distances and half-persistences), so a binary search over
    the sorted candidates with a matching feasibility test finds it.
    """
    a, a_inf = _dim_points(d1, dim, infinite_cap)
    b, b_inf = _dim_points(d2, dim, infinite_cap)
    inf_cost = _infinite_part(a_inf, b_inf, max)

    if not a and not b:
        return inf_cost
    na, nb = len(a), len(b)
    diag_a = [(x[1] - x[0]) / 2.0 for x in a]
    diag_b = [(x[1] - x[0]) / 2.0 for x in b]
    cross = [
        [max(abs(a[i][0] - b[j][0]), abs(a[i][1] - b[j][1])) for j in range(nb)]
        for i in range(na)
    ]
    candidates = sorted(
        {0.0}
        | {c for row in cross for c in row}
        | set(diag_a)
        | set(diag_b)
    )

    def feasible(eps: float) -> bool:
        # left: A points then diagonal slots for B; right: B points then
        # diagonal slots for A; diagonal-to-diagonal always allowed
        adj: List[List[int]] = []
        for i in range(na):
            nbrs = [j for j in range(nb) if cross[i][j] <= eps]
            if diag_a[i] <= eps:
                nbrs.append(nb + i)
            adj.append(nbrs)
        diag_right = list(range(nb, nb + na))
        for j in range(nb):
            nbrs = list(diag_right)
            if diag_b[j] <= eps:
                nbrs.append(j)
            adj.append(nbrs)
        size, _, _ = hopcroft_karp(na + nb, na + nb, adj)
        return size == na + nb

    lo, hi = 0, len(candidates) - 1
    if not feasible(candidates[hi]):  # cannot happen: max candidate matches all
        raise AssertionError("no feasible matching at the largest candidate")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(candidates[lo], inf_cost)


def wasserstein1(
    d1: PersistenceDiagram,
    d2: PersistenceDiagram,
    dim: int,
    infinite_cap: Optional[float] = None,
) -> float:
    """Sum-cost (q=1) matching distance in one homology dimension."""
    a, a_inf = _dim_points(d1, dim, infinite_cap)
    b, b_inf = _dim_points(d2, dim, infinite_cap)
    inf_cost = _infinite_part(a_inf, b_inf, sum)

    if not a and not b:
        return inf_cost
    na, nb = len(a), len(b)
    n = na + nb
    cost = np.zeros((n, n))
    for i, (ab, ad) in enumerate(a):
        for j, (bb, bd) in enumerate(b):
            cost[i, j] = max(abs(ab - bb), abs(ad - bd))
        cost[i, nb:] = (ad - ab) / 2.0
    for j, (bb, bd) in enumerate(b):
        cost[na:, j] = (bd - bb) / 2.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum()) + inf_cost


def min_torsion_bottleneck(
    diagram: PersistenceDiagram, dim: Optional[int] = None
) -> float:
    """min (death - birth) / 2 over finite bars: the smallest bottleneck
    movement that can delete a bar (hence a lower bound on the distance
    to any diagram missing one of them)."""
    dims = diagram.dims_present() if dim is None else [dim]
    pers = [
        p.persistence
        for d in dims
        for p in diagram.pairs_in_dim(d, include_infinite=False)
    ]
    if not pers:
        raise ValueError("no finite positive bars in the diagram")
    return min(pers) / 2.0
