"""Torsion detection and exact integral-homology oracles.

Two independent routes:

* `torsion_check` compares the reduction pairing over the rationals with
  the pairing over Z/qZ for each tested prime; the first column where the
  low arrays disagree is the first simplex causing torsion.  Sound and
  complete for q-torsion in the (relative) integral homology of the
  filtration, restricted to the tested primes.
* `integral_homology` / `relative_integral_homology` compute homology
  groups exactly via Smith normal form with arbitrary-precision integers;
  `scan_relative_torsion` sweeps every sublevel pair.  This is the oracle
  the detector is validated against.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .phfield import is_prime
from .rips import Filtration, boundary_matrix, codim1_faces

__all__ = [
    "DEFAULT_PRIMES",
    "TorsionFinding",
    "TorsionReport",
    "IntegralHomologySummary",
    "smith_normal_form",
    "torsion_check",
    "integral_homology",
    "relative_integral_homology",
    "scan_relative_torsion",
]

DEFAULT_PRIMES: Tuple[int, ...] = (2, 3, 5, 7, 11, 13)

DEFAULT_ORACLE_CAP = 5000


def smith_normal_form(matrix: Sequence[Sequence[int]]) -> Tuple[Tuple[int, ...], int]:
    """Diagonal of the Smith normal form (d1 | d2 | ... | dr, all > 0) and rank.

    Exact arbitrary-precision arithmetic; unimodular transforms are not
    returned.  Intermediate entry growth is expected and tolerated at
    oracle scale.
    """
    A = [[int(v) for v in row] for row in matrix]
    nrows = len(A)
    ncols = len(A[0]) if nrows else 0
    if any(len(row) != ncols for row in A):
        raise ValueError("matrix must be rectangular")
    diag: List[int] = []
    t = 0
    while t < nrows and t < ncols:
        # Pivot: nonzero entry of minimal magnitude in the submatrix.
        best = None
        for i in range(t, nrows):
            Ai = A[i]
            for j in range(t, ncols):
                v = Ai[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, bi, bj = best
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
        while True:
            dirty = False
            p = A[t][t]
            for i in range(t + 1, nrows):
                v = A[i][t]
                if v:
                    q = v // p
                    if q:
                        Ai, At = A[i], A[t]
                        for j in range(t, ncols):
                            Ai[j] -= q * At[j]
                    if A[i][t]:
                        # Remainder is smaller than the pivot: promote it.
                        A[t], A[i] = A[i], A[t]
                        dirty = True
                        break
            if dirty:
                continue
            p = A[t][t]
            for j in range(t + 1, ncols):
                v = A[t][j]
                if v:
                    q = v // p
                    if q:
                        for i in range(t, nrows):
                            A[i][j] -= q * A[i][t]
                    if A[t][j]:
                        for i in range(nrows):
                            A[i][t], A[i][j] = A[i][j], A[i][t]
                        dirty = True
                        break
            if dirty:
                continue
            # Row and column are clear; enforce the divisibility chain.
            p = A[t][t]
            offender = None
            for i in range(t + 1, nrows):
                Ai = A[i]
                for j in range(t + 1, ncols):
                    if Ai[j] % p:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            At, Ao = A[t], A[offender]
            for j in range(t, ncols):
                At[j] += Ao[j]
        diag.append(abs(A[t][t]))
        t += 1
    return tuple(diag), len(diag)


@dataclass(frozen=True)
class IntegralHomologySummary:
    """Free rank and torsion coefficients of H_p for p = 0..max_hom_dim.

    Ranks refer to the homology of the max_dim-capped complex: the top
    dimension has no higher boundary map, exactly as constructed.
    """

    free_ranks: Tuple[int, ...]
    torsion: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.free_ranks) != len(self.torsion):
            raise ValueError("free_ranks and torsion must align")
        for chain in self.torsion:
            for a, b in zip(chain, chain[1:]):
                if b % a:
                    raise ValueError(f"torsion coefficients must form a chain, got {chain}")

    def group_str(self, p: int) -> str:
        parts = []
        if self.free_ranks[p]:
            parts.append(f"Z^{self.free_ranks[p]}" if self.free_ranks[p] > 1 else "Z")
        parts.extend(f"Z/{d}" for d in self.torsion[p])
        return " + ".join(parts) if parts else "0"

    def torsion_primes(self, p: Optional[int] = None) -> Tuple[int, ...]:
        chains = self.torsion if p is None else (self.torsion[p],)
        primes = set()
        for chain in chains:
            for d in chain:
                primes.update(_prime_factors(d))
        return tuple(sorted(primes))


def _prime_factors(n: int) -> List[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class TorsionFinding:
    prime: int
    first_index: int
    hom_dim: int


@dataclass(frozen=True)
class TorsionReport:
    """Verdict of a torsion scan: per-prime first discrepancy indices."""

    has_torsion: bool
    findings: Tuple[TorsionFinding, ...]
    primes_tested: Tuple[int, ...]
    method: str

    def __post_init__(self) -> None:
        if self.has_torsion != bool(self.findings):
            raise ValueError("has_torsion must mirror findings")
        for f in self.findings:
            if f.prime not in self.primes_tested:
                raise ValueError(f"finding prime {f.prime} not in primes_tested")

    def primes_found(self) -> Tuple[int, ...]:
        return tuple(sorted({f.prime for f in self.findings}))

    def first_finding(self) -> Optional[TorsionFinding]:
        if not self.findings:
            return None
        return min(self.findings, key=lambda f: (f.first_index, f.prime))

    def to_obj(self) -> dict:
        return {
            "has_torsion": self.has_torsion,
            "findings": [
                {"prime": f.prime, "first_index": f.first_index, "hom_dim": f.hom_dim}
                for f in self.findings
            ],
            "primes_tested": list(self.primes_tested),
            "method": self.method,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TorsionReport":
        return cls(
            bool(obj["has_torsion"]),
            tuple(
                TorsionFinding(int(f["prime"]), int(f["first_index"]), int(f["hom_dim"]))
                for f in obj["findings"]
            ),
            tuple(int(q) for q in obj["primes_tested"]),
            str(obj["method"]),
        )


def torsion_check(
    filtration: Filtration,
    primes: Sequence[int] = DEFAULT_PRIMES,
    max_hom_dim: Optional[int] = None,
) -> TorsionReport:
    """Compare rational vs mod-q pairings; report per-prime discrepancies.

    first_index for prime q is the smallest filtration index whose
    reduced-column low differs between the rational and the Z/qZ
    computation under the canonical filtration order; hom_dim is the
    dimension of that column's pairing event (its simplex dimension - 1).
    """
    if not primes:
        raise ValueError("primes must be nonempty")
    for q in primes:
        if not is_prime(q):
            raise ValueError(f"{q} is not prime")
    if max_hom_dim is None:
        max_hom_dim = max(filtration.max_dim - 1, 0)
    bm = boundary_matrix(filtration)
    rows = [[r for r, _ in col] for col in bm.columns]
    cfs = [[c for _, c in col] for col in bm.columns]
    dims = bm.dims.tolist()
    low_q0 = _kernels.reduce_rational(rows, cfs, dims)
    findings = []
    for q in primes:
        low_q = _kernels.reduce_mod_q(rows, cfs, dims, q)
        first = None
        for j in range(len(low_q)):
            if low_q[j] != low_q0[j] and dims[j] - 1 <= max_hom_dim:
                first = j
                break
        if first is not None:
            findings.append(TorsionFinding(int(q), first, int(dims[first]) - 1))
    return TorsionReport(
        bool(findings), tuple(findings), tuple(int(q) for q in primes), "prime_comparison"
    )


def _window_positions(filtration: Filtration, lo: int, hi: int) -> Dict[int, List[int]]:
    dims = filtration.dims
    by_dim: Dict[int, List[int]] = {}
    for k in range(lo, hi):
        by_dim.setdefault(int(dims[k]), []).append(k)
    return by_dim


def _boundary_submatrix(
    filtration: Filtration, cols: Sequence[int], rows: Sequence[int]
) -> List[List[int]]:
    """Dense relative boundary submatrix: rows/cols are global indices."""
    row_pos = {g: i for i, g in enumerate(rows)}
    mat = [[0] * len(cols) for _ in rows]
    for cj, g in enumerate(cols):
        verts = filtration.simplices[g].vertices
        for omit, face in enumerate(codim1_faces(verts)):
            gi = filtration.index_of[face]
            ri = row_pos.get(gi)
            if ri is not None:
                mat[ri][cj] = 1 if omit % 2 == 0 else -1
    return mat


def _homology_of_window(
    filtration: Filtration, lo: int, hi: int, max_hom_dim: int
) -> IntegralHomologySummary:
    by_dim = _window_positions(filtration, lo, hi)
    ranks = []
    torsions = []
    snf_cache: Dict[int, Tuple[Tuple[int, ...], int]] = {}

    def snf_of_boundary(p: int) -> Tuple[Tuple[int, ...], int]:
        # SNF of the relative boundary map from p-chains to (p-1)-chains.
        if p not in snf_cache:
            cols = by_dim.get(p, [])
            rows = by_dim.get(p - 1, []) if p >= 1 else []
            if p == 0 or not cols or not rows:
                snf_cache[p] = ((), 0)
            else:
                snf_cache[p] = smith_normal_form(_boundary_submatrix(filtration, cols, rows))
        return snf_cache[p]

    for p in range(max_hom_dim + 1):
        n_p = len(by_dim.get(p, []))
        _, rank_p = snf_of_boundary(p)
        diag_up, rank_up = snf_of_boundary(p + 1)
        ranks.append(n_p - rank_p - rank_up)
        torsions.append(tuple(d for d in diag_up if d > 1))
    return IntegralHomologySummary(tuple(ranks), tuple(torsions))


def integral_homology(
    filtration: Filtration,
    radius: float,
    max_hom_dim: Optional[int] = None,
    simplex_cap: int = DEFAULT_ORACLE_CAP,
) -> IntegralHomologySummary:
    """Exact integral homology of the sublevel complex at the radius."""
    if max_hom_dim is None:
        max_hom_dim = filtration.max_dim
    hi = filtration.prefix_size(radius)
    if hi > simplex_cap:
        raise ValueError(f"sublevel complex has {hi} simplices, cap is {simplex_cap}")
    return _homology_of_window(filtration, 0, hi, max_hom_dim)


def relative_integral_homology(
    filtration: Filtration,
    radius_j: float,
    radius_i: float,
    max_hom_dim: Optional[int] = None,
    simplex_cap: int = DEFAULT_ORACLE_CAP,
) -> IntegralHomologySummary:
    """Exact homology of the quotient complex C(K_{radius_i}) / C(K_{radius_j})."""
    if radius_i < radius_j:
        raise ValueError("need radius_j <= radius_i")
    if max_hom_dim is None:
        max_hom_dim = filtration.max_dim
    lo = filtration.prefix_size(radius_j)
    hi = filtration.prefix_size(radius_i)
    if hi - lo > simplex_cap:
        raise ValueError(f"window has {hi - lo} simplices, cap is {simplex_cap}")
    return _homology_of_window(filtration, lo, hi, max_hom_dim)


def scan_relative_torsion(
    filtration: Filtration,
    primes: Sequence[int] = DEFAULT_PRIMES,
    max_hom_dim: Optional[int] = None,
) -> TorsionReport:
    """SNF sweep over every sublevel pair (K_j <= K_i) of the filtration.

    Reports, per tested prime, whether some relative integral homology
    group has torsion with that prime divisor.  first_index is the end
    index (inclusive) of the earliest window exhibiting it, which is a
    window bound, not a pairing index.

    Relative H_0 is always free (the boundary-1 submatrix is an incidence
    matrix, totally unimodular) and the top dimension has no incoming
    boundary, so only 1 <= p <= max_dim - 1 is scanned.
    """
    for q in primes:
        if not is_prime(q):
            raise ValueError(f"{q} is not prime")
    if max_hom_dim is None:
        max_hom_dim = filtration.max_dim - 1
    m = len(filtration)
    births = filtration.births
    dims = filtration.dims
    # Sublevel prefixes: one cut after each run of equal births, plus the
    # empty complex.
    cuts = [0] + [k + 1 for k in range(m) if k + 1 == m or births[k + 1] != births[k]]

    found: Dict[int, Tuple[int, int]] = {}  # prime -> (window end index, hom_dim)
    prime_set = tuple(sorted(set(int(q) for q in primes)))
    for p in range(1, min(max_hom_dim, filtration.max_dim - 1) + 1):
        E = [k for k in range(m) if dims[k] == p]
        T = [k for k in range(m) if dims[k] == p + 1]
        if not T:
            continue
        seen: Dict[Tuple[int, int, int, int], Tuple[int, ...]] = {}
        for ci in range(len(cuts)):
            for cj in range(ci + 1, len(cuts)):
                lo, hi = cuts[ci], cuts[cj]
                e_lo, e_hi = bisect_left(E, lo), bisect_left(E, hi)
                t_lo, t_hi = bisect_left(T, lo), bisect_left(T, hi)
                if t_lo == t_hi:
                    continue
                key = (e_lo, e_hi, t_lo, t_hi)
                if key in seen:
                    torsion_primes = seen[key]
                else:
                    mat = _boundary_submatrix(filtration, T[t_lo:t_hi], E[e_lo:e_hi])
                    diag, _ = smith_normal_form(mat)
                    tp = set()
                    for d in diag:
                        if d > 1:
                            tp.update(_prime_factors(d))
                    torsion_primes = tuple(sorted(tp))
                    seen[key] = torsion_primes
                for q in torsion_primes:
                    if q in prime_set:
                        prev = found.get(q)
                        if prev is None or (hi - 1, p) < prev:
                            found[q] = (hi - 1, p)
    findings = tuple(
        TorsionFinding(q, found[q][0], found[q][1]) for q in sorted(found)
    )
    return TorsionReport(bool(findings), findings, prime_set, "snf_oracle")
