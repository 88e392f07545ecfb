"""Pure-Python column-reduction kernels (fallback for the compiled extension).

Both kernels return the `low` array of the reduced boundary matrix:
low[j] = index of the lowest surviving row of column j, or -1 when the
column reduces to zero.  The pairing (i = low[j], j) is what every
persistence and torsion computation downstream consumes.

The processing order uses the twist/clearing optimization: dimensions are
reduced from high to low and a column whose index was registered as a
pivot row is cleared without work.  The resulting pairing is identical to
the naive left-to-right reduction because the lowstar pairing is uniquely
determined by the ranks of the lower-left submatrices, and clearing only
skips columns that provably reduce to zero.

Rational arithmetic never touches floating point: columns are kept as
primitive integer vectors (content 1) and the elimination step
col <- c_p * col - c_j * col_p rescales by a nonzero rational, which does
not change any low.  Python integers make this overflow-free.
"""

from __future__ import annotations

from math import gcd
from typing import List, Sequence, Tuple

__all__ = ["reduce_mod_q", "reduce_rational"]


def _column_order(dims: Sequence[int], twist: bool) -> List[int]:
    if not twist:
        return [j for j in range(len(dims)) if dims[j] >= 1]
    order: List[int] = []
    for d in range(max(dims, default=0), 0, -1):
        order.extend(j for j in range(len(dims)) if dims[j] == d)
    return order


def reduce_mod_q(
    rows: Sequence[Sequence[int]],
    coeffs: Sequence[Sequence[int]],
    dims: Sequence[int],
    q: int,
    twist: bool = True,
) -> List[int]:
    """Reduce a boundary matrix over Z/qZ (q prime); returns the low array."""
    m = len(rows)
    low = [-1] * m
    pivot_of_row = [-1] * m
    cleared = bytearray(m)
    stored_rows: List[List[int]] = [[] for _ in range(m)]
    stored_coeffs: List[List[int]] = [[] for _ in range(m)]

    for j in _column_order(dims, twist):
        if cleared[j]:
            continue
        wr = list(rows[j])
        wc = [c % q for c in coeffs[j]]
        while wr:
            i = wr[-1]
            k = pivot_of_row[i]
            if k < 0:
                pivot_of_row[i] = j
                low[j] = i
                stored_rows[j] = wr
                stored_coeffs[j] = wc
                if twist:
                    cleared[i] = 1
                break
            # factor = -wc[low] / stored low coeff (mod q)
            factor = (-wc[-1] * pow(stored_coeffs[k][-1], -1, q)) % q
            wr, wc = _add_scaled_mod(wr, wc, stored_rows[k], stored_coeffs[k], factor, q)
    return low


def _add_scaled_mod(
    r1: List[int], c1: List[int], r2: List[int], c2: List[int], factor: int, q: int
) -> Tuple[List[int], List[int]]:
    out_r: List[int] = []
    out_c: List[int] = []
    a, b, n1, n2 = 0, 0, len(r1), len(r2)
    while a < n1 and b < n2:
        ra, rb = r1[a], r2[b]
        if ra < rb:
            out_r.append(ra)
            out_c.append(c1[a])
            a += 1
        elif ra > rb:
            v = (factor * c2[b]) % q
            if v:
                out_r.append(rb)
                out_c.append(v)
            b += 1
        else:
            v = (c1[a] + factor * c2[b]) % q
            if v:
                out_r.append(ra)
                out_c.append(v)
            a += 1
            b += 1
    while a < n1:
        out_r.append(r1[a])
        out_c.append(c1[a])
        a += 1
    while b < n2:
        v = (factor * c2[b]) % q
        if v:
            out_r.append(r2[b])
            out_c.append(v)
        b += 1
    return out_r, out_c


def reduce_rational(
    rows: Sequence[Sequence[int]],
    coeffs: Sequence[Sequence[int]],
    dims: Sequence[int],
    twist: bool = True,
) -> List[int]:
    """Reduce a boundary matrix over the rationals; returns the low array."""
    m = len(rows)
    low = [-1] * m
    pivot_of_row = [-1] * m
    cleared = bytearray(m)
    stored_rows: List[List[int]] = [[] for _ in range(m)]
    stored_coeffs: List[List[int]] = [[] for _ in range(m)]

    for j in _column_order(dims, twist):
        if cleared[j]:
            continue
        wr = list(rows[j])
        wc = list(coeffs[j])
        while wr:
            i = wr[-1]
            k = pivot_of_row[i]
            if k < 0:
                pivot_of_row[i] = j
                low[j] = i
                stored_rows[j] = wr
                stored_coeffs[j] = wc
                if twist:
                    cleared[i] = 1
                break
            wr, wc = _eliminate_exact(wr, wc, stored_rows[k], stored_coeffs[k])
        if not wr:
            low[j] = -1
    return low


def _eliminate_exact(
    r1: List[int], c1: List[int], r2: List[int], c2: List[int]
) -> Tuple[List[int], List[int]]:
    """col <- cp * col - cj * pivot_col, then divide out the content."""
    cp = c2[-1]
    cj = c1[-1]
    out_r: List[int] = []
    out_c: List[int] = []
    a, b, n1, n2 = 0, 0, len(r1), len(r2)
    content = 0
    while a < n1 and b < n2:
        ra, rb = r1[a], r2[b]
        if ra < rb:
            v = cp * c1[a]
            out_r.append(ra)
            out_c.append(v)
            content = gcd(content, v)
            a += 1
        elif ra > rb:
            v = -cj * c2[b]
            out_r.append(rb)
            out_c.append(v)
            content = gcd(content, v)
            b += 1
        else:
            v = cp * c1[a] - cj * c2[b]
            if v:
                out_r.append(ra)
                out_c.append(v)
                content = gcd(content, v)
            a += 1
            b += 1
    while a < n1:
        v = cp * c1[a]
        out_r.append(r1[a])
        out_c.append(v)
        content = gcd(content, v)
        a += 1
    while b < n2:
        v = -cj * c2[b]
        out_r.append(r2[b])
        out_c.append(v)
        content = gcd(content, v)
        b += 1
    if content > 1:
        out_c = [v // content for v in out_c]
    return out_r, out_c
