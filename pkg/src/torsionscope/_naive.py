"""Naive textbook column reduction, kept as an independent test oracle.

Strict left-to-right processing, no twist/clearing, dict-based columns,
and Fraction arithmetic for the rational case: deliberately nothing in
common with the optimized kernels beyond the input format.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence

__all__ = ["naive_reduce"]


def naive_reduce(
    rows: Sequence[Sequence[int]],
    coeffs: Sequence[Sequence[int]],
    q: Optional[int] = None,
) -> List[int]:
    """Reduce columns left to right; q=None means rational coefficients.

    Returns the low array (-1 for zero columns), directly comparable with
    the optimized kernels' output.
    """
    m = len(rows)
    low = [-1] * m
    owner_of_low: Dict[int, int] = {}
    reduced: List[Dict[int, object]] = []
    for j in range(m):
        if q is None:
            col: Dict[int, object] = {r: Fraction(c) for r, c in zip(rows[j], coeffs[j])}
        else:
            col = {r: c % q for r, c in zip(rows[j], coeffs[j]) if c % q}
        while col:
            i = max(col)
            k = owner_of_low.get(i)
            if k is None:
                owner_of_low[i] = j
                low[j] = i
                break
            other = reduced[k]
            if q is None:
                factor = -col[i] / other[i]
                for r, c in other.items():
                    v = col.get(r, Fraction(0)) + factor * c
                    if v:
                        col[r] = v
                    else:
                        col.pop(r, None)
            else:
                factor = (-col[i] * pow(other[i], -1, q)) % q
                for r, c in other.items():
                    v = (col.get(r, 0) + factor * c) % q
                    if v:
                        col[r] = v
                    else:
                        col.pop(r, None)
        reduced.append(col)
    return low
