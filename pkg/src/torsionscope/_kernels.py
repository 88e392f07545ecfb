"""Kernel selection: compiled extension when available, pure Python otherwise.

Set TORSIONSCOPE_PURE=1 to force the pure-Python kernels.  Both backends
produce identical low arrays; the compiled rational kernel additionally
falls back to the big-integer Python kernel if its int64 coefficients
would overflow (rare; triggered by adversarial filtrations, not by
Euclidean data at our scales).
"""

from __future__ import annotations

import os
from typing import List, Sequence

from . import _reduction_py

if os.environ.get("TORSIONSCOPE_PURE") == "1":
    _ext = None
else:
    try:
        from . import _reduction_ext as _ext  # type: ignore[attr-defined]
    except ImportError:
        _ext = None

BACKEND = "compiled" if _ext is not None else "pure"


def reduce_mod_q(
    rows: Sequence[Sequence[int]],
    coeffs: Sequence[Sequence[int]],
    dims: Sequence[int],
    q: int,
    twist: bool = True,
) -> List[int]:
    if _ext is not None:
        return _ext.reduce_mod_q(rows, coeffs, list(dims), q, twist)
    return _reduction_py.reduce_mod_q(rows, coeffs, dims, q, twist)


def reduce_rational(
    rows: Sequence[Sequence[int]],
    coeffs: Sequence[Sequence[int]],
    dims: Sequence[int],
    twist: bool = True,
) -> List[int]:
    if _ext is not None:
        try:
            return _ext.reduce_rational(rows, coeffs, list(dims), twist)
        except OverflowError:
            pass
    return _reduction_py.reduce_rational(rows, coeffs, dims, twist)
