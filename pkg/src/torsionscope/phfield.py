"""Persistent homology over a prime field or the exact rationals.

Reduction is the standard left-to-right column algorithm (with the
twist/clearing order, validated against the naive oracle); pairs (i, j)
are read off the low array.  Zero-persistence pairs are retained in the
data structure (torsion first-discrepancy indexing needs them) but
excluded from default views, metrics, and serialized diagrams.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

from . import _kernels
from .rips import Filtration, boundary_matrix

__all__ = [
    "Coefficients",
    "PersistencePair",
    "PersistenceDiagram",
    "Barcode",
    "is_prime",
    "reduce",
    "betti_curve",
    "euler_characteristic",
    "save_diagram",
    "load_diagram",
]


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Coefficients:
    """Coefficient ring for reduction: Z/qZ with q prime, or Q."""

    kind: str
    q: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind == "prime":
            if self.q is None or not is_prime(self.q):
                raise ValueError(f"q must be prime, got {self.q}")
        elif self.kind == "rational":
            if self.q is not None:
                raise ValueError("rational coefficients take no q")
        else:
            raise ValueError(f"kind must be 'prime' or 'rational', got {self.kind!r}")

    @classmethod
    def prime(cls, q: int) -> "Coefficients":
        return cls("prime", int(q))

    @classmethod
    def rational(cls) -> "Coefficients":
        return cls("rational")

    @classmethod
    def parse(cls, label: str) -> "Coefficients":
        """Parse 'q<prime>' (e.g. 'q2') or 'rational'."""
        if label == "rational":
            return cls.rational()
        if label.startswith("q") and label[1:].isdigit():
            return cls.prime(int(label[1:]))
        raise ValueError(f"cannot parse coefficients {label!r}")

    @property
    def label(self) -> str:
        return "rational" if self.kind == "rational" else f"q{self.q}"


@dataclass(frozen=True)
class PersistencePair:
    """One interval [birth, death) with its creating/destroying indices."""

    birth: float
    death: float  # math.inf for essential classes
    dim: int
    birth_index: int
    death_index: Optional[int]

    def __post_init__(self) -> None:
        if self.death < self.birth:
            raise ValueError("death must be >= birth")
        if (self.death_index is None) != math.isinf(self.death):
            raise ValueError("death_index must be None exactly for infinite pairs")

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def is_infinite(self) -> bool:
        return self.death_index is None

    @property
    def is_finite(self) -> bool:
        return self.death_index is not None


class PersistenceDiagram:
    """Multiset of persistence pairs over a stated coefficient ring."""

    def __init__(self, pairs: Tuple[PersistencePair, ...], coefficients: Coefficients):
        self.pairs = tuple(sorted(pairs, key=_pair_key))
        self.coefficients = coefficients

    def pairs_in_dim(
        self,
        dim: int,
        include_zero: bool = False,
        include_infinite: bool = True,
    ) -> List[PersistencePair]:
        out = []
        for p in self.pairs:
            if p.dim != dim:
                continue
            if not include_zero and p.persistence == 0.0:
                continue
            if not include_infinite and p.is_infinite:
                continue
            out.append(p)
        return out

    def finite_pairs(self, dim: int, include_zero: bool = False) -> List[PersistencePair]:
        return self.pairs_in_dim(dim, include_zero=include_zero, include_infinite=False)

    def infinite_pairs(self, dim: int) -> List[PersistencePair]:
        return [p for p in self.pairs if p.dim == dim and p.is_infinite]

    def dims_present(self) -> List[int]:
        return sorted({p.dim for p in self.pairs})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.pairs == other.pairs and self.coefficients == other.coefficients

    def __repr__(self) -> str:
        return (
            f"PersistenceDiagram({len(self.pairs)} pairs, "
            f"coefficients={self.coefficients.label})"
        )


def _pair_key(p: PersistencePair) -> Tuple:
    return (p.dim, p.birth, p.death, p.birth_index)


@dataclass(frozen=True)
class Barcode:
    """Per-dimension view of a diagram as bar lengths."""

    dim: int
    lengths: Tuple[float, ...]  # finite positive lengths, descending
    infinite_births: Tuple[float, ...]

    @classmethod
    def from_diagram(cls, diagram: PersistenceDiagram, dim: int) -> "Barcode":
        finite = diagram.finite_pairs(dim)
        inf = diagram.infinite_pairs(dim)
        lengths = tuple(sorted((p.persistence for p in finite), reverse=True))
        return cls(dim, lengths, tuple(sorted(p.birth for p in inf)))


def reduce(
    filtration: Filtration,
    coeffs: Coefficients,
    max_hom_dim: Optional[int] = None,
) -> PersistenceDiagram:
    """Column-reduce the boundary matrix and read off the pairing.

    Pairs (i, j) with i = low(j) give intervals [birth_i, birth_j) in
    homology dimension dim(i); unpaired positive simplices of dimension
    <= max_hom_dim give infinite intervals.
    """
    if not isinstance(coeffs, Coefficients):
        raise ValueError("coeffs must be a Coefficients value")
    if max_hom_dim is None:
        max_hom_dim = filtration.max_dim
    bm = boundary_matrix(filtration)
    rows = [[r for r, _ in col] for col in bm.columns]
    cfs = [[c for _, c in col] for col in bm.columns]
    dims = bm.dims.tolist()
    if coeffs.kind == "prime":
        low = _kernels.reduce_mod_q(rows, cfs, dims, coeffs.q)
    else:
        low = _kernels.reduce_rational(rows, cfs, dims)
    return diagram_from_low(filtration, low, coeffs, max_hom_dim)


def diagram_from_low(
    filtration: Filtration,
    low: List[int],
    coeffs: Coefficients,
    max_hom_dim: int,
) -> PersistenceDiagram:
    births = filtration.births
    dims = filtration.dims
    m = len(low)
    destroyed = bytearray(m)
    pairs: List[PersistencePair] = []
    for j in range(m):
        i = low[j]
        if i < 0:
            continue
        destroyed[i] = 1
        d = int(dims[i])
        if d <= max_hom_dim:
            pairs.append(
                PersistencePair(float(births[i]), float(births[j]), d, i, j)
            )
    for i in range(m):
        if low[i] < 0 and not destroyed[i] and int(dims[i]) <= max_hom_dim:
            pairs.append(PersistencePair(float(births[i]), math.inf, int(dims[i]), i, None))
    return PersistenceDiagram(tuple(pairs), coeffs)


def betti_curve(diagram: PersistenceDiagram, dim: int, radius: float) -> int:
    """Number of dim-dimensional intervals [b, d) containing the radius."""
    return sum(
        1
        for p in diagram.pairs
        if p.dim == dim and p.birth <= radius < p.death
    )


def euler_characteristic(diagram: PersistenceDiagram, radius: float) -> int:
    """Alternating sum of Betti numbers at the radius.

    The diagram must have been computed to the full max_dim of the complex
    (max_hom_dim not truncated), otherwise the sum is meaningless.
    """
    chi = 0
    for dim in diagram.dims_present():
        chi += (-1) ** dim * betti_curve(diagram, dim, radius)
    return chi


def diagram_to_obj(diagram: PersistenceDiagram, include_zero: bool = False) -> dict:
    pairs = []
    for p in diagram.pairs:
        if not include_zero and p.persistence == 0.0:
            continue
        pairs.append(
            {
                "birth": p.birth,
                "death": "inf" if p.is_infinite else p.death,
                "dim": p.dim,
                "birth_index": p.birth_index,
                "death_index": p.death_index,
            }
        )
    return {"coefficients": diagram.coefficients.label, "pairs": pairs}


def diagram_from_obj(obj: dict) -> PersistenceDiagram:
    pairs = []
    for e in obj["pairs"]:
        death = math.inf if e["death"] == "inf" else float(e["death"])
        pairs.append(
            PersistencePair(
                float(e["birth"]), death, int(e["dim"]), int(e["birth_index"]),
                None if e["death_index"] is None else int(e["death_index"]),
            )
        )
    return PersistenceDiagram(tuple(pairs), Coefficients.parse(obj["coefficients"]))


def save_diagram(
    diagram: PersistenceDiagram, path: Union[str, Path], include_zero: bool = False
) -> None:
    Path(path).write_text(json.dumps(diagram_to_obj(diagram, include_zero), sort_keys=True))


def load_diagram(path: Union[str, Path]) -> PersistenceDiagram:
    return diagram_from_obj(json.loads(Path(path).read_text()))
