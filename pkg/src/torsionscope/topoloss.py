"""Topology-aware loss terms for autoencoder training.

Two terms with value + frozen-selection subgradient contracts:

* topo_loss aligns input and latent spaces along the edges that realize
  their dimension-0 persistence pairings (minimum-spanning-tree edges of
  each space), penalizing squared length differences in both directions.
* rtd_loss compares input and reconstruction through the barcode of an
  auxiliary cone complex over the entrywise-min distance graph: one
  extra apex vertex is joined to every point at weight 0, simplices of
  plain points enter at the max of min(w, w-tilde) over their edges, and
  coned simplices enter at the max of the reference-side weights.  The
  complex is contractible in the limit, so every bar in the inspected
  dimension dies; the loss is the total bar length, summed over both
  cone directions.  Bar endpoints are weights of identifiable edges,
  which is what the subgradient differentiates through (ties resolved to
  the input side, contributing zero).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Tuple, Union

import numpy as np

from .phfield import Coefficients, reduce
from .pointcloud import PointCloud
from .nn import LossTerm, mse_term
from .rips import Filtration

__all__ = [
    "EdgeSelection",
    "RtdPairing",
    "RtdBar",
    "topo_loss",
    "topo_loss_grad",
    "rtd_loss",
    "rtd_loss_grad",
    "combined_loss",
    "mst_edges",
]

Points = Union[PointCloud, np.ndarray]


def _pts(x: Points) -> np.ndarray:
    if isinstance(x, PointCloud):
        return x.points
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d point array")
    return arr


def _distance_matrix(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


# --- TopoAE alignment loss ----------------------------------------------


@dataclass(frozen=True)
class EdgeSelection:
    """Edges realizing a space's dimension-0 pairing events."""

    pairs: Tuple[Tuple[int, int], ...]
    roles: Tuple[str, ...]
    hom_dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not len(self.pairs) == len(self.roles) == len(self.hom_dims):
            raise ValueError("selection fields must align")

    def to_obj(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "roles": list(self.roles),
            "hom_dims": [int(d) for d in self.hom_dims],
        }


def mst_edges(dm: np.ndarray) -> List[Tuple[int, int]]:
    """Minimum-spanning-tree edges under (weight, i, j) tie order.

    These are exactly the destroyer edges of dimension-0 persistence of
    the distance graph: Kruskal's merges replay the union-find pairing
    of the standard reduction.
    """
    n = dm.shape[0]
    order = sorted((dm[i, j], i, j) for i in range(n) for j in range(i + 1, n))
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    out = []
    for _, i, j in order:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            out.append((i, j))
            if len(out) == n - 1:
                break
    return out


def _selection_from(dm: np.ndarray) -> EdgeSelection:
    edges = tuple(mst_edges(dm))
    return EdgeSelection(edges, ("destroyer",) * len(edges), (0,) * len(edges))


def topo_loss(
    input_cloud: Points, latent_cloud: Points
) -> Tuple[float, Tuple[EdgeSelection, EdgeSelection]]:
    """Two-way squared alignment over each space's own selected edges.

    L = 1/2 ||A^X[pi^X] - A^Z[pi^X]||^2 + 1/2 ||A^Z[pi^Z] - A^X[pi^Z]||^2
    with A^S[pi] the vector of distances in space S along edge list pi.
    """
    x = _pts(input_cloud)
    z = _pts(latent_cloud)
    if x.shape[0] != z.shape[0]:
        raise ValueError("clouds must have equal cardinality")
    dx = _distance_matrix(x)
    dz = _distance_matrix(z)
    sel_x = _selection_from(dx)
    sel_z = _selection_from(dz)
    value = 0.0
    for (a, b) in sel_x.pairs:
        value += 0.5 * (dx[a, b] - dz[a, b]) ** 2
    for (a, b) in sel_z.pairs:
        value += 0.5 * (dz[a, b] - dx[a, b]) ** 2
    return value, (sel_x, sel_z)


def topo_loss_grad(
    input_cloud: Points,
    latent_cloud: Points,
    selections: Tuple[EdgeSelection, EdgeSelection],
) -> np.ndarray:
    """Gradient w.r.t. latent coordinates, selections held fixed."""
    x = _pts(input_cloud)
    z = _pts(latent_cloud)
    dx = _distance_matrix(x)
    dz = _distance_matrix(z)
    grad = np.zeros_like(z)
    sel_x, sel_z = selections
    for (a, b) in list(sel_x.pairs) + list(sel_z.pairs):
        lz = dz[a, b]
        if lz == 0.0:  # coincident latent points: flat by convention
            continue
        coeff = lz - dx[a, b]  # d/dz of 1/2 (dz - dx)^2, either direction
        u = (z[a] - z[b]) / lz
        grad[a] += coeff * u
        grad[b] -= coeff * u
    return grad


# --- RTD loss ------------------------------------------------------------


@dataclass(frozen=True)
class RtdBar:
    """One finite bar of the auxiliary complex, with edge provenance.

    birth_edge/death_edge name the edge (of the comparison cloud's
    weight matrix) through which the endpoint moves when the comparison
    points move; None when the endpoint tracks the input side (or a
    weight-0 apex edge), contributing no gradient.
    """

    birth: float
    death: float
    birth_edge: Optional[Tuple[int, int]]
    death_edge: Optional[Tuple[int, int]]

    @property
    def length(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class RtdPairing:
    forward_bars: Tuple[RtdBar, ...]
    backward_bars: Tuple[RtdBar, ...]
    hom_dim: int

    def to_obj(self) -> dict:
        def bars_obj(bars):
            return [
                {
                    "birth": b.birth,
                    "death": b.death,
                    "birth_edge": list(b.birth_edge) if b.birth_edge else None,
                    "death_edge": list(b.death_edge) if b.death_edge else None,
                }
                for b in bars
            ]

        return {
            "hom_dim": self.hom_dim,
            "forward": bars_obj(self.forward_bars),
            "backward": bars_obj(self.backward_bars),
        }


def _build_direction(
    n: int,
    w_min: np.ndarray,
    w_cone: np.ndarray,
    plain_tracks: np.ndarray,
    cone_tracks: bool,
    hom_dim: int,
) -> Tuple[float, List[RtdBar]]:
    """Barcode total for one cone direction.

    w_min: shared plain-edge weights (entrywise min); w_cone: weights
    the coned simplices use; plain_tracks[i, j]: True when the plain
    edge (i, j) weight moves with the comparison cloud; cone_tracks:
    True when the cone side is the comparison cloud.
    """
    apex = n
    entries: List[Tuple[float, Tuple[int, ...]]] = []
    provenance: Dict[Tuple[int, ...], Optional[Tuple[int, int]]] = {}

    def add(birth: float, verts: Tuple[int, ...], edge: Optional[Tuple[int, int]]) -> None:
        entries.append((birth, verts))
        provenance[verts] = edge

    for v in range(n):
        add(0.0, (v,), None)
    add(0.0, (apex,), None)
    for v in range(n):
        add(0.0, (v, apex), None)
    # plain simplices on 2..hom_dim+2 vertices, coned ones underneath
    for size in range(2, hom_dim + 3):
        for verts in combinations(range(n), size):
            edges = list(combinations(verts, 2))
            births = [w_min[e] for e in edges]
            k = int(np.argmax(births))
            e_star = edges[k]
            add(births[k], verts, e_star if plain_tracks[e_star] else None)
        if size <= hom_dim + 1:
            for verts in combinations(range(n), size):
                edges = list(combinations(verts, 2))
                births = [w_cone[e] for e in edges]
                k = int(np.argmax(births))
                add(births[k], verts + (apex,), edges[k] if cone_tracks else None)

    filtration = Filtration.from_simplices(entries, validate=False)
    diagram = reduce(filtration, Coefficients.prime(2), max_hom_dim=hom_dim)
    if diagram.infinite_pairs(hom_dim):
        raise AssertionError("cone complex must kill every inspected bar")
    bars = []
    total = 0.0
    for p in diagram.finite_pairs(hom_dim):
        bverts = filtration.simplices[p.birth_index].vertices
        dverts = filtration.simplices[p.death_index].vertices
        bars.append(RtdBar(p.birth, p.death, provenance[bverts], provenance[dverts]))
        total += p.persistence
    return total, bars


def rtd_loss(
    cloud: Points, comparison: Points, hom_dim: int = 1
) -> Tuple[float, RtdPairing]:
    """Total auxiliary-barcode length between a cloud and its comparison.

    Zero exactly when all pairwise distances agree.  Quadratic simplex
    enumeration: intended for minibatch-sized inputs (n <= 64 or so).
    """
    p = _pts(cloud)
    pt = _pts(comparison)
    if p.shape[0] != pt.shape[0]:
        raise ValueError("clouds must have equal cardinality")
    if hom_dim < 1:
        raise ValueError("hom_dim must be >= 1")
    n = p.shape[0]
    w = _distance_matrix(p)
    wt = _distance_matrix(pt)
    w_min = np.minimum(w, wt)
    # strict: ties go to the input side and freeze the gradient there
    tracks = wt < w
    fwd_total, fwd_bars = _build_direction(n, w_min, w, tracks, False, hom_dim)
    bwd_total, bwd_bars = _build_direction(n, w_min, wt, tracks, True, hom_dim)
    return fwd_total + bwd_total, RtdPairing(tuple(fwd_bars), tuple(bwd_bars), hom_dim)


def rtd_loss_grad(cloud: Points, comparison: Points, pairing: RtdPairing) -> np.ndarray:
    """Gradient w.r.t. the comparison cloud, pairings held fixed."""
    pt = _pts(comparison)
    wt = _distance_matrix(pt)
    grad = np.zeros_like(pt)

    def push(edge: Optional[Tuple[int, int]], sign: float) -> None:
        if edge is None:
            return
        a, b = edge
        dist = wt[a, b]
        if dist == 0.0:
            return
        u = (pt[a] - pt[b]) / dist
        grad[a] += sign * u
        grad[b] -= sign * u

    for bars in (pairing.forward_bars, pairing.backward_bars):
        for bar in bars:
            push(bar.death_edge, 1.0)
            push(bar.birth_edge, -1.0)
    return grad


# --- bundles for training ------------------------------------------------


def combined_loss(
    kind: str,
    weight: float,
    active_from_epoch: Optional[int] = None,
    rtd_hom_dim: int = 1,
) -> List[LossTerm]:
    """MSE plus one topology term, ready for neuralnet.train.

    TopoAE compares the batch with its latent embedding; RTD compares
    the batch with its reconstruction.  RTD defaults to activating at
    epoch 10 (reconstruction-only warmup), TopoAE to epoch 0.
    """
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    if kind == "topoae":
        start = 0 if active_from_epoch is None else active_from_epoch

        def topo_fn(batch, latent, output):
            value, sels = topo_loss(batch, latent)
            return value, topo_loss_grad(batch, latent, sels), None

        return [mse_term(), LossTerm("topo", topo_fn, weight, start)]
    if kind == "rtd":
        start = 10 if active_from_epoch is None else active_from_epoch

        def rtd_fn(batch, latent, output):
            value, pairing = rtd_loss(batch, output, hom_dim=rtd_hom_dim)
            return value, None, rtd_loss_grad(batch, output, pairing)

        return [mse_term(), LossTerm("rtd", rtd_fn, weight, start)]
    raise ValueError(f"unknown loss kind {kind!r}")


def dump_selection(selection: EdgeSelection, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(selection.to_obj(), sort_keys=True))


def dump_rtd_pairing(pairing: RtdPairing, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(pairing.to_obj(), sort_keys=True))
