"""Study orchestration: fragility traces, prime-sensitivity sweeps,
multi-run reconstruction with torsion audits, high-dimensional screening,
and deterministic random hyperparameter search.

Every study derives its randomness from explicit seeds (per-run seed =
manifest seed + run id) and reports are serialized with sorted keys and
no timestamps, so a rerun with the same manifest reproduces identical
bytes.  Paths stored inside reports are relative to the output
directory for the same reason.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .diagmetrics import bottleneck, wasserstein1
from .nn import (
    TrainConfig,
    build_autoencoder,
    forward,
    mse_term,
    save_model,
    train,
)
from .phfield import Coefficients, reduce
from .pointcloud import ALL, PointCloud, generate_loop_band, generate_random_cloud, perturb_gaussian
from .rips import SimplexCapExceeded, build_rips
from .topoloss import combined_loss
from .torsion import TorsionReport, torsion_check

__all__ = [
    "TorsionAudit",
    "FragilityRound",
    "FragilityTrace",
    "PrimeTrial",
    "PrimeSensitivityResult",
    "RunRecord",
    "ExperimentReport",
    "ScreenResult",
    "SearchResult",
    "audit_cloud",
    "fragility_study",
    "prime_sensitivity_study",
    "reconstruction_experiment",
    "highdim_screen",
    "hyperparam_search",
    "run_preset",
    "triple_band_cloud",
    "double_band_cloud",
    "PRESETS",
    "PROFILES",
    "HIGHDIM_HYPERPARAMS",
]

AUDIT_PRIMES = (2, 3, 5)

# Band fixtures at major radius 1: strand separation is
# 2 * (2 * band_width) * sin(pi / windings), so the double band merges
# near 0.4 and the triple near 0.35; the radii below sit just above.
TRIPLE_BAND_RADIUS = 0.45
DOUBLE_BAND_RADIUS = 0.46


def triple_band_cloud(n_points: int = 360, seed: int = 0) -> PointCloud:
    """Band winding three times around the axis; torsional at the merge scale."""
    return PointCloud(
        generate_loop_band(
            windings=3,
            n_points=n_points,
            major_radius=1.0,
            band_width=0.1,
            twist=0,
            seed=seed,
        ).points
    )


def double_band_cloud(n_points: int = 600, seed: int = 7) -> PointCloud:
    """Band winding twice around the axis; 2-torsional at the merge scale."""
    return PointCloud(
        generate_loop_band(
            windings=2,
            n_points=n_points,
            major_radius=1.0,
            band_width=0.1,
            twist=0,
            seed=seed,
        ).points
    )


# --- torsion audit -------------------------------------------------------


@dataclass(frozen=True)
class TorsionAudit:
    """Result of running the torsion detector on a (possibly sampled) cloud."""

    report: TorsionReport
    n_points_used: int
    radius: float
    max_dim: int
    shrink_steps: int

    @property
    def has_torsion(self) -> bool:
        return self.report.has_torsion

    def verdict(self) -> str:
        f = self.report.first_finding()
        if f is None:
            return "No Torsion"
        return f"Torsion: ({f.prime}, {f.first_index})"

    def to_obj(self) -> dict:
        return {
            "report": self.report.to_obj(),
            "n_points_used": self.n_points_used,
            "radius": self.radius,
            "max_dim": self.max_dim,
            "shrink_steps": self.shrink_steps,
            "verdict": self.verdict(),
        }


def audit_cloud(
    cloud: PointCloud,
    primes: Sequence[int] = AUDIT_PRIMES,
    max_dim: int = 2,
    radius: Optional[float] = None,
    radius_fraction: float = 0.3,
    sample_cap: int = 300,
    simplex_cap: int = 600_000,
    seed: int = 0,
) -> TorsionAudit:
    """Torsion-check a cloud at a bounded scale.

    Clouds larger than sample_cap are deterministically subsampled.  The
    scan radius defaults to radius_fraction of the enclosing radius (an
    absolute radius can be given when the data's scale is known).  If
    the complex would exceed simplex_cap, the radius is shrunk by 1.5x
    until it fits; the number of shrink steps is recorded.
    """
    pts = cloud.points
    if cloud.n > sample_cap:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(cloud.n, size=sample_cap, replace=False))
        pts = pts[idx]
    sampled = PointCloud(pts)
    r = float(radius) if radius is not None else radius_fraction * sampled.enclosing_radius()
    shrink = 0
    while True:
        try:
            filt = build_rips(sampled, max_dim=max_dim, max_radius=r, simplex_cap=simplex_cap)
            break
        except SimplexCapExceeded:
            r /= 1.5
            shrink += 1
            if shrink > 30:  # radius is effectively zero by now
                raise
    report = torsion_check(filt, primes=tuple(primes))
    return TorsionAudit(report, sampled.n, r, max_dim, shrink)


# --- fragility -----------------------------------------------------------


@dataclass(frozen=True)
class FragilityRound:
    round_index: int
    prime: int
    simplex_index: int
    simplex_vertices: Tuple[int, ...]
    shifted_total: int
    mse: float
    bottleneck_h0: float
    bottleneck_h1: float
    wasserstein_h1: float

    def to_obj(self) -> dict:
        return {
            "round": self.round_index,
            "prime": self.prime,
            "simplex_index": self.simplex_index,
            "simplex_vertices": list(self.simplex_vertices),
            "shifted_total": self.shifted_total,
            "mse": self.mse,
            "bottleneck_h0": self.bottleneck_h0,
            "bottleneck_h1": self.bottleneck_h1,
            "wasserstein_h1": self.wasserstein_h1,
        }


@dataclass(frozen=True)
class FragilityTrace:
    initial_report: TorsionReport
    rounds: Tuple[FragilityRound, ...]
    terminated: bool
    shifted_indices: Tuple[int, ...]
    n_points: int
    sigma: float
    max_radius: float

    def __post_init__(self) -> None:
        counts = [r.shifted_total for r in self.rounds]
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise ValueError("shifted count must be nondecreasing")

    @property
    def shifted_fraction(self) -> float:
        return len(self.shifted_indices) / self.n_points

    def to_obj(self) -> dict:
        return {
            "initial_report": self.initial_report.to_obj(),
            "rounds": [r.to_obj() for r in self.rounds],
            "terminated": self.terminated,
            "shifted_indices": list(self.shifted_indices),
            "shifted_fraction": self.shifted_fraction,
            "n_points": self.n_points,
            "sigma": self.sigma,
            "max_radius": self.max_radius,
        }


def fragility_study(
    cloud: PointCloud,
    sigma: float,
    max_rounds: int,
    seed: int,
    max_radius: float,
    max_dim: int = 2,
    primes: Sequence[int] = AUDIT_PRIMES,
) -> FragilityTrace:
    """Shift the first torsion-causing simplex until torsion disappears.

    Each round locates the earliest pairing discrepancy, Gaussian-shifts
    the vertices of the simplex at that filtration index, and records
    MSE plus diagram distances against the original cloud.  Raises on a
    cloud that is torsion-free to begin with.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    primes = tuple(primes)
    base_filt = build_rips(cloud, max_dim=max_dim, max_radius=max_radius)
    initial = torsion_check(base_filt, primes=primes)
    if not initial.has_torsion:
        raise ValueError("fragility study requires a torsional input cloud")
    base_dgm = reduce(base_filt, Coefficients.prime(2), max_hom_dim=1)

    current = cloud
    report = initial
    shifted: set = set()
    rounds: List[FragilityRound] = []
    terminated = False
    for rnd in range(max_rounds):
        finding = report.first_finding()
        filt = base_filt if rnd == 0 else build_rips(current, max_dim=max_dim, max_radius=max_radius)
        verts = filt.simplices[finding.first_index].vertices
        shifted.update(verts)
        current, _ = perturb_gaussian(current, sorted(verts), sigma, seed + rnd)
        mse = float(np.mean(np.sum((current.points - cloud.points) ** 2, axis=1)))
        new_filt = build_rips(current, max_dim=max_dim, max_radius=max_radius)
        dgm = reduce(new_filt, Coefficients.prime(2), max_hom_dim=1)
        rounds.append(
            FragilityRound(
                round_index=rnd,
                prime=finding.prime,
                simplex_index=finding.first_index,
                simplex_vertices=verts,
                shifted_total=len(shifted),
                mse=mse,
                bottleneck_h0=bottleneck(base_dgm, dgm, 0, infinite_cap=max_radius),
                bottleneck_h1=bottleneck(base_dgm, dgm, 1, infinite_cap=max_radius),
                wasserstein_h1=wasserstein1(base_dgm, dgm, 1, infinite_cap=max_radius),
            )
        )
        report = torsion_check(new_filt, primes=primes)
        if not report.has_torsion:
            terminated = True
            break
    return FragilityTrace(
        initial_report=initial,
        rounds=tuple(rounds),
        terminated=terminated,
        shifted_indices=tuple(sorted(shifted)),
        n_points=cloud.n,
        sigma=sigma,
        max_radius=max_radius,
    )


# --- prime sensitivity ---------------------------------------------------


@dataclass(frozen=True)
class PrimeTrial:
    trial: int
    mse: float
    primes: Tuple[int, ...]
    first: Optional[Tuple[int, int]]  # (prime, simplex index)

    def to_obj(self) -> dict:
        return {
            "trial": self.trial,
            "mse": self.mse,
            "primes": list(self.primes),
            "first": list(self.first) if self.first else None,
        }


@dataclass(frozen=True)
class PrimeSensitivityResult:
    baseline_primes: Tuple[int, ...]
    trials: Tuple[PrimeTrial, ...]
    changed_trials: Tuple[int, ...]
    sigma: float
    max_radius: float

    def to_obj(self) -> dict:
        return {
            "baseline_primes": list(self.baseline_primes),
            "trials": [t.to_obj() for t in self.trials],
            "changed_trials": list(self.changed_trials),
            "none_changed": not self.changed_trials,
            "sigma": self.sigma,
            "max_radius": self.max_radius,
        }


def prime_sensitivity_study(
    cloud: PointCloud,
    sigma: float,
    trials: int,
    seed: int,
    max_radius: float,
    max_dim: int = 2,
    primes: Sequence[int] = AUDIT_PRIMES,
) -> PrimeSensitivityResult:
    """Perturb every point and watch the torsion verdict.

    Each trial perturbs the original cloud independently; the result
    records trials whose prime set differs from the unperturbed verdict
    (tiny MSE flipping the prime is the phenomenon of interest).
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    primes = tuple(primes)
    base_filt = build_rips(cloud, max_dim=max_dim, max_radius=max_radius)
    baseline = torsion_check(base_filt, primes=primes)
    out: List[PrimeTrial] = []
    for t in range(trials):
        moved, record = perturb_gaussian(cloud, ALL, sigma, seed + t)
        if sigma == 0:
            report = baseline
        else:
            filt = build_rips(moved, max_dim=max_dim, max_radius=max_radius)
            report = torsion_check(filt, primes=primes)
        f = report.first_finding()
        out.append(
            PrimeTrial(
                trial=t,
                mse=record.mse,
                primes=report.primes_found(),
                first=(f.prime, f.first_index) if f else None,
            )
        )
    changed = tuple(t.trial for t in out if t.primes != baseline.primes_found())
    return PrimeSensitivityResult(
        baseline_primes=baseline.primes_found(),
        trials=tuple(out),
        changed_trials=changed,
        sigma=sigma,
        max_radius=max_radius,
    )


# --- reconstruction runs -------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    config: dict
    history: Tuple[dict, ...]
    final: dict
    output_audit: TorsionAudit
    latent_audit: TorsionAudit
    checkpoint_path: Optional[str]

    def __post_init__(self) -> None:
        # logged totals must recompose from components at every epoch
        weight = float(self.config.get("weight", 0.0))
        term = self.config.get("term_name")
        for entry in self.history:
            expected = entry["mse"]
            if term is not None and term in entry:
                expected = expected + weight * entry[term]
            if not math.isclose(entry["total"], expected, rel_tol=1e-9, abs_tol=1e-9):
                raise ValueError(
                    f"run {self.run_id}: total loss at epoch {entry['epoch']} "
                    "does not recompose from its components"
                )

    def to_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "history": list(self.history),
            "final": self.final,
            "output_audit": self.output_audit.to_obj(),
            "latent_audit": self.latent_audit.to_obj(),
            "checkpoint_path": self.checkpoint_path,
        }


@dataclass(frozen=True)
class ExperimentReport:
    runs: Tuple[RunRecord, ...]
    leaderboards: Dict[str, Tuple[int, ...]]
    flagged: Tuple[int, ...]
    latent_flagged: Tuple[int, ...]
    summary: dict
    manifest: dict

    def __post_init__(self) -> None:
        ids = sorted(r.run_id for r in self.runs)
        for name, order in self.leaderboards.items():
            if sorted(order) != ids:
                raise ValueError(f"leaderboard {name!r} is not a permutation of the runs")

    def top(self, loss: str, k: int = 3) -> Tuple[int, ...]:
        return self.leaderboards[loss][:k]

    def to_obj(self) -> dict:
        return {
            "runs": [r.to_obj() for r in self.runs],
            "leaderboards": {k: list(v) for k, v in self.leaderboards.items()},
            "flagged": list(self.flagged),
            "latent_flagged": list(self.latent_flagged),
            "summary": self.summary,
            "manifest": self.manifest,
        }


def _terms_for(loss_kind: str, weight: float):
    if loss_kind == "mse":
        return [mse_term()], None
    if loss_kind == "topo":
        return combined_loss("topoae", weight), "topo"
    if loss_kind == "rtd":
        return combined_loss("rtd", weight), "rtd"
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def reconstruction_experiment(
    cloud: PointCloud,
    arch: Sequence[int],
    loss_kind: str,
    n_runs: int,
    config: TrainConfig,
    weight: float = 1.0,
    activation: str = "relu",
    batch_norm: bool = True,
    seed: int = 0,
    out_dir: Optional[Union[str, Path]] = None,
    output_audit_kwargs: Optional[dict] = None,
    latent_audit_kwargs: Optional[dict] = None,
    manifest_extra: Optional[dict] = None,
) -> ExperimentReport:
    """Train n_runs independently seeded models and audit each for torsion.

    Per run the model and batch order use seed + run_id.  The output and
    latent clouds of every trained model are torsion-checked; flagged
    runs get a confirming second detector pass with the prime order
    reversed.  Leaderboards fully order the runs per loss (ties by run
    id); the torsion flags are computed independently of them.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    arch = tuple(int(a) for a in arch)
    terms, term_name = _terms_for(loss_kind, weight)
    out_kwargs = dict(output_audit_kwargs or {})
    lat_kwargs = dict(latent_audit_kwargs or {})
    out_primes = tuple(out_kwargs.pop("primes", AUDIT_PRIMES))
    lat_primes = tuple(lat_kwargs.pop("primes", AUDIT_PRIMES))
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        (out_path / "runs").mkdir(parents=True, exist_ok=True)

    runs: List[RunRecord] = []
    confirmations: Dict[str, bool] = {}
    for rid in range(n_runs):
        run_seed = seed + rid
        run_config = replace(config, seed=run_seed)
        model = build_autoencoder(arch, activation_name=activation, batch_norm=batch_norm, seed=run_seed)
        try:
            model, history = train(model, cloud, run_config, terms=terms)
        except Exception as exc:
            raise RuntimeError(f"run {rid} failed during training") from exc
        latent, output = forward(model, cloud.points, training=False)
        output_audit = audit_cloud(PointCloud(output), primes=out_primes, seed=run_seed, **out_kwargs)
        latent_audit = audit_cloud(PointCloud(latent), primes=lat_primes, seed=run_seed, **lat_kwargs)
        if output_audit.has_torsion:
            # flagged verdicts must survive a pass with the primes reversed
            second = audit_cloud(
                PointCloud(output),
                primes=tuple(reversed(out_primes)),
                seed=run_seed,
                **out_kwargs,
            )
            same = set(second.report.primes_found()) == set(output_audit.report.primes_found())
            confirmations[str(rid)] = same
            if not same:
                raise RuntimeError(
                    f"run {rid}: torsion flag did not survive a reversed-prime recheck"
                )
        checkpoint = None
        if out_path is not None:
            checkpoint = f"runs/run_{rid:03d}_model.json"
            save_model(model, out_path / checkpoint)
        final = dict(history[-1]) if history else {"epoch": -1.0, "mse": float("nan"), "total": float("nan")}
        if not history:  # epochs=0: log the untrained model's losses
            _, eval_out = forward(model, cloud.points, training=False)
            untrained = float(np.mean((eval_out - cloud.points) ** 2))
            final = {"epoch": -1.0, "mse": untrained, "total": untrained}
        runs.append(
            RunRecord(
                run_id=rid,
                config={
                    "arch": list(arch),
                    "loss_kind": loss_kind,
                    "weight": weight,
                    "term_name": term_name,
                    "activation": activation,
                    "batch_norm": batch_norm,
                    "epochs": run_config.epochs,
                    "batch_size": run_config.batch_size,
                    "learning_rate": run_config.learning_rate,
                    "weight_decay": run_config.weight_decay,
                    "seed": run_seed,
                },
                history=tuple(history),
                final=final,
                output_audit=output_audit,
                latent_audit=latent_audit,
                checkpoint_path=checkpoint,
            )
        )

    loss_keys = ["mse", "total"] if term_name is None else ["mse", term_name, "total"]
    leaderboards = {}
    for key in loss_keys:
        order = sorted(runs, key=lambda r: (r.final.get(key, float("inf")), r.run_id))
        leaderboards[key] = tuple(r.run_id for r in order)
    flagged = tuple(r.run_id for r in runs if r.output_audit.has_torsion)
    latent_flagged = tuple(r.run_id for r in runs if r.latent_audit.has_torsion)

    summary = {
        "n_runs": n_runs,
        "loss_kind": loss_kind,
        "torsion_flag_confirmations": confirmations,
        "note": "torsion flags are computed independently of the loss leaderboards",
    }
    manifest = {
        "seed": seed,
        "arch": list(arch),
        "loss_kind": loss_kind,
        "weight": weight,
        "n_runs": n_runs,
        "epochs": config.epochs,
        "versions": _versions(),
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    return ExperimentReport(
        runs=tuple(runs),
        leaderboards=leaderboards,
        flagged=flagged,
        latent_flagged=latent_flagged,
        summary=summary,
        manifest=manifest,
    )


def _versions() -> dict:
    from . import __version__
    from ._kernels import BACKEND

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "reduction_backend": BACKEND,
    }


# --- high-dimensional screening ------------------------------------------


HIGHDIM_HYPERPARAMS = {
    10: {
        "hidden": (128, 64),
        "latent": 8,
        "learning_rate": 0.001366,
        "weight_decay": 2.43e-5,
        "batch_size": 32,
    },
    13: {
        "hidden": (64, 32),
        "latent": 8,
        "learning_rate": 0.00042818,
        "weight_decay": 1.21e-5,
        "batch_size": 128,
    },
}


@dataclass(frozen=True)
class ScreenResult:
    dim: int
    n_points: int
    n_screened: int
    torsional: Tuple[Tuple[int, TorsionReport], ...]
    skipped: Tuple[Tuple[int, str], ...]

    def to_obj(self) -> dict:
        return {
            "dim": self.dim,
            "n_points": self.n_points,
            "n_screened": self.n_screened,
            "torsional": [[i, rep.to_obj()] for i, rep in self.torsional],
            "skipped": [[i, msg] for i, msg in self.skipped],
        }


def highdim_screen(
    n_clouds: int,
    n_points: int,
    dim: int,
    seed: int,
    max_dim: int = 3,
    simplex_cap: int = 2_000_000,
    primes: Sequence[int] = AUDIT_PRIMES,
) -> ScreenResult:
    """Torsion-screen random uniform clouds; cap overruns skip the cloud."""
    if n_clouds < 1:
        raise ValueError("n_clouds must be >= 1")
    torsional: List[Tuple[int, TorsionReport]] = []
    skipped: List[Tuple[int, str]] = []
    for i in range(n_clouds):
        cloud = generate_random_cloud(n_points, dim, seed + i)
        try:
            filt = build_rips(cloud, max_dim=max_dim, simplex_cap=simplex_cap)
        except SimplexCapExceeded as exc:
            skipped.append((i, str(exc)))
            continue
        report = torsion_check(filt, primes=tuple(primes))
        if report.has_torsion:
            torsional.append((i, report))
    return ScreenResult(
        dim=dim,
        n_points=n_points,
        n_screened=n_clouds,
        torsional=tuple(torsional),
        skipped=tuple(skipped),
    )


def highdim_arch(dim: int) -> Tuple[int, ...]:
    hp = HIGHDIM_HYPERPARAMS[dim]
    h1, h2 = hp["hidden"]
    return (dim, h1, h2, hp["latent"], h2, h1, dim)


# --- hyperparameter search -----------------------------------------------


@dataclass(frozen=True)
class SearchTrial:
    params: dict
    value: Optional[float]
    error: Optional[str]

    def to_obj(self) -> dict:
        return {"params": self.params, "value": self.value, "error": self.error}


@dataclass(frozen=True)
class SearchResult:
    best_params: dict
    best_value: float
    trials: Tuple[SearchTrial, ...]

    def to_obj(self) -> dict:
        return {
            "best_params": self.best_params,
            "best_value": self.best_value,
            "trials": [t.to_obj() for t in self.trials],
        }


def hyperparam_search(
    objective: Callable[[dict], float],
    space: Dict[str, Tuple[float, float, str]],
    n_calls: int,
    seed: int,
) -> SearchResult:
    """Seeded random search over per-parameter ranges.

    Each space entry is (low, high, scale) with scale "linear" or "log";
    a degenerate range (low == high) always yields that point.  Failing
    objective calls are logged and skipped.  Replaces GP-based
    optimization at the same call budget; the substitution is noted in
    preset manifests.
    """
    if n_calls < 1:
        raise ValueError("n_calls must be >= 1")
    for name, (lo, hi, scale) in space.items():
        if scale not in ("linear", "log"):
            raise ValueError(f"unknown scale {scale!r} for {name!r}")
        if lo > hi:
            raise ValueError(f"empty range for {name!r}")
        if scale == "log" and lo <= 0:
            raise ValueError(f"log scale needs positive bounds for {name!r}")
    rng = np.random.default_rng(seed)
    trials: List[SearchTrial] = []
    best: Optional[SearchTrial] = None
    for _ in range(n_calls):
        params = {}
        for name in sorted(space):
            lo, hi, scale = space[name]
            if lo == hi:
                params[name] = float(lo)
            elif scale == "log":
                params[name] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            else:
                params[name] = float(rng.uniform(lo, hi))
        try:
            value = float(objective(params))
        except Exception as exc:
            trials.append(SearchTrial(params, None, f"{type(exc).__name__}: {exc}"))
            continue
        trial = SearchTrial(params, value, None)
        trials.append(trial)
        if best is None or value < best.value:
            best = trial
    if best is None:
        raise ValueError("every objective call failed")
    return SearchResult(best.params, best.value, tuple(trials))


# --- presets -------------------------------------------------------------


PRESETS = (
    "fragility",
    "prime-sensitivity",
    "loops-vanilla",
    "loops-topo",
    "loops-rtd",
    "highdim-10",
    "highdim-13",
)
PROFILES = ("ci", "full")

LOOP_ARCH = (3, 32, 32, 2, 32, 32, 3)


def _loops_band(profile: str) -> PointCloud:
    return double_band_cloud(n_points=600, seed=7)


def _audit_kwargs_for_band() -> Tuple[dict, dict]:
    # output lives at the input's scale, the latent scale is unknown
    out_kwargs = {"radius": DOUBLE_BAND_RADIUS, "max_dim": 2, "sample_cap": 300}
    lat_kwargs = {"radius_fraction": 0.3, "max_dim": 2, "sample_cap": 300}
    return out_kwargs, lat_kwargs


def _rtd_config(epochs: int, batch_size: int, seed: int) -> TrainConfig:
    # three-phase schedule: reconstruction-only warmup at 1e-4, then
    # 1e-2 and 1e-3 windows, then back to the base rate
    schedule = []
    if epochs > 10:
        schedule.append(((10, min(29, epochs - 1)), 1e-2))
    if epochs > 30:
        schedule.append(((30, min(49, epochs - 1)), 1e-3))
    return TrainConfig(
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=1e-4,
        seed=seed,
        lr_schedule=tuple(schedule) or None,
    )


def _single_batch_objective(
    cloud: PointCloud,
    kind: str,
    search_epochs: int,
    batch_size: int,
    seed: int,
) -> Callable[[dict], float]:
    """Short training then total loss on the first batch (loop studies)."""

    def objective(params: dict) -> float:
        w = params["weight"]
        if kind == "rtd":
            config = _rtd_config(search_epochs, batch_size, seed)
            terms = combined_loss("rtd", w, active_from_epoch=min(10, max(search_epochs - 1, 0)))
        else:
            config = TrainConfig(epochs=search_epochs, batch_size=batch_size, learning_rate=1e-3, seed=seed)
            terms = combined_loss("topoae", w)
        model = build_autoencoder(LOOP_ARCH, activation_name="relu", batch_norm=True, seed=seed)
        model, _ = train(model, cloud, config, terms=terms)
        batch = cloud.points[:batch_size]
        latent, output = forward(model, batch, training=False)
        mse = float(np.mean((output - batch) ** 2))
        if kind == "rtd":
            from .topoloss import rtd_loss

            tval, _ = rtd_loss(batch, output)
        else:
            from .topoloss import topo_loss

            tval, _ = topo_loss(batch, latent)
        return mse + w * tval

    return objective


def run_preset(
    preset: str,
    profile: str,
    out_dir: Union[str, Path],
    seed: int = 0,
) -> dict:
    """Execute a named study and write its report files.

    Returns the report object that was written to report.json.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    ci = profile == "ci"

    manifest = {
        "preset": preset,
        "profile": profile,
        "seed": seed,
        "versions": _versions(),
        "substitutions": {
            "hyperparameter_optimization": "seeded random search (replaces GP-based optimization at the same call budget)"
        },
    }

    if preset == "fragility":
        n = 360 if ci else 600
        cloud = triple_band_cloud(n_points=n, seed=0)
        trace = fragility_study(
            cloud,
            sigma=0.1,
            max_rounds=30 if ci else 40,
            seed=seed + 1000,
            max_radius=TRIPLE_BAND_RADIUS,
        )
        manifest["parameters"] = {
            "n_points": n,
            "sigma": 0.1,
            "max_radius": TRIPLE_BAND_RADIUS,
            "cloud_seed": 0,
        }
        report_obj = {"fragility": trace.to_obj(), "manifest": manifest}
        rows = [
            ["mse", i + 1, r.round_index, r.mse, f"prime {r.prime}"]
            for i, r in enumerate(sorted(trace.rounds, key=lambda r: (r.mse, r.round_index)))
        ]
        run_objs = {f"round_{r.round_index:03d}": r.to_obj() for r in trace.rounds}
        plots = {
            "fragility_trace": (
                ["round", "shifted_total", "mse", "bottleneck_h0", "bottleneck_h1", "wasserstein_h1"],
                [
                    [r.round_index, r.shifted_total, r.mse, r.bottleneck_h0, r.bottleneck_h1, r.wasserstein_h1]
                    for r in trace.rounds
                ],
            )
        }
        _write_outputs(out_path, manifest, report_obj, rows, run_objs, plots)
        return report_obj

    if preset == "prime-sensitivity":
        n = 360 if ci else 600
        cloud = triple_band_cloud(n_points=n, seed=0)
        trials = 10 if ci else 40
        result = prime_sensitivity_study(
            cloud,
            sigma=0.02,
            trials=trials,
            seed=seed + 42,
            max_radius=TRIPLE_BAND_RADIUS,
        )
        manifest["parameters"] = {
            "n_points": n,
            "sigma": 0.02,
            "trials": trials,
            "max_radius": TRIPLE_BAND_RADIUS,
            "cloud_seed": 0,
        }
        report_obj = {"prime_sensitivity": result.to_obj(), "manifest": manifest}
        rows = [
            ["mse", i + 1, t.trial, t.mse, "primes " + ",".join(map(str, t.primes))]
            for i, t in enumerate(sorted(result.trials, key=lambda t: (t.mse, t.trial)))
        ]
        run_objs = {f"trial_{t.trial:03d}": t.to_obj() for t in result.trials}
        plots = {
            "prime_trials": (
                ["trial", "mse", "primes", "changed"],
                [
                    [t.trial, t.mse, ";".join(map(str, t.primes)), int(t.trial in result.changed_trials)]
                    for t in result.trials
                ],
            )
        }
        _write_outputs(out_path, manifest, report_obj, rows, run_objs, plots)
        return report_obj

    if preset.startswith("loops-"):
        kind = {"loops-vanilla": "mse", "loops-topo": "topo", "loops-rtd": "rtd"}[preset]
        cloud = _loops_band(profile)
        n_runs = 5 if ci else 40
        epochs = 20 if ci else 100
        batch_size = 32
        out_kwargs, lat_kwargs = _audit_kwargs_for_band()
        weight = 0.0
        search_obj = None
        if kind != "mse":
            span = (0.1, 3.0) if kind == "topo" else (1e-6, 1e3)
            search = hyperparam_search(
                _single_batch_objective(cloud, kind, 2 if ci else 5, batch_size, seed),
                {"weight": (span[0], span[1], "log")},
                n_calls=3 if ci else 20,
                seed=seed + 7,
            )
            weight = search.best_params["weight"]
            search_obj = search.to_obj()
        if kind == "rtd":
            config = _rtd_config(epochs, batch_size, seed)
        else:
            config = TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=1e-3, seed=seed)
        report = reconstruction_experiment(
            cloud,
            LOOP_ARCH,
            kind,
            n_runs,
            config,
            weight=weight,
            seed=seed,
            out_dir=out_path,
            output_audit_kwargs=out_kwargs,
            latent_audit_kwargs=lat_kwargs,
            manifest_extra=manifest,
        )
        return _write_training_outputs(out_path, report, search_obj)

    # highdim presets
    dim = 10 if preset == "highdim-10" else 13
    n_clouds = 20 if ci else 200
    n_points = 36 if ci else 64
    screen = highdim_screen(n_clouds, n_points, dim, seed)
    hp = HIGHDIM_HYPERPARAMS[dim]
    manifest["parameters"] = {
        "dim": dim,
        "n_clouds": n_clouds,
        "n_points": n_points,
        "hyperparameters": {k: list(v) if isinstance(v, tuple) else v for k, v in hp.items()},
    }
    train_reports = []
    for cloud_index, _ in screen.torsional[: (1 if ci else 3)]:
        cloud = generate_random_cloud(n_points, dim, seed + cloud_index)
        config = TrainConfig(
            epochs=5 if ci else 50,
            batch_size=min(hp["batch_size"], n_points),
            learning_rate=hp["learning_rate"],
            weight_decay=hp["weight_decay"],
            seed=seed,
        )
        sub = reconstruction_experiment(
            cloud,
            highdim_arch(dim),
            "mse",
            2 if ci else 5,
            config,
            seed=seed,
            out_dir=out_path / f"cloud_{cloud_index:04d}",
            output_audit_kwargs={"max_dim": 3, "radius_fraction": 0.6},
            latent_audit_kwargs={"max_dim": 3, "radius_fraction": 0.6},
            manifest_extra={"screened_cloud": cloud_index},
        )
        train_reports.append((cloud_index, sub))
        _write_training_outputs(out_path / f"cloud_{cloud_index:04d}", sub, None)
    report_obj = {
        "screen": screen.to_obj(),
        "trained_clouds": [i for i, _ in train_reports],
        "manifest": manifest,
    }
    rows = [
        ["torsional", i + 1, idx, float(len(rep.findings)), rep.findings[0].prime if rep.findings else ""]
        for i, (idx, rep) in enumerate(screen.torsional)
    ]
    run_objs = {f"screen_{idx:04d}": rep.to_obj() for idx, rep in screen.torsional}
    plots = {
        "screen": (
            ["cloud", "torsional", "primes"],
            [
                [i, int(any(idx == i for idx, _ in screen.torsional)),
                 ";".join(str(p) for idx, rep in screen.torsional if idx == i for p in rep.primes_found())]
                for i in range(n_clouds)
            ],
        )
    }
    _write_outputs(out_path, manifest, report_obj, rows, run_objs, plots)
    return report_obj


# --- report writers ------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header: Sequence, rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_outputs(
    out_path: Path,
    manifest: dict,
    report_obj: dict,
    leaderboard_rows: Sequence[Sequence],
    run_objs: Dict[str, dict],
    plots: Dict[str, Tuple[Sequence, Sequence[Sequence]]],
) -> None:
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "runs").mkdir(exist_ok=True)
    (out_path / "plots").mkdir(exist_ok=True)
    _write_json(out_path / "manifest.json", manifest)
    _write_json(out_path / "report.json", report_obj)
    _write_csv(out_path / "leaderboard.csv", ["loss", "rank", "id", "value", "verdict"], leaderboard_rows)
    for name, obj in run_objs.items():
        _write_json(out_path / "runs" / f"{name}.json", obj)
    for name, (header, rows) in plots.items():
        _write_csv(out_path / "plots" / f"{name}.csv", header, rows)


def _write_training_outputs(
    out_path: Path, report: ExperimentReport, search_obj: Optional[dict]
) -> dict:
    report_obj = report.to_obj()
    if search_obj is not None:
        report_obj["hyperparameter_search"] = search_obj
    rows = []
    for loss, order in sorted(report.leaderboards.items()):
        by_id = {r.run_id: r for r in report.runs}
        for rank, rid in enumerate(order, start=1):
            r = by_id[rid]
            rows.append([loss, rank, rid, r.final.get(loss, ""), r.output_audit.verdict()])
    run_objs = {f"run_{r.run_id:03d}": r.to_obj() for r in report.runs}
    best = report.leaderboards["mse"][0]
    plots = {
        "loss_vs_run": (
            ["run", "mse", "total", "output_torsion", "latent_torsion"],
            [
                [r.run_id, r.final["mse"], r.final["total"],
                 int(r.run_id in report.flagged), int(r.run_id in report.latent_flagged)]
                for r in report.runs
            ],
        )
    }
    _write_outputs(out_path, report.manifest, report_obj, rows, run_objs, plots)
    return report_obj
