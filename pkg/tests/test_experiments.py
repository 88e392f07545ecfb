"""Study orchestration: audits, traces, run reports, search, presets."""

import json
from pathlib import Path

import numpy as np
import pytest

from torsionscope.experiments import (
    HIGHDIM_HYPERPARAMS,
    LOOP_ARCH,
    PRESETS,
    PROFILES,
    ExperimentReport,
    RunRecord,
    _rtd_config,
    audit_cloud,
    double_band_cloud,
    fragility_study,
    highdim_arch,
    highdim_screen,
    hyperparam_search,
    prime_sensitivity_study,
    reconstruction_experiment,
    run_preset,
    triple_band_cloud,
)
from torsionscope.nn import TrainConfig
from torsionscope.pointcloud import generate_random_cloud

TRIPLE = triple_band_cloud(n_points=360, seed=0)


# --- audits --------------------------------------------------------------


def test_audit_finds_band_torsion():
    audit = audit_cloud(TRIPLE, radius=0.45, sample_cap=400, seed=0)
    assert audit.has_torsion
    assert audit.verdict().startswith("Torsion: (")
    assert audit.n_points_used == 360
    assert audit.shrink_steps == 0


def test_audit_subsample_and_determinism():
    cloud = double_band_cloud(n_points=600, seed=7)
    a = audit_cloud(cloud, radius=0.46, sample_cap=300, seed=0)
    b = audit_cloud(cloud, radius=0.46, sample_cap=300, seed=0)
    assert a.n_points_used == 300
    assert a.to_obj() == b.to_obj()
    assert a.has_torsion  # the sampled double band still carries 2-torsion
    assert 2 in a.report.primes_found()


def test_audit_shrinks_radius_under_cap():
    cloud = generate_random_cloud(40, 3, seed=1)
    audit = audit_cloud(cloud, radius_fraction=0.9, simplex_cap=2_000, seed=0)
    assert audit.shrink_steps > 0
    assert audit.verdict() == "No Torsion"


# --- fragility -----------------------------------------------------------


def test_fragility_rejects_torsion_free_cloud():
    cloud = generate_random_cloud(30, 3, seed=2)
    with pytest.raises(ValueError, match="torsional"):
        fragility_study(cloud, sigma=0.1, max_rounds=3, seed=0, max_radius=0.5)


def test_fragility_round_budget_and_trace_shape():
    trace = fragility_study(TRIPLE, sigma=0.1, max_rounds=2, seed=1000, max_radius=0.45)
    assert 1 <= len(trace.rounds) <= 2
    counts = [r.shifted_total for r in trace.rounds]
    assert counts == sorted(counts)
    for r in trace.rounds:
        assert r.mse > 0 and r.bottleneck_h0 >= 0 and r.wasserstein_h1 >= 0
        assert len(r.simplex_vertices) >= 2
    obj = trace.to_obj()
    json.dumps(obj)  # JSON-serializable
    assert obj["n_points"] == 360
    assert obj["initial_report"]["has_torsion"] is True


def test_fragility_validation():
    with pytest.raises(ValueError):
        fragility_study(TRIPLE, sigma=0.0, max_rounds=3, seed=0, max_radius=0.45)
    with pytest.raises(ValueError):
        fragility_study(TRIPLE, sigma=0.1, max_rounds=0, seed=0, max_radius=0.45)


# --- prime sensitivity ---------------------------------------------------


def test_prime_sensitivity_sigma_zero_keeps_verdict():
    result = prime_sensitivity_study(TRIPLE, sigma=0.0, trials=3, seed=0, max_radius=0.45)
    assert result.changed_trials == ()
    for t in result.trials:
        assert t.primes == result.baseline_primes
        assert t.mse == 0.0


def test_prime_sensitivity_reproducible():
    a = prime_sensitivity_study(TRIPLE, sigma=0.02, trials=2, seed=5, max_radius=0.45)
    b = prime_sensitivity_study(TRIPLE, sigma=0.02, trials=2, seed=5, max_radius=0.45)
    assert a.to_obj() == b.to_obj()
    for t in a.trials:
        assert t.mse > 0


# --- run records and reports ---------------------------------------------


def _dummy_audit():
    return audit_cloud(generate_random_cloud(15, 3, seed=0), radius=0.3, seed=0)


def test_run_record_total_must_recompose():
    audit = _dummy_audit()
    config = {"weight": 0.5, "term_name": "topo"}
    bad = {"epoch": 0.0, "mse": 1.0, "topo": 2.0, "total": 2.5}
    with pytest.raises(ValueError, match="recompose"):
        RunRecord(0, config, (bad,), bad, audit, audit, None)
    good = {"epoch": 0.0, "mse": 1.0, "topo": 2.0, "total": 2.0}
    RunRecord(0, config, (good,), good, audit, audit, None)  # consistent: 1 + 0.5 * 2


def test_experiment_report_leaderboards_are_permutations():
    audit = _dummy_audit()
    entry = {"epoch": 0.0, "mse": 1.0, "total": 1.0}
    run = RunRecord(0, {"weight": 0.0, "term_name": None}, (entry,), entry, audit, audit, None)
    with pytest.raises(ValueError, match="permutation"):
        ExperimentReport(
            runs=(run,),
            leaderboards={"mse": (0, 1)},
            flagged=(),
            latent_flagged=(),
            summary={},
            manifest={},
        )


def test_reconstruction_single_untrained_run(tmp_path):
    cloud = double_band_cloud(n_points=90, seed=7)
    config = TrainConfig(epochs=0, batch_size=32, seed=0)
    kwargs = dict(
        output_audit_kwargs={"radius": 0.46, "max_dim": 2},
        latent_audit_kwargs={"radius_fraction": 0.3, "max_dim": 2},
    )
    a = reconstruction_experiment(cloud, LOOP_ARCH, "mse", 1, config, seed=3, **kwargs)
    b = reconstruction_experiment(cloud, LOOP_ARCH, "mse", 1, config, seed=3, **kwargs)
    assert a.to_obj() == b.to_obj()
    (run,) = a.runs
    assert run.history == ()
    assert run.final["mse"] > 0  # untrained reconstruction error
    assert a.leaderboards["mse"] == (0,)
    assert run.config["arch"] == list(LOOP_ARCH)


def test_reconstruction_leaderboards_match_full_sort(tmp_path):
    cloud = double_band_cloud(n_points=80, seed=7)
    config = TrainConfig(epochs=2, batch_size=40, seed=0)
    report = reconstruction_experiment(
        cloud,
        (3, 8, 2, 8, 3),
        "topo",
        3,
        config,
        weight=0.2,
        seed=0,
        out_dir=tmp_path,
        output_audit_kwargs={"radius": 0.46, "max_dim": 2},
        latent_audit_kwargs={"radius_fraction": 0.3, "max_dim": 2},
    )
    for key, order in report.leaderboards.items():
        vals = {r.run_id: r.final.get(key, float("inf")) for r in report.runs}
        resorted = tuple(sorted(order, key=lambda rid: (vals[rid], rid)))
        assert order == resorted
        assert report.top(key, 2) == order[:2]
    assert set(report.flagged) == {r.run_id for r in report.runs if r.output_audit.has_torsion}
    for r in report.runs:
        assert (tmp_path / r.checkpoint_path).exists()
        assert not Path(r.checkpoint_path).is_absolute()


def test_reconstruction_validation():
    cloud = double_band_cloud(n_points=60, seed=7)
    with pytest.raises(ValueError):
        reconstruction_experiment(cloud, LOOP_ARCH, "mse", 0, TrainConfig(epochs=1))
    with pytest.raises(ValueError):
        reconstruction_experiment(cloud, LOOP_ARCH, "umap", 1, TrainConfig(epochs=1))


# --- high-dimensional screening -----------------------------------------


def test_highdim_screen_structure_and_determinism():
    a = highdim_screen(4, 14, 10, seed=0, max_dim=2)
    b = highdim_screen(4, 14, 10, seed=0, max_dim=2)
    assert a.to_obj() == b.to_obj()
    assert a.n_screened == 4
    assert not a.skipped


def test_highdim_screen_skips_on_cap():
    result = highdim_screen(3, 30, 10, seed=0, max_dim=3, simplex_cap=100)
    assert len(result.skipped) == 3
    for _, msg in result.skipped:
        assert "cap" in msg.lower() or "simplex" in msg.lower()


def test_highdim_hyperparameters_frozen():
    assert highdim_arch(10) == (10, 128, 64, 8, 64, 128, 10)
    assert highdim_arch(13) == (13, 64, 32, 8, 32, 64, 13)
    assert HIGHDIM_HYPERPARAMS[10]["learning_rate"] == 0.001366
    assert HIGHDIM_HYPERPARAMS[10]["weight_decay"] == 2.43e-5
    assert HIGHDIM_HYPERPARAMS[10]["batch_size"] == 32
    assert HIGHDIM_HYPERPARAMS[13]["learning_rate"] == 0.00042818
    assert HIGHDIM_HYPERPARAMS[13]["weight_decay"] == 1.21e-5
    assert HIGHDIM_HYPERPARAMS[13]["batch_size"] == 128
    assert HIGHDIM_HYPERPARAMS[13]["latent"] == 8  # fixed, not searched


# --- hyperparameter search -----------------------------------------------


def test_search_single_point_space():
    result = hyperparam_search(lambda p: p["x"] ** 2, {"x": (2.0, 2.0, "linear")}, 5, seed=0)
    assert result.best_params == {"x": 2.0}
    assert result.best_value == 4.0
    assert len(result.trials) == 5


def test_search_log_uniform_trace():
    calls = []

    def objective(params):
        calls.append(params["eta"])
        return abs(np.log(params["eta"]))

    result = hyperparam_search(objective, {"eta": (0.1, 3.0, "log")}, 20, seed=1)
    assert len(result.trials) == 20
    assert all(0.1 <= t.params["eta"] <= 3.0 for t in result.trials)
    assert all(result.best_value <= t.value for t in result.trials)
    rerun = hyperparam_search(lambda p: abs(np.log(p["eta"])), {"eta": (0.1, 3.0, "log")}, 20, seed=1)
    assert rerun.to_obj() == result.to_obj()


def test_search_failures_logged_and_skipped():
    def flaky(params):
        if params["x"] < 0.5:
            raise RuntimeError("bad region")
        return params["x"]

    result = hyperparam_search(flaky, {"x": (0.0, 1.0, "linear")}, 12, seed=3)
    failed = [t for t in result.trials if t.error is not None]
    assert failed and all("bad region" in t.error for t in failed)
    assert result.best_value >= 0.5
    with pytest.raises(ValueError, match="failed"):
        hyperparam_search(lambda p: 1 / 0, {"x": (0.0, 1.0, "linear")}, 3, seed=0)


def test_search_validation():
    with pytest.raises(ValueError):
        hyperparam_search(lambda p: 0.0, {"x": (0.0, 1.0, "linear")}, 0, seed=0)
    with pytest.raises(ValueError):
        hyperparam_search(lambda p: 0.0, {"x": (0.0, 1.0, "cubic")}, 1, seed=0)
    with pytest.raises(ValueError):
        hyperparam_search(lambda p: 0.0, {"x": (2.0, 1.0, "linear")}, 1, seed=0)
    with pytest.raises(ValueError):
        hyperparam_search(lambda p: 0.0, {"x": (0.0, 1.0, "log")}, 1, seed=0)


# --- schedules and presets -----------------------------------------------


def test_rtd_schedule_three_phases():
    config = _rtd_config(100, 32, seed=0)
    assert config.lr_at(5) == 1e-4
    assert config.lr_at(10) == 1e-2
    assert config.lr_at(29) == 1e-2
    assert config.lr_at(30) == 1e-3
    assert config.lr_at(49) == 1e-3
    assert config.lr_at(50) == 1e-4
    short = _rtd_config(20, 32, seed=0)
    assert short.lr_at(9) == 1e-4 and short.lr_at(15) == 1e-2
    assert _rtd_config(8, 32, seed=0).lr_schedule is None


def test_preset_and_profile_validation(tmp_path):
    with pytest.raises(ValueError, match="preset"):
        run_preset("nonsense", "ci", tmp_path)
    with pytest.raises(ValueError, match="profile"):
        run_preset("fragility", "nightly", tmp_path)
    assert len(PRESETS) == 7 and PROFILES == ("ci", "full")


def test_fragility_preset_outputs_and_byte_determinism(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    obj1 = run_preset("fragility", "ci", d1, seed=0)
    obj2 = run_preset("fragility", "ci", d2, seed=0)
    assert obj1 == obj2
    for name in ("manifest.json", "report.json", "leaderboard.csv"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    assert sorted(p.name for p in (d1 / "plots").iterdir()) == ["fragility_trace.csv"]
    rounds = sorted(p.name for p in (d1 / "runs").iterdir())
    assert rounds and all(n.startswith("round_") for n in rounds)
    report = json.loads((d1 / "report.json").read_text())
    assert report["fragility"]["terminated"] is True
    assert report["fragility"]["shifted_fraction"] <= 0.05
    trace_csv = (d1 / "plots" / "fragility_trace.csv").read_text().splitlines()
    assert trace_csv[0] == "round,shifted_total,mse,bottleneck_h0,bottleneck_h1,wasserstein_h1"
    assert len(trace_csv) == len(rounds) + 1
