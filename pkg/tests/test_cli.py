"""End-to-end tests for the command-line interface.

Each subcommand is driven through main(argv) in-process; one test goes
through the installed console script to cover the entry point.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from torsionscope.cli import main
from torsionscope.diagmetrics import bottleneck, persistence_entropy, BarLengthSet
from torsionscope.phfield import load_diagram
from torsionscope.pointcloud import generate_loop_band, load_cloud


def run_cli(*argv):
    return main([str(a) for a in argv])


# ---------------------------------------------------------------------------
# generate / perturb


def test_generate_band_roundtrip(tmp_path, capsys):
    out = tmp_path / "band.csv"
    assert run_cli("generate", "--shape", "band", "--n", 60, "--seed", 7, "--out", out) == 0
    assert "wrote 60 points of dimension 3" in capsys.readouterr().out
    cloud = load_cloud(out)
    direct = generate_loop_band(windings=2, n_points=60, major_radius=1.0, band_width=0.1, twist=0, seed=7)
    assert np.array_equal(cloud.points, direct.points)


def test_generate_rp2_and_random_dims(tmp_path):
    rp2 = tmp_path / "rp2.json"
    rnd = tmp_path / "rand.csv"
    run_cli("generate", "--shape", "rp2", "--n", 25, "--seed", 3, "--out", rp2)
    run_cli("generate", "--shape", "random", "--n", 10, "--dim", 5, "--seed", 1, "--out", rnd)
    assert load_cloud(rp2).dim == 4
    assert load_cloud(rnd).dim == 5


def test_perturb_moves_only_listed_points(tmp_path, capsys):
    src = tmp_path / "c.csv"
    dst = tmp_path / "p.csv"
    run_cli("generate", "--shape", "random", "--n", 12, "--dim", 3, "--seed", 0, "--out", src)
    capsys.readouterr()
    assert run_cli("perturb", "--in", src, "--sigma", 0.1, "--indices", "2,5,9", "--seed", 4, "--out", dst) == 0
    assert "shifted 3 points" in capsys.readouterr().out
    before = load_cloud(src).points
    after = load_cloud(dst).points
    moved = sorted(np.nonzero(np.any(before != after, axis=1))[0].tolist())
    assert moved == [2, 5, 9]


# ---------------------------------------------------------------------------
# ph / torsion-check / dgm-dist / entropy


@pytest.fixture(scope="module")
def diagram_pair(tmp_path_factory):
    """Two small diagrams: a band cloud and a Gaussian-shifted copy."""
    root = tmp_path_factory.mktemp("dgms")
    cloud, shifted = root / "c.csv", root / "s.csv"
    a, b = root / "a.json", root / "b.json"
    run_cli("generate", "--shape", "band", "--n", 60, "--seed", 7, "--out", cloud)
    run_cli("perturb", "--in", cloud, "--sigma", 0.03, "--seed", 1, "--out", shifted)
    run_cli("ph", "--in", cloud, "--maxdim", 2, "--max-radius", 0.9, "--out", a)
    run_cli("ph", "--in", shifted, "--maxdim", 2, "--max-radius", 0.9, "--out", b)
    return a, b


def test_ph_output_loads_and_counts(tmp_path, capsys):
    src = tmp_path / "c.csv"
    dgm = tmp_path / "d.json"
    run_cli("generate", "--shape", "random", "--n", 15, "--dim", 3, "--seed", 2, "--out", src)
    capsys.readouterr()
    assert run_cli("ph", "--in", src, "--maxdim", 2, "--coeff", "q3", "--out", dgm) == 0
    line = capsys.readouterr().out
    assert "simplices" in line and "finite bars" in line
    loaded = load_diagram(dgm)
    assert all(p.dim in (0, 1, 2) for p in loaded.pairs)
    assert any(not p.is_finite for p in loaded.pairs)  # the essential H0 class survives


def test_torsion_check_clean_cloud(tmp_path, capsys):
    src = tmp_path / "c.csv"
    rep = tmp_path / "r.json"
    run_cli("generate", "--shape", "random", "--n", 25, "--dim", 3, "--seed", 6, "--out", src)
    capsys.readouterr()
    assert run_cli("torsion-check", "--in", src, "--maxdim", 2, "--max-radius", 0.8,
                   "--primes", "2,3", "--out", rep) == 0
    assert capsys.readouterr().out.strip() == "No Torsion"
    obj = json.loads(rep.read_text())
    assert obj["has_torsion"] is False
    assert obj["findings"] == []
    assert obj["primes_tested"] == [2, 3]


def test_dgm_dist_matches_library(diagram_pair, capsys):
    a, b = diagram_pair
    capsys.readouterr()
    assert run_cli("dgm-dist", "--a", a, "--b", b, "--dim", 1, "--metric", "bottleneck",
                   "--infinite-cap", 2.0) == 0
    got = float(capsys.readouterr().out)
    want = bottleneck(load_diagram(a), load_diagram(b), 1, infinite_cap=2.0)
    assert got == want


def test_wasserstein_metric_selected(diagram_pair, capsys):
    a, b = diagram_pair
    capsys.readouterr()
    run_cli("dgm-dist", "--a", a, "--b", b, "--dim", 0, "--metric", "wasserstein", "--infinite-cap", 2.0)
    bn = bottleneck(load_diagram(a), load_diagram(b), 0, infinite_cap=2.0)
    got = float(capsys.readouterr().out)
    assert got >= bn - 1e-12  # W1 dominates bottleneck


def test_entropy_matches_library(diagram_pair, capsys):
    a, _ = diagram_pair
    capsys.readouterr()
    assert run_cli("entropy", "--in", a, "--dim", 1) == 0
    got = float(capsys.readouterr().out)
    want = persistence_entropy(BarLengthSet.from_diagram(load_diagram(a), 1))
    assert got == want


# ---------------------------------------------------------------------------
# train


def test_train_checkpoint_byte_deterministic(tmp_path, capsys):
    src = tmp_path / "c.csv"
    run_cli("generate", "--shape", "band", "--n", 48, "--seed", 7, "--out", src)
    outs = []
    for tag in ("x", "y"):
        model = tmp_path / f"m_{tag}.json"
        hist = tmp_path / f"h_{tag}.json"
        assert run_cli("train", "--in", src, "--arch", "3,8,2,8,3", "--loss", "mse",
                       "--epochs", 3, "--seed", 0, "--out", model, "--history", hist) == 0
        outs.append((model.read_bytes(), hist.read_bytes()))
    assert outs[0] == outs[1]
    assert "final mse" in capsys.readouterr().out
    entries = json.loads((tmp_path / "h_x.json").read_text())
    assert [e["epoch"] for e in entries] == [0, 1, 2]
    for e in entries:
        assert e["total"] == e["mse"]  # plain loss: no topology term


def test_train_rtd_uses_warmup_schedule(tmp_path, capsys):
    src = tmp_path / "c.csv"
    hist = tmp_path / "h.json"
    run_cli("generate", "--shape", "band", "--n", 48, "--seed", 7, "--out", src)
    assert run_cli("train", "--in", src, "--arch", "3,8,2,8,3", "--loss", "rtd",
                   "--epochs", 12, "--batch-size", 16, "--weight", 0.1,
                   "--seed", 0, "--out", tmp_path / "m.json", "--history", hist) == 0
    entries = json.loads(hist.read_text())
    assert "rtd" not in entries[0]  # inactive during warmup
    assert "rtd" in entries[11]


def test_train_topo_records_term(tmp_path, capsys):
    src = tmp_path / "c.csv"
    hist = tmp_path / "h.json"
    run_cli("generate", "--shape", "band", "--n", 40, "--seed", 7, "--out", src)
    run_cli("train", "--in", src, "--arch", "3,8,2,8,3", "--loss", "topo",
            "--epochs", 2, "--weight", 0.5, "--seed", 0,
            "--out", tmp_path / "m.json", "--history", hist)
    entries = json.loads(hist.read_text())
    for e in entries:
        assert e["total"] == pytest.approx(e["mse"] + 0.5 * e["topo"], rel=1e-9)


# ---------------------------------------------------------------------------
# experiment / errors


def test_experiment_preset_writes_report(tmp_path, capsys):
    out = tmp_path / "study"
    assert run_cli("experiment", "--preset", "fragility", "--profile", "ci",
                   "--out", out, "--seed", 0) == 0
    assert "fragility/ci" in capsys.readouterr().out
    assert (out / "manifest.json").is_file()
    assert (out / "report.json").is_file()
    assert (out / "leaderboard.csv").is_file()


def test_missing_input_exits_one(tmp_path, capsys):
    code = run_cli("ph", "--in", tmp_path / "nope.csv", "--maxdim", 1, "--out", tmp_path / "d.json")
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_bad_coefficient_label_exits_one(tmp_path, capsys):
    src = tmp_path / "c.csv"
    run_cli("generate", "--shape", "random", "--n", 10, "--dim", 2, "--seed", 0, "--out", src)
    code = run_cli("ph", "--in", src, "--maxdim", 1, "--coeff", "q9", "--out", tmp_path / "d.json")
    assert code == 1
    assert "prime" in capsys.readouterr().err


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_console_script_entry_point(tmp_path):
    src = tmp_path / "c.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "torsionscope.cli", "generate", "--shape", "random",
         "--n", "10", "--dim", "2", "--seed", "0", "--out", str(src)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "wrote 10 points" in proc.stdout
