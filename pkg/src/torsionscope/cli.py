"""Command-line interface.

Subcommands cover the pipeline end to end: generate or perturb clouds,
compute persistence diagrams, run the torsion detector, compare
diagrams, score entropy, train autoencoders, and execute full study
presets.  Numeric results print with repr precision so reruns can be
compared textually.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .diagmetrics import bottleneck, persistence_entropy, wasserstein1, BarLengthSet
from .experiments import PRESETS, PROFILES, run_preset, _rtd_config
from .nn import TrainConfig, build_autoencoder, save_model, train
from .phfield import Coefficients, load_diagram, reduce, save_diagram
from .pointcloud import (
    ALL,
    generate_loop_band,
    generate_projective_plane,
    generate_random_cloud,
    load_cloud,
    perturb_gaussian,
    save_cloud,
)
from .rips import AUTO, DEFAULT_SIMPLEX_CAP, build_rips
from .topoloss import combined_loss
from .torsion import torsion_check


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x != ""]


def _radius(text: str):
    return AUTO if text == "auto" else float(text)


def _add_generate(sub) -> None:
    p = sub.add_parser("generate", help="sample a point cloud fixture")
    p.add_argument("--shape", required=True, choices=("band", "rp2", "random"))
    p.add_argument("--n", type=int, required=True, help="number of points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--windings", type=int, default=2, help="band: loops around the axis")
    p.add_argument("--twist", type=int, default=0, help="band: half-turns per loop")
    p.add_argument("--band-width", type=float, default=0.1)
    p.add_argument("--major-radius", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=3, help="random: ambient dimension")


def _add_perturb(sub) -> None:
    p = sub.add_parser("perturb", help="Gaussian-shift selected points")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--indices", default="all", help='"all" or comma-separated point indices')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def _add_ph(sub) -> None:
    p = sub.add_parser("ph", help="persistence diagram of a cloud's Rips filtration")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--maxdim", type=int, required=True, help="max simplex dimension")
    p.add_argument("--coeff", default="q2", help="q<prime> or rational")
    p.add_argument("--max-radius", type=_radius, default=AUTO)
    p.add_argument("--simplex-cap", type=int, default=DEFAULT_SIMPLEX_CAP)
    p.add_argument("--out", required=True)


def _add_torsion_check(sub) -> None:
    p = sub.add_parser("torsion-check", help="detect coefficient-dependent pairings")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--maxdim", type=int, required=True)
    p.add_argument("--primes", type=_int_list, default=[2, 3, 5])
    p.add_argument("--max-radius", type=_radius, default=AUTO)
    p.add_argument("--simplex-cap", type=int, default=DEFAULT_SIMPLEX_CAP)
    p.add_argument("--out", required=True)


def _add_dgm_dist(sub) -> None:
    p = sub.add_parser("dgm-dist", help="distance between two diagrams")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--metric", required=True, choices=("bottleneck", "wasserstein"))
    p.add_argument("--infinite-cap", type=float, default=None)


def _add_entropy(sub) -> None:
    p = sub.add_parser("entropy", help="persistence entropy of one dimension")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--dim", type=int, required=True)


def _add_train(sub) -> None:
    p = sub.add_parser("train", help="train an autoencoder on a cloud")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--arch", type=_int_list, required=True, help="layer widths, e.g. 3,32,32,2,32,32,3")
    p.add_argument("--loss", required=True, choices=("mse", "topo", "rtd"))
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--weight", type=float, default=1.0, help="topology term weight")
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--activation", default="relu")
    p.add_argument("--no-batch-norm", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--history", default=None, help="optional training history JSON path")


def _add_experiment(sub) -> None:
    p = sub.add_parser("experiment", help="run a study preset")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--profile", required=True, choices=PROFILES)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torsionscope")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_perturb(sub)
    _add_ph(sub)
    _add_torsion_check(sub)
    _add_dgm_dist(sub)
    _add_entropy(sub)
    _add_train(sub)
    _add_experiment(sub)
    return parser


def _cmd_generate(args) -> int:
    if args.shape == "band":
        cloud = generate_loop_band(
            windings=args.windings,
            n_points=args.n,
            major_radius=args.major_radius,
            band_width=args.band_width,
            twist=args.twist,
            seed=args.seed,
        )
    elif args.shape == "rp2":
        cloud = generate_projective_plane(args.n, args.seed)
    else:
        cloud = generate_random_cloud(args.n, args.dim, args.seed)
    save_cloud(cloud, args.out)
    print(f"wrote {cloud.n} points of dimension {cloud.dim} to {args.out}")
    return 0


def _cmd_perturb(args) -> int:
    cloud = load_cloud(args.inp)
    indices = ALL if args.indices == "all" else _int_list(args.indices)
    moved, record = perturb_gaussian(cloud, indices, args.sigma, args.seed)
    save_cloud(moved, args.out)
    print(f"shifted {len(record.shifted_indices)} points, mse {record.mse!r}")
    return 0


def _cmd_ph(args) -> int:
    cloud = load_cloud(args.inp)
    filt = build_rips(cloud, max_dim=args.maxdim, max_radius=args.max_radius, simplex_cap=args.simplex_cap)
    diagram = reduce(filt, Coefficients.parse(args.coeff))
    save_diagram(diagram, args.out)
    finite = sum(1 for p in diagram.pairs if p.is_finite and p.persistence > 0)
    infinite = sum(1 for p in diagram.pairs if not p.is_finite)
    print(f"{len(filt.simplices)} simplices; {finite} finite bars, {infinite} infinite")
    return 0


def _cmd_torsion_check(args) -> int:
    cloud = load_cloud(args.inp)
    filt = build_rips(cloud, max_dim=args.maxdim, max_radius=args.max_radius, simplex_cap=args.simplex_cap)
    report = torsion_check(filt, primes=tuple(args.primes))
    Path(args.out).write_text(json.dumps(report.to_obj(), sort_keys=True, indent=2) + "\n")
    f = report.first_finding()
    print(f"Torsion: ({f.prime}, {f.first_index})" if f else "No Torsion")
    return 0


def _cmd_dgm_dist(args) -> int:
    a = load_diagram(args.a)
    b = load_diagram(args.b)
    fn = bottleneck if args.metric == "bottleneck" else wasserstein1
    value = fn(a, b, args.dim, infinite_cap=args.infinite_cap)
    print(repr(value))
    return 0


def _cmd_entropy(args) -> int:
    diagram = load_diagram(args.inp)
    bars = BarLengthSet.from_diagram(diagram, args.dim)
    print(repr(persistence_entropy(bars)))
    return 0


def _cmd_train(args) -> int:
    cloud = load_cloud(args.inp)
    if args.loss == "rtd":
        config = _rtd_config(args.epochs, args.batch_size, args.seed)
        config = TrainConfig(
            epochs=config.epochs,
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            weight_decay=args.weight_decay,
            seed=config.seed,
            lr_schedule=config.lr_schedule,
        )
        terms = combined_loss("rtd", args.weight)
    elif args.loss == "topo":
        config = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            weight_decay=args.weight_decay,
            seed=args.seed,
        )
        terms = combined_loss("topoae", args.weight)
    else:
        config = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            weight_decay=args.weight_decay,
            seed=args.seed,
        )
        terms = None
    model = build_autoencoder(
        tuple(args.arch),
        activation_name=args.activation,
        batch_norm=not args.no_batch_norm,
        seed=args.seed,
    )
    model, history = train(model, cloud, config, terms=terms)
    save_model(model, args.out)
    if args.history:
        Path(args.history).write_text(json.dumps(list(history), sort_keys=True, indent=2) + "\n")
    final = history[-1]["mse"] if history else float("nan")
    print(f"final mse {final!r}")
    return 0


def _cmd_experiment(args) -> int:
    run_preset(args.preset, args.profile, args.out, seed=args.seed)
    print(f"wrote {args.preset}/{args.profile} report to {args.out}")
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "perturb": _cmd_perturb,
    "ph": _cmd_ph,
    "torsion-check": _cmd_torsion_check,
    "dgm-dist": _cmd_dgm_dist,
    "entropy": _cmd_entropy,
    "train": _cmd_train,
    "experiment": _cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
