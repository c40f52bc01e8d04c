"""Command-line entry point: ``scattersample <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .datasets import load_dataset
from .graph import NormalizationKind, propagate_features, write_feature_csv, write_gfea
from .simbench import SimConfig


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _print_summary(summary):
    for row in summary:
        print(",".join(str(v) for v in row.values()))


def _load_cfg(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.from_json(args.config)
    if getattr(args, "seeds", None):
        cfg.seeds = _ints(args.seeds)
    return cfg


def cmd_run(args):
    res = ex.run_benchmark(_load_cfg(args), args.out)
    _print_summary(res.summary)
    if args.plot:
        from .plotting import plot_accuracy_curves
        plot_accuracy_curves(res.summary, Path(args.out).with_suffix(".png"))


def cmd_ablate_redundancy(args):
    res = ex.run_ablation_redundancy(_load_cfg(args), _floats(args.r_values), args.out)
    _print_summary(res.summary)
    if args.plot:
        from .plotting import plot_accuracy_curves
        plot_accuracy_curves(res.summary, Path(args.out).with_suffix(".png"), group_by="redundancy")


def cmd_ablate_target(args):
    targets = args.targets.split(",") if args.targets else None
    res = ex.run_ablation_clustering_target(_load_cfg(args), args.out, targets)
    _print_summary(res.summary)
    if args.plot:
        from .plotting import plot_accuracy_curves
        plot_accuracy_curves(res.summary, Path(args.out).with_suffix(".png"), group_by="clustering_target")


def cmd_ablate_init(args):
    res = ex.run_ablation_init_ratio(_load_cfg(args), _floats(args.b0_values), args.out)
    _print_summary(res.summary)
    if args.plot:
        from .plotting import plot_accuracy_curves
        plot_accuracy_curves(res.summary, Path(args.out).with_suffix(".png"), group_by="b0")


def cmd_simulate(args):
    base = SimConfig(gp_theta=args.theta, rounds=args.rounds) if args.theta else SimConfig(rounds=args.rounds)
    rows, summary = ex.run_simulation_sweep(_floats(args.p_inter), _ints(args.seeds), args.out, base)
    _print_summary(summary)
    if args.plot:
        from .plotting import plot_simulation
        plot_simulation(rows, Path(args.out).with_suffix(".png"))


def cmd_convert(args):
    from .convert import convert_all
    for path in convert_all(args.raw_dir, args.out_dir):
        print(path)


def cmd_propagate(args):
    d = Path(args.dataset)
    bundle = load_dataset(d.parent, d.name)
    xk = propagate_features(bundle.graph, bundle.features, args.k, NormalizationKind(args.norm))
    if args.out.endswith(".csv"):
        write_feature_csv(args.out, xk)
    else:
        write_gfea(args.out, xk)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scattersample", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def sweep(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="experiment JSON file")
        sp.add_argument("--out", required=True, help="results CSV path")
        sp.add_argument("--seeds", help="comma-separated seeds overriding the config")
        sp.add_argument("--plot", action="store_true", help="also write a PNG next to the CSV")
        sp.set_defaults(func=func)
        return sp

    sweep("run", cmd_run, "budget sweep over samplers and seeds")
    sweep("ablate-redundancy", cmd_ablate_redundancy, "accuracy vs sampling redundancy r").add_argument(
        "--r-values", default="1,2,3,4,5,6", help="comma-separated r values")
    sweep("ablate-target", cmd_ablate_target, "clustering target ablation").add_argument(
        "--targets", help="subset of propagated,raw,model_output")
    sweep("ablate-init", cmd_ablate_init, "initial sampling ratio ablation").add_argument(
        "--b0-values", default="0.02,0.03,0.04", help="comma-separated initial ratios")

    sp = sub.add_parser("simulate", help="two-cluster GP simulation sweep")
    sp.add_argument("--p-inter", default=",".join(f"{p:g}" for p in ex.SIMULATION_P_GRID))
    sp.add_argument("--seeds", required=True, help="comma-separated seeds")
    sp.add_argument("--out", required=True)
    sp.add_argument("--theta", type=float, default=None, help="GP kernel theta override")
    sp.add_argument("--rounds", type=int, default=1)
    sp.add_argument("--plot", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("convert", help="convert Planetoid ind.* files to bundle directories")
    sp.add_argument("raw_dir")
    sp.add_argument("out_dir")
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("propagate", help="write k-step propagated features of a dataset")
    sp.add_argument("--dataset", required=True, help="bundle directory <root>/<name>")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--norm", choices=[n.value for n in NormalizationKind], default="symmetric")
    sp.add_argument("--out", required=True, help=".csv for CSV, anything else for GFEA")
    sp.set_defaults(func=cmd_propagate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
