"""Command-line interface: ``graphon-aug <subcommand> [flags]``.

Exit codes: 0 success, 1 validation / configuration errors (including bad
flags), 2 I/O errors such as a missing input file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import numpy as np

from .augmentation import AugmentationPlan, augment_dataset, derive_seed
from .errors import ConfigError, GraphonAugError, ValidationError
from .estimators import METHODS, EstimatorConfig, estimate
from .evaluation import BenchmarkSpec, ExperimentConfig, run_experiment, synthetic_benchmark
from .graph import GraphDataset, load_dataset, save_dataset
from .graphon import graphon_heatmap, load_graphon, resize_step_graphon, sample_graph, save_graphon
from .ot import GwParams, gw_distance

PROG = "graphon-aug"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message)


class _HelpFormatter(argparse.HelpFormatter):
    """Shows ``(required)`` or ``(default: X)`` after every flag's help."""

    def _get_help_string(self, action):
        text = action.help or ""
        if action.required:
            return text + " (required)"
        if action.default is not None and action.default is not argparse.SUPPRESS:
            return text + " (default: %(default)s)"
        return text


def _formatter(prog):
    return _HelpFormatter(prog, max_help_position=32, width=100)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return value


def _k_value(text: str):
    return None if text == "auto" else _positive_int(text)


def _method(text: str) -> str:
    if text.upper() not in METHODS:
        raise argparse.ArgumentTypeError(f"unknown method {text!r}; valid methods: {', '.join(METHODS)}")
    return text.upper()


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.05, help="proximal KL strength")
    p.add_argument("--outer-iterations", type=_positive_int, default=50, help="proximal / barycenter steps")
    p.add_argument("--sinkhorn-iterations", type=_positive_int, default=300, help="scaling sweeps per step")
    p.add_argument("--tolerance", type=float, default=1e-7, help="stopping tolerance")


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=_k_value, default="auto", help="output resolution K (auto: min(median size, 64))")
    p.add_argument("--smoothing-window", type=_positive_int, default=3, help="box filter side (SGB, SAS)")
    p.add_argument("--sba-threshold", type=float, default=0.2, help="SBA neighbourhood distance threshold")
    p.add_argument("--lg-groups", type=_k_value, default="auto", help="LG group count (auto: ceil(log2 N) + 1)")
    p.add_argument("--mc-threshold-scale", type=float, default=2.02, help="MC singular value threshold scale")
    p.add_argument("--measure", choices=("degree", "uniform"), default="degree", help="node measure for GB / SGB")
    _add_solver_flags(p)


def _gw_params(args, order: int = 2) -> GwParams:
    return GwParams(order=order, epsilon=args.epsilon, outer_iterations=args.outer_iterations,
                    sinkhorn_iterations=args.sinkhorn_iterations, tolerance=args.tolerance,
                    seed=getattr(args, "seed", 0))


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        method=args.method,
        resolution=None if args.k == "auto" else args.k,
        gw=_gw_params(args),
        smoothing_window=args.smoothing_window,
        sba_threshold=args.sba_threshold,
        lg_groups=None if args.lg_groups == "auto" else args.lg_groups,
        mc_threshold_scale=args.mc_threshold_scale,
        measure=args.measure,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Graphon estimation and graph data augmentation.",
                     formatter_class=_formatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate", help="estimate a class graphon from a dataset", formatter_class=_formatter)
    p.add_argument("--dataset", required=True, help="input dataset (JSONL)")
    p.add_argument("--label", type=int, required=True, help="class label to estimate")
    p.add_argument("--method", type=_method, required=True, help=f"one of {', '.join(METHODS)}")
    p.add_argument("--out", required=True, help="output graphon (GMX)")
    p.add_argument("--seed", type=int, default=0, help="solver seed")
    _add_estimator_flags(p)

    p = sub.add_parser("sample", help="sample graphs from a graphon", formatter_class=_formatter)
    p.add_argument("--graphon", required=True, help="input graphon (GMX)")
    p.add_argument("--count", type=int, required=True, help="number of graphs")
    sizes = p.add_mutually_exclusive_group(required=True)
    sizes.add_argument("--nodes", type=_positive_int, help="fixed node count")
    sizes.add_argument("--nodes-from", help="dataset whose graph sizes are resampled uniformly")
    p.add_argument("--label", type=int, default=None, help="label attached to every sample")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--out", required=True, help="output dataset (JSONL)")

    p = sub.add_parser("augment", help="augment a training set with graphon samples", formatter_class=_formatter)
    p.add_argument("--train", required=True, help="training dataset (JSONL)")
    p.add_argument("--rate", type=_nonneg_float, required=True, help="synthetic graphs as a fraction of the train size")
    p.add_argument("--method", type=_method, required=True, help=f"one of {', '.join(METHODS)}")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--out-dir", required=True, help="writes augmented.jsonl and class-<label>.gmx")
    _add_estimator_flags(p)

    p = sub.add_parser("distance", help="GW distance between two graphons", formatter_class=_formatter)
    p.add_argument("--a", required=True, help="first graphon (GMX)")
    p.add_argument("--b", required=True, help="second graphon (GMX)")
    p.add_argument("--order", type=int, choices=(1, 2), default=2, help="GW order (2 prints the squared distance)")
    _add_solver_flags(p)

    p = sub.add_parser("evaluate", help="run an augmentation experiment", formatter_class=_formatter)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", required=True, help="report (CSV)")

    p = sub.add_parser("heatmap", help="render a graphon as a PGM image", formatter_class=_formatter)
    p.add_argument("--graphon", required=True, help="input graphon (GMX)")
    p.add_argument("--out", required=True, help="output image (PGM)")

    p = sub.add_parser("benchmark", help="generate a synthetic labeled dataset", formatter_class=_formatter)
    p.add_argument("--spec", required=True, help="benchmark spec (JSON)")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    p.add_argument("--out-dir", required=True, help="writes dataset.jsonl and class-<label>.gmx")
    return parser


def _write_class_graphons(graphons, out_dir: str) -> None:
    for label in sorted(graphons):
        g = graphons[label]
        if not g.is_uniform:
            g = resize_step_graphon(g, g.resolution)
        save_graphon(g, os.path.join(out_dir, f"class-{label}.gmx"))


def _cmd_estimate(args) -> None:
    dataset = load_dataset(args.dataset)
    members = dataset.by_class().get(args.label, [])
    if not members:
        raise ValidationError(f"dataset has no graphs with label {args.label}")
    save_graphon(estimate(members, _estimator_config(args)), args.out)


def _cmd_sample(args) -> None:
    if args.count < 0:
        raise ValidationError("--count must be >= 0")
    graphon = load_graphon(args.graphon)
    if args.nodes_from is not None:
        pool = np.array([g.n for g in load_dataset(args.nodes_from).graphs])
        if pool.size == 0:
            raise ValidationError("--nodes-from dataset is empty")
    graphs = []
    for j in range(args.count):
        if args.nodes is not None:
            n = args.nodes
        else:
            n = int(pool[np.random.default_rng(derive_seed(args.seed, j, 0)).integers(pool.size)])
        graphs.append(sample_graph(graphon, n, derive_seed(args.seed, j, 1), graph_id=f"sample-{j}", label=args.label))
    save_dataset(GraphDataset(tuple(graphs)), args.out)


def _cmd_augment(args) -> None:
    train = load_dataset(args.train)
    plan = AugmentationPlan(rate=args.rate, method=_estimator_config(args), seed=args.seed)
    augmented, graphons = augment_dataset(train, plan)
    os.makedirs(args.out_dir, exist_ok=True)
    save_dataset(augmented, os.path.join(args.out_dir, "augmented.jsonl"))
    _write_class_graphons(graphons, args.out_dir)


def _cmd_distance(args) -> None:
    a = load_graphon(args.a)
    b = load_graphon(args.b)
    value, _ = gw_distance(a.values, a.partition_weights, b.values, b.partition_weights, _gw_params(args, args.order))
    print(f"{value:.6f}")


def _cmd_evaluate(args) -> None:
    report = run_experiment(ExperimentConfig.from_json(args.config))
    report.write_csv(args.out)


def _cmd_heatmap(args) -> None:
    graphon_heatmap(load_graphon(args.graphon), args.out)


def _cmd_benchmark(args) -> None:
    with open(args.spec, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec is not valid JSON: {exc.msg}") from None
    dataset, graphons = synthetic_benchmark(BenchmarkSpec.from_dict(obj), args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    save_dataset(dataset, os.path.join(args.out_dir, "dataset.jsonl"))
    _write_class_graphons(graphons, args.out_dir)


_COMMANDS = {
    "estimate": _cmd_estimate,
    "sample": _cmd_sample,
    "augment": _cmd_augment,
    "distance": _cmd_distance,
    "evaluate": _cmd_evaluate,
    "heatmap": _cmd_heatmap,
    "benchmark": _cmd_benchmark,
}


def _fail(message: str, code: int) -> int:
    print(f"{PROG}: error: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except GraphonAugError as exc:
        return _fail(str(exc), 1)
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        return _fail(f"{exc.strerror or exc}: {name}".rstrip(": "), 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
