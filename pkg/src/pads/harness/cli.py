"""``pads`` command line."""

from __future__ import annotations

import argparse
import logging
import sys

from pads.errors import PadsError


def _cmd_run(args: argparse.Namespace) -> int:
    from pads.harness.config import load_config
    from pads.harness.metrics import format_summary
    from pads.harness.runner import run_experiment

    cfg = load_config(args.config)
    exp = run_experiment(cfg, args.out)
    if not args.quiet:
        print(format_summary(exp.summary))
        print(f"metrics: {exp.metrics_path}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    from pads.harness.metrics import compare_runs

    cmp = compare_runs(args.metrics_a, args.metrics_b, args.window)
    print(cmp.report())
    return 0


def _cmd_gen_graph(args: argparse.Namespace) -> int:
    from pads.models.graphs import generate_graph, parse_graph_params, write_edge_list

    graph = generate_graph(args.kind, args.n, parse_graph_params(args.params), args.seed)
    write_edge_list(graph, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pads", description="Partitioned discrete simulation with adaptive placement.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation from a JSON config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--quiet", action="store_true", help="do not print the summary")
    run.set_defaults(func=_cmd_run)

    cmp = sub.add_parser("compare", help="compare two metrics CSV files")
    cmp.add_argument("metrics_a")
    cmp.add_argument("metrics_b")
    cmp.add_argument("--window", type=int, default=16, help="steps per locality window")
    cmp.set_defaults(func=_cmd_compare)

    gen = sub.add_parser("gen-graph", help="write a generated graph as an edge list")
    gen.add_argument("kind", choices=("random", "small-world", "scale-free"))
    gen.add_argument("n", type=int)
    gen.add_argument("params", help='comma separated, e.g. "k=4,beta=0.1"')
    gen.add_argument("seed", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PadsError as exc:
        print(f"pads: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"pads: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
