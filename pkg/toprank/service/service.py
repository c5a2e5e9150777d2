from __future__ import annotations

import argparse
import sys
from typing import List, Optional, TextIO

from toprank.core.btl import ScoreScheme
from toprank.core.errors import TopRankError
from toprank.service.handlers import (
    handle_bounds,
    handle_experiment,
    handle_generate_graph,
    handle_rank,
    handle_simulate,
    handle_spectra,
)
from toprank.service.harness import PRESETS, Method
from toprank.service.log import logger
from toprank.service.utils import split_list

METHODS = [m.value for m in Method]
SCHEMES = [s.value for s in ScoreScheme]


def _int_list(entry: str) -> List[int]:
    try:
        return [int(i) for i in split_list(entry)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {entry!r}")


def _add_constants(parser: argparse.ArgumentParser):
    for name in ("c1", "c2", "c3", "c4", "c5", "c6"):
        parser.add_argument(f"--{name}", type=float, default=None)
    parser.add_argument("--epsilon", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toprank")
    subparsers = parser.add_subparsers(dest="command")

    parser_rank = subparsers.add_parser(
        "rank", help="Ranks items from an edge list and an observation file"
    )
    parser_rank.add_argument("graph")
    parser_rank.add_argument("observations")
    parser_rank.add_argument("--k", type=int, required=True)
    parser_rank.add_argument("--method", choices=METHODS, default=Method.RANK_CENTRALITY.value)
    parser_rank.add_argument("--tol", type=float, default=None)
    parser_rank.add_argument("--max-iter", type=int, default=None)
    parser_rank.add_argument(
        "--scores", action=argparse.BooleanOptionalAction, default=False
    )
    parser_rank.add_argument("--mle-rounds", type=int, default=None)
    parser_rank.add_argument("--mle-threshold", type=float, default=None)
    parser_rank.add_argument(
        "--mle-bracket", type=float, nargs=2, metavar=("LO", "HI"), default=None
    )
    parser_rank.add_argument(
        "--truth", default=None, help="Truth file; also prints errors and top-K success"
    )

    parser_bounds = subparsers.add_parser(
        "bounds", help="Evaluates the sample-complexity conditions for one setting"
    )
    parser_bounds.add_argument("--n", type=int, required=True)
    parser_bounds.add_argument("--p", type=float, required=True)
    parser_bounds.add_argument("--l", type=int, required=True)
    parser_bounds.add_argument("--delta-k", type=float, required=True)
    parser_bounds.add_argument("--k", type=int, default=10)
    _add_constants(parser_bounds)
    parser_bounds.add_argument("--graph", default=None, help="Use this edge list instead of an ER sample")
    parser_bounds.add_argument("--seed", type=int, default=0)
    parser_bounds.add_argument("--json", action=argparse.BooleanOptionalAction, default=False)

    parser_experiment = subparsers.add_parser(
        "experiment", help="Runs a Monte Carlo sweep over L"
    )
    parser_experiment.add_argument("--config", default=None)
    parser_experiment.add_argument("--preset", choices=sorted(PRESETS), default=None)
    parser_experiment.add_argument("--out", default=None)
    parser_experiment.add_argument("--n", type=int, default=None)
    parser_experiment.add_argument("--k", type=int, default=None)
    parser_experiment.add_argument("--delta-k", type=float, default=None)
    parser_experiment.add_argument("--p", type=float, default=None)
    parser_experiment.add_argument("--l-values", type=_int_list, default=None)
    parser_experiment.add_argument("--trials", type=int, default=None)
    parser_experiment.add_argument("--methods", type=split_list, default=None)
    parser_experiment.add_argument("--seed", type=int, default=None)
    parser_experiment.add_argument("--workers", type=int, default=None)
    parser_experiment.add_argument("--scheme", choices=SCHEMES, default=None)
    parser_experiment.add_argument("--tol", type=float, default=None)
    parser_experiment.add_argument("--max-iter", type=int, default=None)
    parser_experiment.add_argument("--mle-rounds", type=int, default=None)
    parser_experiment.add_argument("--mle-threshold", type=float, default=None)
    parser_experiment.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None)
    parser_experiment.add_argument(
        "--retain-records", action=argparse.BooleanOptionalAction, default=None
    )

    parser_simulate = subparsers.add_parser(
        "simulate", help="Writes one (graph, observations, truth) triple"
    )
    parser_simulate.add_argument("out")
    parser_simulate.add_argument("--n", type=int, default=500)
    parser_simulate.add_argument("--p", type=float, default=0.25)
    parser_simulate.add_argument("--k", type=int, default=10)
    parser_simulate.add_argument("--delta-k", type=float, default=0.1)
    parser_simulate.add_argument("--l", type=int, default=20)
    parser_simulate.add_argument("--scheme", choices=SCHEMES, default=ScoreScheme.TWO_LEVEL.value)
    parser_simulate.add_argument("--w-max", type=float, default=1.0)
    parser_simulate.add_argument("--exact", action=argparse.BooleanOptionalAction, default=False)
    parser_simulate.add_argument("--seed", type=int, default=None)

    parser_generate = subparsers.add_parser(
        "generate-graph", help="Samples an Erdos-Renyi comparison graph to an edge list"
    )
    parser_generate.add_argument("output")
    parser_generate.add_argument("--n", type=int, required=True)
    parser_generate.add_argument("--p", type=float, required=True)
    parser_generate.add_argument("--seed", type=int, default=None)
    parser_generate.add_argument(
        "--connected",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Resample until the graph is connected",
    )

    parser_spectra = subparsers.add_parser(
        "spectra", help="Prints degree and spectral diagnostics of an edge list"
    )
    parser_spectra.add_argument("graph")
    return parser


def handle_command(argv: List[str], out: Optional[TextIO] = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logger.info(f"command: {args.command}")

    try:
        if args.command == "rank":
            handle_rank(args, out)
        elif args.command == "bounds":
            handle_bounds(args, out)
        elif args.command == "experiment":
            handle_experiment(args, out)
        elif args.command == "simulate":
            handle_simulate(args, out)
        elif args.command == "generate-graph":
            handle_generate_graph(args, out)
        elif args.command == "spectra":
            handle_spectra(args, out)
        else:
            out.write(parser.format_help())
            return 1
    except (TopRankError, OSError) as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0
