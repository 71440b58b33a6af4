"""Command-line interface for dynbound."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

import numpy as np
from dotenv import load_dotenv

from .config import load_config, output_root, worker_count
from .exceptions import DynboundError, ValidationError
from .graphs import graph_table
from .scenarios import ScenarioRunner, contraction_pair, convergence_study, sweep_lambda
from .scenarios.studies import parse_lambdas, parse_seeds
from .utils import ensure_run_directory, write_graph_table, write_json, write_table


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the CLI."""
    parser = argparse.ArgumentParser(
        prog="dynbound",
        description="Solve and verify degenerate flows with a dynamic boundary condition",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or solver details (-vv)",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    run_parser = subparsers.add_parser("run", help="Run one scenario and check its bounds")
    _add_run_args(run_parser)

    sweep_parser = subparsers.add_parser(
        "sweep-lambda",
        help="Run a decreasing lambda sequence and tabulate dual distances",
    )
    _add_sweep_args(sweep_parser)

    contraction_parser = subparsers.add_parser(
        "contraction",
        help="Run two random initial data and check the dual distance does not grow",
    )
    _add_contraction_args(contraction_parser)

    converge_parser = subparsers.add_parser(
        "converge",
        help="Observed convergence orders against the single-mode exact solution",
    )
    _add_converge_args(converge_parser)

    table_parser = subparsers.add_parser(
        "graph-table",
        help="Tabulate a graph with its resolvent, Yosida map and envelope",
    )
    _add_graph_table_args(table_parser)

    verify_parser = subparsers.add_parser(
        "verify",
        help="Recompute the report of a stored run and compare",
    )
    verify_parser.add_argument("directory", help="Run directory")
    verify_parser.add_argument("--json", action="store_true", help="Output as JSON")

    return parser


def _add_common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="Configuration file")
    parser.add_argument(
        "--output-root",
        help="Root directory for run outputs (default: DYNBOUND_OUTPUT_ROOT or 'runs')",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="Output as JSON",
    )


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the run command."""
    _add_common_args(parser)
    parser.add_argument(
        "--project-forcing",
        action="store_true",
        help="Remove nonzero forcing means instead of failing",
    )
    parser.add_argument(
        "--dump-operators",
        action="store_true",
        help="Also write the stiffness matrix in coordinate format",
    )
    parser.add_argument(
        "--report-cp",
        action="store_true",
        help="Print the discrete Poincare and embedding constants",
    )


def _add_workers_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workers",
        type=int,
        help="Threads for independent runs (default: DYNBOUND_WORKERS or 1)",
    )


def _add_sweep_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the sweep-lambda command."""
    _add_common_args(parser)
    parser.add_argument(
        "--lambdas",
        required=True,
        help="Comma-separated, strictly decreasing values (e.g., 0.2,0.1,0.05)",
    )
    _add_workers_arg(parser)


def _add_contraction_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the contraction command."""
    _add_common_args(parser)
    parser.add_argument(
        "--seeds",
        required=True,
        help="Two distinct initial-data seeds (e.g., 1,2)",
    )
    _add_workers_arg(parser)


def _add_converge_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the converge command."""
    _add_common_args(parser)
    parser.add_argument(
        "--levels",
        nargs="+",
        required=True,
        help="Levels as nx:ny:tau (e.g., 16:4:1e-4 32:4:2.5e-5)",
    )
    _add_workers_arg(parser)


def _add_graph_table_args(parser: argparse.ArgumentParser) -> None:
    """Add arguments for the graph-table command."""
    parser.add_argument("config", help="Configuration file")
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        help="Regularization parameter (default: run.lambda of the config)",
    )
    parser.add_argument("--r-min", type=float, default=-3.0, help="Left end (default: -3)")
    parser.add_argument("--r-max", type=float, default=3.0, help="Right end (default: 3)")
    parser.add_argument("--points", type=int, default=601, help="Sample count (default: 601)")
    parser.add_argument(
        "--surface",
        action="store_true",
        help="Tabulate the surface graph instead of the bulk graph",
    )
    parser.add_argument("--output", help="Write CSV to this path instead of stdout")


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args: argparse.Namespace) -> int:
    """Handle the run command."""
    config = load_config(args.config)
    runner = ScenarioRunner(output_root(args.output_root))
    outcome = runner.run(
        config,
        project_forcing=True if args.project_forcing else None,
        dump_operators=args.dump_operators,
    )

    ctx = outcome.scenario.ctx
    if args.json:
        payload = outcome.report.to_dict()
        if args.report_cp:
            payload["dual"] = ctx.describe()
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(outcome.report.format_summary())
        if args.report_cp:
            print(f"\nmu_min = {ctx.mu_min:.12g}")
            print(f"c_P = {ctx.poincare_constant:.12g}")
            print(f"C_emb = {ctx.embedding_constant:.12g}")
        print(f"\nOutputs: {outcome.directory}")

    return outcome.exit_code


def cmd_sweep(args: argparse.Namespace) -> int:
    """Handle the sweep-lambda command."""
    config = load_config(args.config)
    outcome = sweep_lambda(
        config,
        parse_lambdas(args.lambdas),
        root=output_root(args.output_root),
        workers=worker_count(args.workers),
    )
    _print_study(args, outcome.summary, outcome.payload, outcome.directory)
    return outcome.exit_code


def cmd_contraction(args: argparse.Namespace) -> int:
    """Handle the contraction command."""
    config = load_config(args.config)
    outcome = contraction_pair(
        config,
        parse_seeds(args.seeds),
        root=output_root(args.output_root),
        workers=worker_count(args.workers),
    )
    _print_study(args, outcome.summary, outcome.payload, outcome.directory)
    return outcome.exit_code


def cmd_converge(args: argparse.Namespace) -> int:
    """Handle the converge command."""
    config = load_config(args.config)
    table = convergence_study(config, args.levels, workers=worker_count(args.workers))
    directory = ensure_run_directory(
        output_root(args.output_root), config.output.directory, "converge"
    )
    write_table(
        directory / "convergence.csv", ("nx", "ny", "tau", "error", "order"), table.rows()
    )
    write_json(directory / "convergence.json", table.to_dict())
    _print_study(args, table.format_summary(), table.to_dict(), directory)
    return 0 if all(table.passed) else 1


def _print_study(
    args: argparse.Namespace, summary: str, payload: dict[str, object], directory: Path
) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(summary)
        print(f"\nOutputs: {directory}")


def cmd_graph_table(args: argparse.Namespace) -> int:
    """Handle the graph-table command."""
    config = load_config(args.config)
    lam = args.lam if args.lam is not None else config.lam
    if not lam > 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    if args.points < 2 or not args.r_max > args.r_min:
        raise ValidationError("need --points >= 2 and --r-max > --r-min")
    graphs = config.graphs()
    graph = graphs.surface if args.surface else graphs.bulk
    table = graph_table(graph, lam, np.linspace(args.r_min, args.r_max, args.points))
    metadata = {"graph": graph.name, "lambda": f"{lam:g}"}

    if args.output:
        write_graph_table(args.output, table, metadata)
        print(f"Saved to: {args.output}")
    else:
        write_graph_table(sys.stdout, table, metadata)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    """Handle the verify command."""
    outcome = ScenarioRunner().verify(args.directory)

    if args.json:
        print(json.dumps({"matches": outcome.matches, "differences": outcome.differences}))
    else:
        print(outcome.format_summary())
    return 0 if outcome.matches and outcome.report.structural_ok else 1


COMMANDS = {
    "run": cmd_run,
    "sweep-lambda": cmd_sweep,
    "contraction": cmd_contraction,
    "converge": cmd_converge,
    "graph-table": cmd_graph_table,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> NoReturn:
    """Main entry point for the CLI."""
    load_dotenv()
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(0)

    _configure_logging(args.verbose)

    try:
        handler = COMMANDS.get(args.command)
        if handler is None:
            parser.print_help()
            exit_code = 1
        else:
            exit_code = handler(args)

        sys.exit(exit_code)

    except DynboundError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        sys.exit(1)
    except KeyboardInterrupt:
        print("\nAborted.", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
