"""Module that contains the command line application."""

# Why does this file exist, and why not put this in `__main__`?
#
# You might be tempted to import things from `__main__` later,
# but that will cause problems: the code will get executed twice:
#
# - When you run `python -m relay_rgg` python will execute
#   `__main__.py` as a script. That means there won't be any
#   `relay_rgg.__main__` in `sys.modules`.
# - When you import `__main__` it will get executed again (as a module) because
#   there's no `relay_rgg.__main__` in `sys.modules`.

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Any, NoReturn

import colorama
import numpy as np

from relay_rgg import bounds, config, debug, harness
from relay_rgg.enums import ExitCode, Mode
from relay_rgg.errors import GeometryError, InvariantViolation, ParameterError, RelayRggError
from relay_rgg.geometry import sample_points
from relay_rgg.graphs import build_gloc, build_rgg
from relay_rgg.logging import Logger
from relay_rgg.printing import output_tap, print_result, print_trend, print_validation, print_values
from relay_rgg.relay import ValidationReport, disk_chain, make_circle_chain_params

logger = Logger.get_logger(__name__)

COMMANDS = ("sample", "rgg-stats", "distance", "length", "weight", "trend", "bounds", "validate-gamma")


class _DebugInfo(argparse.Action):
    def __init__(self, nargs: int | str | None = 0, **kwargs: Any) -> None:
        super().__init__(nargs=nargs, **kwargs)

    def __call__(self, *args: Any, **kwargs: Any) -> None:  # noqa: ARG002
        debug.print_debug_info()
        sys.exit(0)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(ExitCode.CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def valid_file(value: str) -> str:
    """Check if given file exists and is a regular file.

    Parameters:
        value: Path to the file.

    Raises:
        ArgumentTypeError: When value not valid.

    Returns:
        Original value argument.
    """
    if not value:
        raise argparse.ArgumentTypeError("'' is not a valid file path")
    if not os.path.exists(value):
        raise argparse.ArgumentTypeError(f"{value} is not a valid file path")
    if os.path.isdir(value):
        raise argparse.ArgumentTypeError(f"{value} is a directory, not a regular file")
    return value


def valid_level(value: str) -> str:
    """Validate the logging level argument for the parser.

    Parameters:
        value: The value provided on the command line.

    Raises:
        ArgumentTypeError: When value not valid.

    Returns:
        The validated level.
    """
    value = value.upper()
    if getattr(logging, value, None) is None:
        raise argparse.ArgumentTypeError(f"{value} is not a valid level")
    return value


def _int_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.replace(",", " ").split()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"{value!r} is not a list of integers") from error


def _experiment_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    group = options.add_argument_group("experiment options", "Each option overrides the configuration key of the same name.")
    group.add_argument("-c", "--config", type=valid_file, dest="config_file", metavar="FILE", help="Configuration file to use.")
    group.add_argument("--no-config", action="store_true", help="Do not search for a configuration file.")
    group.add_argument("--n", type=int, help="Number of random points.")
    group.add_argument("--rn", type=float, help="Adjacency distance.")
    group.add_argument("--beta", type=float, help="Adjacency distance n^-beta.")
    group.add_argument("--rn-scale", type=float, dest="rn_scale", help="Adjacency distance scale*sqrt(log n / n).")
    group.add_argument("--alpha", type=float, help="Backbone size exponent, for regime warnings.")
    group.add_argument("--gamma-file", type=valid_file, dest="gamma_file", metavar="FILE", help="Backbone graph file.")
    group.add_argument("--gamma-builtin", dest="gamma_builtin", metavar="SHAPE", help="'segment d', 'star k [length]' or 'parallel m'.")
    group.add_argument("--density-file", type=valid_file, dest="density_file", metavar="FILE", help="Piecewise-constant density.")
    group.add_argument("--d", type=float, help="Separation of a synthesized vertex pair.")
    group.add_argument("--mode", choices=[mode.value for mode in Mode], help="Circle-chain slack mode.")
    group.add_argument("--eps", type=float, help="Ratio slack.")
    group.add_argument("--Ln", type=int, help="Hop budget.")
    group.add_argument("--Ln-mult", type=float, dest="Ln_mult", help="Hop budget as a multiple of ceil(l_up / r_n).")
    group.add_argument("--M", type=float, help="Weight threshold factor, above 2.")
    group.add_argument("--trials", type=int, help="Number of trials.")
    group.add_argument("--seed", type=int, help="Master seed.")
    group.add_argument("--out", metavar="DIR", help="Output directory.")
    group.add_argument("--D", "--C", type=float, dest="constant", help="Constant of the bound formulas.")
    group.add_argument("--a", type=float, dest="a_exponent", help="Exponent of the weight failure bound.")
    group.add_argument("--trend-n", type=_int_list, dest="trend_n", metavar="N,N,...", help="Point counts of a trend.")
    group.add_argument("--trend-experiment", dest="trend_experiment", choices=config.EXPERIMENTS, help="Experiment of a trend.")
    group.add_argument("--min-success-rate", type=float, dest="min_success_rate", help="Threshold of the rate checks.")
    return options


OVERRIDE_KEYS = (
    "n",
    "rn",
    "beta",
    "rn_scale",
    "alpha",
    "gamma_file",
    "gamma_builtin",
    "density_file",
    "d",
    "mode",
    "eps",
    "Ln",
    "Ln_mult",
    "M",
    "trials",
    "seed",
    "out",
    "constant",
    "a_exponent",
    "trend_n",
    "trend_experiment",
    "min_success_rate",
)


def get_parser() -> argparse.ArgumentParser:
    """Return the CLI argument parser.

    Returns:
        An argparse parser.
    """
    parser = _Parser(
        prog="relay-rgg",
        add_help=False,
        description="Relay paths in random geometric graphs: constructions, bounds and Monte Carlo experiments.",
    )
    parser.add_argument("-h", "--help", action="help", default=argparse.SUPPRESS, help="Show this help message and exit.")
    parser.add_argument("--no-color", action="store_true", default=False, help="Do not use colors. Default: false.")
    parser.add_argument("--tap", action="store_true", default=False, help="Also output checks in TAP format.")
    parser.add_argument(
        "-v",
        "--verbose-level",
        action="store",
        dest="level",
        type=valid_level,
        default="ERROR",
        help="Level of verbosity.",
    )
    parser.add_argument(
        "-V",
        "--version",
        action="version",
        version=f"relay-rgg {debug.get_version()}",
        help="Show the current version of the program and exit.",
    )
    parser.add_argument("--debug-info", action=_DebugInfo, help="Print debug information.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    parent = _experiment_options()
    helps = {
        "sample": "Sample points and write them as CSV.",
        "rgg-stats": "Print statistics of one random geometric graph.",
        "distance": "Run the relay distance experiment.",
        "length": "Run the relay RGG size experiment.",
        "weight": "Run the maximum-weight relay RGG experiment.",
        "trend": "Run an experiment over increasing n.",
        "bounds": "Evaluate the bound formulas.",
        "validate-gamma": "Check a backbone graph and its circle chains.",
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[parent], help=helps[command], description=helps[command])
    return parser


def _load(opts: argparse.Namespace) -> config.ExperimentConfig:
    overrides = {key: getattr(opts, key, None) for key in OVERRIDE_KEYS}
    config_file = opts.config_file
    if config_file is None and not opts.no_config:
        logger.info("No configuration file specified, searching")
        config_file = config.find()
    return config.load_config(config_file, overrides)


def _sample(cfg: config.ExperimentConfig) -> int:
    points = sample_points(cfg.n, cfg.density(), harness.trial_rng(cfg.seed, 0, harness.POINTS_STREAM))
    path = Path(cfg.out) / f"sample-{cfg.seed}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("index", "x", "y"))
        writer.writerows((index, repr(float(x)), repr(float(y))) for index, (x, y) in enumerate(points.coords))
    print_values("sample", {"points": points.n, "output": str(path)})
    return ExitCode.OK


def rgg_stats(cfg: config.ExperimentConfig) -> dict[str, Any]:
    """Compute statistics of the first trial's graph.

    Parameters:
        cfg: The configuration.

    Returns:
        Vertex and edge counts, mean degree and isolated vertices.
    """
    r_n = cfg.resolve_rn()
    points = sample_points(cfg.n, cfg.density(), harness.trial_rng(cfg.seed, 0, harness.POINTS_STREAM))
    rgg = build_rgg(points, r_n)
    degrees = np.bincount(rgg.edges.ravel(), minlength=points.n)
    stats: dict[str, Any] = {
        "vertices": points.n,
        "r_n": r_n,
        "edges": len(rgg.edges),
        "mean_degree": float(degrees.mean()) if points.n else 0.0,
        "isolated": int((degrees == 0).sum()),
    }
    try:
        gamma = cfg.gamma()
    except RelayRggError:
        return stats
    stats["backbone_edges"] = len(build_gloc(rgg, gamma).backbone_edges)
    return stats


def bound_values(cfg: config.ExperimentConfig) -> dict[str, Any]:
    """Evaluate every bound formula at the configured parameters.

    Parameters:
        cfg: The configuration.

    Returns:
        The named values.
    """
    n, r_n, constant = cfg.n, cfg.resolve_rn(), cfg.constant
    try:
        gamma = cfg.gamma()
    except RelayRggError:
        gamma = None
    e0, v0 = (gamma.e0, gamma.v0) if gamma else (1, 2)
    budget = cfg.resolve_Ln(gamma, r_n) if gamma else (cfg.Ln or 1)
    tails = bounds.tail_bound_calculators(n, r_n, e0, budget, constant, constant, cfg.a_exponent)
    values: dict[str, Any] = {
        "ratio_event_failure": bounds.ratio_event_bound(n, r_n, constant),
        "ratio_length_failure": tails.ratio_length,
        "two_point_length_failure": tails.two_point_length,
        "weight_failure": tails.weight,
        "delta_n": tails.delta_n,
        "ratio_radius_floor": bounds.ratio_radius_floor(n, cfg.M),
        "eup_failure": bounds.eup_failure_bound(n, v0, cfg.M).value,
    }
    d = cfg.d if cfg.d is not None else (gamma.lengths[0] if gamma and gamma.e0 else None)
    if d is not None:
        two_point = bounds.two_point_event_bound(n, r_n, float(d), constant)
        values["two_point_event_failure"] = two_point.value
        if two_point.specialized_applies:
            values["two_point_specialized"] = two_point.specialized
    return values


def validate_gamma(cfg: config.ExperimentConfig) -> ValidationReport:
    """Check that every backbone edge admits a circle chain inside the unit square.

    Parameters:
        cfg: The configuration.

    Returns:
        The report; empty without an adjacency distance.
    """
    gamma = cfg.gamma()
    print_values(gamma.name, {"v0": gamma.v0, "e0": gamma.e0, "l0": gamma.l0, "l_up": gamma.l_up, "l_tot": gamma.l_tot})
    report = ValidationReport()
    try:
        r_n = cfg.resolve_rn()
    except RelayRggError:
        return report
    for edge, (a, b) in enumerate(gamma.edges):
        try:
            params = make_circle_chain_params(gamma.length(edge) / r_n, cfg.mode, cfg.eps)
            disk_chain(gamma.vertices[a], gamma.vertices[b], params, r_n)
        except (ParameterError, GeometryError) as error:
            report.violations.append(f"edge {edge}: {error}")
    return report


def _experiment(command: str, cfg: config.ExperimentConfig, tap: bool) -> int:  # noqa: FBT001
    if command == "trend":
        trend = harness.run_trend_experiment(harness.trend_configs(cfg), cfg.trend_experiment)
        for result in trend.results:
            harness.write_outputs(result, Path(cfg.out) / f"trend-{cfg.seed}" / f"n{result.config.n}")
        print_trend(trend)
        if tap:
            output_tap(trend.checks, f"{trend.experiment} trend")
        return ExitCode.OK
    result = harness.EXPERIMENTS[command](cfg)
    harness.write_outputs(result)
    print_result(result)
    if tap:
        output_tap(result.checks, f"{command} experiment")
    return ExitCode.OK


def dispatch(command: str, cfg: config.ExperimentConfig, tap: bool = False) -> int:  # noqa: FBT001, FBT002
    """Run a subcommand.

    Parameters:
        command: The subcommand.
        cfg: The configuration.
        tap: Whether to output checks as TAP.

    Returns:
        An exit code.
    """
    if command == "sample":
        return _sample(cfg)
    if command == "rgg-stats":
        print_values("rgg-stats", rgg_stats(cfg))
        return ExitCode.OK
    if command == "bounds":
        print_values("bounds", bound_values(cfg))
        return ExitCode.OK
    if command == "validate-gamma":
        report = validate_gamma(cfg)
        print_validation(report)
        return ExitCode.OK if report.ok else ExitCode.CONFIG_ERROR
    return _experiment(command, cfg, tap)


def main(args: list[str] | None = None) -> int:
    """Run the main program.

    This function is executed when you type `relay-rgg` or `python -m relay_rgg`.

    Parameters:
        args: Arguments passed from the command line.

    Returns:
        An exit code: 0 on success, 1 on configuration or validation errors,
        2 when a deterministic invariant is violated, 130 when interrupted.
    """
    parser = get_parser()
    opts = parser.parse_args(args=args)
    Logger.set_level(opts.level)

    colorama_args = {"autoreset": True}
    if opts.no_color:
        colorama_args["strip"] = True
    colorama.init(**colorama_args)

    try:
        cfg = _load(opts)
        logger.debug(f"Configuration = {cfg}")
        return dispatch(opts.command, cfg, tap=opts.tap)
    except InvariantViolation as error:
        print(f"relay-rgg: invariant violated: {error}", file=sys.stderr)
        return ExitCode.INVARIANT_VIOLATION
    except RelayRggError as error:
        print(f"relay-rgg: error: {error}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR
    except KeyboardInterrupt:
        logger.info("Keyboard interruption, aborting")
        return ExitCode.INTERRUPTED
