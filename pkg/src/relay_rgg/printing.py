"""Printing module."""

from __future__ import annotations

import math
import shutil
import sys
import textwrap
from typing import TYPE_CHECKING, Any

from colorama import Fore, Style
from tap.tracker import Tracker

from relay_rgg.logging import Logger

if TYPE_CHECKING:
    from relay_rgg.harness import Check, ExperimentResult, TrendSummary
    from relay_rgg.relay import ValidationReport
    from relay_rgg.stats import Frequency

logger = Logger.get_logger(__name__)


def console_width(default: int = 80) -> int:
    """Return current console width.

    Parameters:
        default: Default value if width cannot be retrieved.

    Returns:
        Console width.
    """
    return shutil.get_terminal_size((default, 20)).columns


def pretty_description(description: str, indent: int = 0) -> str:
    """Wrap text to the console width with an indentation.

    Parameters:
        description: String to format.
        indent: Level of indentation.

    Returns:
        Pretty formatted string.
    """
    indent_str = " " * indent
    wrapper = textwrap.TextWrapper(width=console_width(default=79), initial_indent=indent_str, subsequent_indent=indent_str)
    return "\n".join(wrapper.fill(line) for line in description.strip().split("\n"))


def _number(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}" if math.isfinite(value) else str(value)
    return str(value)


def _rate(rate: Frequency) -> str:
    color = Fore.GREEN if rate.count and rate.value >= 0.5 else Fore.YELLOW  # noqa: PLR2004
    return (
        f"{color}{_number(rate.value)}{Style.RESET_ALL} "
        f"{Style.DIM}({rate.successes}/{rate.count}, 95% CI {rate.low:.4g}-{rate.high:.4g}){Style.RESET_ALL}"
    )


def print_values(title: str, values: dict[str, Any], indent: int = 0) -> None:
    """Print named values under a bold title.

    Parameters:
        title: The title.
        values: The values.
        indent: Indentation.
    """
    print(Style.BRIGHT + " " * indent + title + Style.RESET_ALL)
    for name, value in values.items():
        print(f"{' ' * (indent + 2)}{Fore.MAGENTA}{name}{Style.RESET_ALL}: {_number(value)}")


def print_checks(checks: list[Check], indent: int = 0) -> None:
    """Print checks with their status.

    Parameters:
        checks: The checks.
        indent: Indentation.
    """
    for check in checks:
        status = f"{Fore.GREEN}passed{Style.RESET_ALL}" if check.passed else f"{Fore.RED}failed{Style.RESET_ALL}"
        print(f"{Style.BRIGHT}{' ' * indent}{check.name}: {Style.RESET_ALL}{status}")
        if check.message:
            print(pretty_description(check.message, indent=indent + 2))


def print_result(result: ExperimentResult) -> None:
    """Print the summary of an experiment.

    Parameters:
        result: The experiment result.
    """
    summary = result.summary
    print(f"{Style.BRIGHT}{result.kind.value} experiment{Style.RESET_ALL} {Style.DIM}seed {result.config.seed}{Style.RESET_ALL}")
    print(f"  {Fore.MAGENTA}trials{Style.RESET_ALL}: {summary.count}")
    for name, rate in summary.frequencies.items():
        print(f"  {Fore.MAGENTA}{name}{Style.RESET_ALL}: {_rate(rate)}")
    for name, stats in summary.fields.items():
        if stats.count:
            print(
                f"  {Fore.MAGENTA}{name}{Style.RESET_ALL}: mean {_number(stats.mean)} "
                f"{Style.DIM}[min {_number(stats.min)}, q05 {_number(stats.q05)}, median {_number(stats.median)}, "
                f"q95 {_number(stats.q95)}, max {_number(stats.max)}]{Style.RESET_ALL}",
            )
    if result.bounds:
        print_values("bounds", result.bounds, indent=2)
    print_checks(result.checks, indent=2)


def print_trend(trend: TrendSummary) -> None:
    """Print the points of a trend.

    Parameters:
        trend: The trend summary.
    """
    print(f"{Style.BRIGHT}{trend.experiment} trend of {trend.flag}{Style.RESET_ALL}")
    for point in trend.points:
        print(f"  n={point.n} r_n={point.r_n:.6g} n*r_n^2={point.scale:.6g}: {_rate(point.frequency)}")
    print_checks(trend.checks, indent=2)


def print_validation(report: ValidationReport) -> None:
    """Print the violations of a relay RGG or backbone graph check.

    Parameters:
        report: The report.
    """
    if report.ok:
        print(f"{Fore.GREEN}valid{Style.RESET_ALL}")
        return
    print(f"{Fore.RED}invalid{Style.RESET_ALL}")
    for violation in report.violations:
        print(pretty_description(violation, indent=2))


def output_tap(checks: list[Check], suite: str) -> None:
    """Output checks in TAP format.

    Parameters:
        checks: The checks.
        suite: Test suite name.
    """
    tracker = Tracker(streaming=True, stream=sys.stdout)
    for check in checks:
        if check.passed:
            tracker.add_ok(suite, check.name)
        else:
            message = "\n  message: ".join(check.message.split("\n"))
            tracker.add_not_ok(suite, check.name, diagnostics=f"  ---\n  message: {message}\n  ...")
