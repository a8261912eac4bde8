"""Harness module.

Seeded Monte Carlo experiments: every trial draws its own points (and
weights) from streams derived from the master seed and the trial index,
trials run on a thread pool, and records are aggregated in trial order so
that outputs do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from relay_rgg import bounds
from relay_rgg.config import ExperimentConfig
from relay_rgg.enums import Mode, RecordKind
from relay_rgg.errors import ConstructionFailure, ExperimentError, GeometryError, InvariantViolation, ParameterError
from relay_rgg.geometry import PointSet, sample_points
from relay_rgg.graphs import DetGraph, GLocGraph, build_gloc, build_rgg, check_distance_events
from relay_rgg.logging import Logger
from relay_rgg.relay import (
    CircleChainParams,
    RelayRgg,
    build_relay_rgg,
    disk_chain,
    length_bounds,
    make_circle_chain_params,
)
from relay_rgg.stats import FieldStats, Frequency, describe, frequency
from relay_rgg.weights import assign_weights, build_max_weight_relay_rgg, check_eup

logger = Logger.get_logger(__name__)

POINTS_STREAM = 0
WEIGHTS_STREAM = 1
MAX_WEIGHT_CV = 0.5

Sampler = Callable[[int, np.random.Generator], PointSet]

COLUMNS = {
    RecordKind.DISTANCE: ("trial", "d_gr", "d_euclid", "d_uv", "reachable", "E_uv", "F_uv"),
    RecordKind.LENGTH: (
        "trial",
        "success",
        "failed_edge",
        "failed_slot",
        "lower",
        "achieved",
        "achieved_ratio",
        "additive_holds",
        "ratio_holds",
        "chain_bound_holds",
        "sandwich_holds",
    ),
    RecordKind.WEIGHT: (
        "trial",
        "success",
        "failed_edge",
        "failed_slot",
        "L_n",
        "delta_n",
        "lower_achieved",
        "upper_cert",
        "lower_ratio",
        "upper_ratio",
        "eup_holds",
        "max_weight",
        "min_hop_weight",
        "min_hop_ratio",
        "min_occupancy",
        "median_hop_weight",
    ),
}


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one trial, flattened into named values."""

    kind: RecordKind
    trial: int
    values: dict[str, Any]
    wall_time: float = field(default=0.0, compare=False)

    def row(self) -> list[str]:
        """Return the CSV cells of the record.

        Returns:
            The cells in column order.
        """
        return [_cell(self.trial if column == "trial" else self.values.get(column)) for column in COLUMNS[self.kind]]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else ("inf" if value > 0 else "nan")
    return str(value)


@dataclass(frozen=True)
class SummaryStats:
    """Aggregate of homogeneous trial records."""

    kind: RecordKind | None
    count: int
    fields: dict[str, FieldStats]
    frequencies: dict[str, Frequency]


def summarize(records: list[TrialRecord]) -> SummaryStats:
    """Aggregate records after sorting them by trial index.

    Boolean values become frequencies with Wilson intervals; other numeric
    values are described by mean, variance, extremes and quantiles.

    Parameters:
        records: The records.

    Raises:
        ExperimentError: When records of different kinds are mixed.

    Returns:
        The summary.
    """
    kinds = {record.kind for record in records}
    if len(kinds) > 1:
        raise ExperimentError(f"cannot summarize mixed record kinds: {sorted(kind.value for kind in kinds)}")
    ordered = sorted(records, key=lambda record: record.trial)
    kind = kinds.pop() if kinds else None
    numbers: dict[str, list[float]] = {}
    flags: dict[str, list[bool]] = {}
    for record in ordered:
        for name, value in record.values.items():
            if isinstance(value, (bool, np.bool_)):
                flags.setdefault(name, []).append(bool(value))
            elif isinstance(value, (int, float)):
                numbers.setdefault(name, []).append(float(value))
    return SummaryStats(
        kind=kind,
        count=len(ordered),
        fields={name: describe(values) for name, values in numbers.items()},
        frequencies={name: frequency(values) for name, values in flags.items()},
    )


@dataclass(frozen=True)
class Check:
    """A named statistical acceptance check."""

    name: str
    passed: bool
    message: str = ""


@dataclass
class ExperimentResult:
    """Records, summary, bound values and checks of an experiment."""

    kind: RecordKind
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: SummaryStats
    bounds: dict[str, Any] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def name(self) -> str:
        """Base name of the output files."""
        return f"{self.kind.value}-{self.config.seed}"


def trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    """Return the generator of one stream of one trial.

    Parameters:
        seed: Master seed.
        trial: Trial index.
        stream: Stream tag.

    Returns:
        A generator depending only on the three values.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, trial, stream]))


def trial_weight_seed(seed: int, trial: int) -> int:
    """Return the weight-assignment seed of a trial.

    Parameters:
        seed: Master seed.
        trial: Trial index.

    Returns:
        A 64-bit seed.
    """
    return int(np.random.SeedSequence([seed, trial, WEIGHTS_STREAM]).generate_state(1, dtype=np.uint64)[0])


def run_trials(function: Callable[[int], TrialRecord], trials: int, threads: int = 1) -> list[TrialRecord]:
    """Run trials on a thread pool and return their records by trial index.

    Parameters:
        function: Trial function.
        trials: Number of trials.
        threads: Maximum number of worker threads.

    Returns:
        The records.
    """
    if trials <= 0:
        return []

    def timed(trial: int) -> TrialRecord:
        start = time.perf_counter()
        record = function(trial)
        logger.debug(f"Trial {trial} done")
        return replace(record, wall_time=time.perf_counter() - start)

    with ThreadPoolExecutor(max_workers=max(1, min(threads, trials))) as executor:
        records = list(executor.map(timed, range(trials)))
    return sorted(records, key=lambda record: record.trial)


def _gloc(config: ExperimentConfig, gamma: DetGraph, r_n: float, trial: int, sampler: Sampler | None) -> GLocGraph:
    rng = trial_rng(config.seed, trial, POINTS_STREAM)
    points = sampler(trial, rng) if sampler else sample_points(config.n, config.density(), rng)
    return build_gloc(build_rgg(points, r_n), gamma)


def _endpoints(gamma: DetGraph) -> tuple[int, int]:
    if gamma.e0:
        return gamma.edges[0]
    if gamma.v0 < 2:  # noqa: PLR2004
        raise ExperimentError("the distance experiment needs two backbone vertices")
    return 0, 1


def _threads(config: ExperimentConfig, threads: int | None) -> int:
    return config.threads() if threads is None else threads


def _rate_check(name: str, rate: Frequency, minimum: float | None) -> list[Check]:
    if minimum is None or not rate.count:
        return []
    passed = rate.value >= minimum
    return [Check(name, passed, f"{rate.value:.4g} (95% CI {rate.low:.4g}-{rate.high:.4g}) vs minimum {minimum:.4g}")]


def run_distance_experiment(
    config: ExperimentConfig,
    *,
    sampler: Sampler | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Measure the relay distance between two backbone vertices over fresh point sets.

    The pair is the first backbone edge (or the first two vertices).

    Parameters:
        config: The configuration.
        sampler: Replaces random sampling with a fixed point-set factory.
        threads: Worker count, by default from the environment.

    Returns:
        The result.
    """
    gamma = config.gamma()
    r_n = config.resolve_rn()
    u, v = _endpoints(gamma)

    def trial(index: int) -> TrialRecord:
        outcome = check_distance_events(_gloc(config, gamma, r_n, index, sampler), u, v, config.eps)
        return TrialRecord(RecordKind.DISTANCE, index, {
            "d_gr": outcome.d_gr,
            "d_euclid": outcome.d_euclid,
            "d_uv": outcome.d_uv,
            "reachable": outcome.reachable,
            "E_uv": outcome.E_uv,
            "F_uv": outcome.F_uv,
        })

    records = run_trials(trial, config.trials, _threads(config, threads))
    summary = summarize(records)
    d = gamma.vertices[u].distance(gamma.vertices[v])
    two_point = bounds.two_point_event_bound(config.n, r_n, d, config.constant) if config.n else None
    result = ExperimentResult(RecordKind.DISTANCE, config, records, summary)
    if config.n:
        result.bounds = {
            "r_n": r_n,
            "ratio_event_failure": bounds.ratio_event_bound(config.n, r_n, config.constant),
            "two_point_event_failure": two_point.value if two_point else None,
            "two_point_specialized": two_point.specialized if two_point and two_point.specialized_applies else None,
        }
    if "F_uv" in summary.frequencies:
        result.checks = _rate_check("two-point event frequency", summary.frequencies["F_uv"], config.min_success_rate)
    return result


def _circle_chains(
    config: ExperimentConfig,
    gamma: DetGraph,
    r_n: float,
) -> tuple[list[CircleChainParams], int | None]:
    """Return the chain parameters of the backbone edges, up to the first edge that cannot carry one.

    Parameters:
        config: The configuration.
        gamma: The backbone graph.
        r_n: Adjacency distance.

    Raises:
        ParameterError: When ratio mode has no positive `eps`.

    Returns:
        The parameters of the feasible edges, and the index of the infeasible edge, if any.
    """
    if config.mode is Mode.RATIO and not config.eps > 0:
        raise ParameterError(f"ratio mode needs eps > 0, got {config.eps!r}")
    chains = []
    for edge, (a, b) in enumerate(gamma.edges):
        try:
            params = make_circle_chain_params(gamma.length(edge) / r_n, config.mode, config.eps)
            disk_chain(gamma.vertices[a], gamma.vertices[b], params, r_n)
        except (ParameterError, GeometryError) as error:
            logger.warning(f"Edge {edge} cannot carry a circle chain, every trial fails: {error}")
            return chains, edge
        chains.append(params)
    return chains, None


def run_length_experiment(
    config: ExperimentConfig,
    *,
    sampler: Sampler | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Build circle-chain relay RGGs and compare their size with `l_tot / r_n`.

    An edge too short for a circle chain, or whose disks leave the unit square,
    makes every trial fail on that edge without a slot.

    Parameters:
        config: The configuration.
        sampler: Replaces random sampling with a fixed point-set factory.
        threads: Worker count, by default from the environment.

    Raises:
        InvariantViolation: When a construction breaks the size bound of its mode.

    Returns:
        The result.
    """
    gamma = config.gamma()
    r_n = config.resolve_rn()
    chains, infeasible = _circle_chains(config, gamma, r_n)

    def trial(index: int) -> TrialRecord:
        rr: RelayRgg | None = None
        failed_edge: int | None = infeasible
        failed_slot: int | None = None
        if infeasible is None:
            gloc = _gloc(config, gamma, r_n, index, sampler)
            try:
                rr = build_relay_rgg(gloc, gamma, config.mode, config.eps)
            except ConstructionFailure as error:
                logger.info(f"Trial {index}: {error}")
                failed_edge, failed_slot = error.edge, error.slot
        estimate = length_bounds(rr, gamma, r_n, config.mode, config.eps)
        if estimate.success and config.mode is Mode.TWO_POINT and not estimate.additive_holds:
            raise InvariantViolation(f"trial {index}: {estimate.achieved} edges exceed {estimate.lower} + 2 e0")
        if estimate.success and config.mode is Mode.RATIO and not estimate.chain_bound_holds:
            raise InvariantViolation(f"trial {index}: {estimate.achieved} edges exceed {estimate.lower} (1 + eps) + e0")
        return TrialRecord(RecordKind.LENGTH, index, {
            "success": estimate.success,
            "failed_edge": failed_edge,
            "failed_slot": failed_slot,
            "lower": estimate.lower,
            "achieved": estimate.achieved if estimate.success else None,
            "achieved_ratio": estimate.achieved / estimate.lower if estimate.success else None,
            "additive_holds": estimate.additive_holds,
            "ratio_holds": estimate.ratio_holds,
            "chain_bound_holds": estimate.chain_bound_holds,
            "sandwich_holds": estimate.sandwich_holds,
        })

    records = run_trials(trial, config.trials, _threads(config, threads))
    summary = summarize(records)
    result = ExperimentResult(RecordKind.LENGTH, config, records, summary)
    if config.n > 1:
        tails = bounds.tail_bound_calculators(config.n, r_n, gamma.e0, 1, config.constant, config.constant)
        eps1 = config.density().eps1
        chain_failure = sum(
            bounds.circle_chain_failure_bound(config.n, r_n, params.K, params.gamma, eps1) for params in chains
        )
        result.bounds = {
            "r_n": r_n,
            "ratio_length_failure": tails.ratio_length,
            "two_point_length_failure": tails.two_point_length,
            "circle_chain_failure": 1.0 if infeasible is not None else min(1.0, chain_failure),
        }
        if infeasible is not None:
            result.bounds["infeasible_edge"] = infeasible
    success = summary.frequencies.get("success")
    if success is not None:
        result.checks = _rate_check("construction success rate", success, config.min_success_rate)
        if success.count and success.successes < success.count:
            exponent = config.n * r_n**2 if config.mode is Mode.RATIO else config.n * r_n**4
            result.bounds["implied_constant"] = bounds.implied_constant(1 - success.value, exponent)
    return result


def run_weight_experiment(
    config: ExperimentConfig,
    *,
    sampler: Sampler | None = None,
    threads: int | None = None,
) -> ExperimentResult:
    """Build greedy maximum-weight relay RGGs and compare their weight with `e0 L_n log n`.

    Parameters:
        config: The configuration.
        sampler: Replaces random sampling with a fixed point-set factory.
        threads: Worker count, by default from the environment.

    Returns:
        The result.
    """
    gamma = config.gamma()
    r_n = config.resolve_rn()
    budget = config.resolve_Ln(gamma, r_n)

    def trial(index: int) -> TrialRecord:
        gloc = _gloc(config, gamma, r_n, index, sampler)
        weights = assign_weights(trial_weight_seed(config.seed, index))
        log_n = math.log(max(gloc.n, 2))
        values: dict[str, Any] = {"L_n": budget}
        try:
            built = build_max_weight_relay_rgg(gloc, weights, gamma, budget, config.M)
        except ConstructionFailure as error:
            logger.info(f"Trial {index}: {error}")
            eup_holds, largest = check_eup(gloc, weights, config.M, max(gloc.n, 2))
            values.update(success=False, failed_edge=error.edge, failed_slot=error.slot, eup_holds=eup_holds, max_weight=largest)
            return TrialRecord(RecordKind.WEIGHT, index, values)
        estimate = built.estimate
        chosen = np.concatenate([result.hop_weights[:-1] for result in built.greedy.values()])
        median = float(np.median(chosen)) if chosen.size else None
        values.update(
            success=True,
            delta_n=estimate.delta_n,
            lower_achieved=estimate.lower_achieved,
            upper_cert=estimate.upper_cert,
            lower_ratio=estimate.lower_ratio,
            upper_ratio=estimate.upper_ratio,
            eup_holds=estimate.eup_holds,
            max_weight=estimate.max_weight,
            min_hop_weight=estimate.min_hop_weight,
            min_hop_ratio=estimate.min_hop_weight / log_n,
            min_occupancy=estimate.min_occupancy,
            median_hop_weight=median,
        )
        return TrialRecord(RecordKind.WEIGHT, index, values)

    records = run_trials(trial, config.trials, _threads(config, threads))
    summary = summarize(records)
    result = ExperimentResult(RecordKind.WEIGHT, config, records, summary)
    if config.n > 1:
        tails = bounds.tail_bound_calculators(config.n, r_n, gamma.e0, budget, a=config.a_exponent)
        eup = bounds.eup_failure_bound(config.n, gamma.v0, config.M)
        result.bounds = {
            "r_n": r_n,
            "L_n": budget,
            "delta_n": tails.delta_n,
            "weight_failure": tails.weight,
            "eup_failure": eup.value,
            "eup_failure_simplified": eup.simplified,
        }
    result.checks = _weight_checks(summary, records)
    success = summary.frequencies.get("success")
    if success is not None:
        result.checks += _rate_check("construction success rate", success, config.min_success_rate)
    return result


def _weight_checks(summary: SummaryStats, records: list[TrialRecord]) -> list[Check]:
    ratio = summary.fields.get("lower_ratio")
    if ratio is None or not ratio.count:
        return []
    checks = [
        Check("weight ratio is positive", ratio.min > 0, f"minimum lower_achieved / delta_n = {ratio.min:.4g}"),
        Check(
            "weight ratio is stable",
            ratio.count < 2 or ratio.coefficient_of_variation <= MAX_WEIGHT_CV,  # noqa: PLR2004
            f"coefficient of variation {ratio.coefficient_of_variation:.4g}",
        ),
    ]
    successes = [record for record in records if record.values.get("success")]
    medians = [record.values["median_hop_weight"] for record in successes if record.values.get("median_hop_weight") is not None]
    if medians:
        m = max(1, min(record.values["min_occupancy"] for record in successes))
        pooled = float(np.median(medians))
        reference = bounds.max_exponential_median(m)
        checks.append(Check("per-hop weight law", pooled >= reference, f"median hop weight {pooled:.4g} vs {reference:.4g} (m={m})"))
    return checks


EXPERIMENTS: dict[str, Callable[..., ExperimentResult]] = {
    "distance": run_distance_experiment,
    "length": run_length_experiment,
    "weight": run_weight_experiment,
}
TREND_FLAGS = {"distance": "F_uv", "length": "success", "weight": "success"}


@dataclass(frozen=True)
class TrendPoint:
    """Frequency of the tracked event at one configuration."""

    n: int
    r_n: float
    scale: float
    frequency: Frequency


@dataclass
class TrendSummary:
    """Tracked frequencies over configurations of increasing `n r_n^2`."""

    experiment: str
    flag: str
    points: list[TrendPoint]
    results: list[ExperimentResult] = field(default_factory=list, repr=False)

    @property
    def non_decreasing(self) -> bool:
        """Whether each frequency is at least the previous one or their intervals overlap."""
        return all(
            after.frequency.value >= before.frequency.value or after.frequency.overlaps(before.frequency)
            for before, after in zip(self.points, self.points[1:])
        )

    @property
    def checks(self) -> list[Check]:
        """The trend check."""
        values = ", ".join(f"{point.frequency.value:.4g}" for point in self.points)
        return [Check(f"{self.flag} frequency is non-decreasing", self.non_decreasing, values)]


def trend_configs(config: ExperimentConfig) -> list[ExperimentConfig]:
    """Expand the `trend_n` list of a configuration into one configuration per `n`.

    Parameters:
        config: The base configuration.

    Returns:
        The configurations.
    """
    return [replace(config, n=n) for n in config.trend_n]


def run_trend_experiment(
    configs: list[ExperimentConfig],
    experiment: str = "distance",
    *,
    threads: int | None = None,
) -> TrendSummary:
    """Run one experiment over configurations of increasing `n r_n^2`.

    Parameters:
        configs: The configurations.
        experiment: Which experiment to run.
        threads: Worker count, by default from the environment.

    Raises:
        ExperimentError: With fewer than two configurations or a decreasing `n r_n^2`.

    Returns:
        The trend summary.
    """
    if len(configs) < 2:  # noqa: PLR2004
        raise ExperimentError("a trend needs at least two configurations")
    radii = [config.resolve_rn() for config in configs]
    scales = [config.n * r_n**2 for config, r_n in zip(configs, radii)]
    if any(after < before for before, after in zip(scales, scales[1:])):
        raise ExperimentError(f"configurations must have non-decreasing n r_n^2, got {[f'{s:.4g}' for s in scales]}")
    flag = TREND_FLAGS[experiment]
    summary = TrendSummary(experiment, flag, [])
    for config, r_n, scale in zip(configs, radii, scales):
        logger.info(f"Trend point n={config.n}, r_n={r_n:.6g}")
        result = EXPERIMENTS[experiment](config, threads=threads)
        rate = result.summary.frequencies.get(flag, frequency([]))
        summary.points.append(TrendPoint(config.n, r_n, scale, rate))
        summary.results.append(result)
    return summary


def records_csv(records: list[TrialRecord], kind: RecordKind) -> str:
    """Render records as CSV text with the stable columns of their kind.

    Parameters:
        records: The records.
        kind: Their kind.

    Returns:
        The CSV text.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS[kind])
    for record in sorted(records, key=lambda record: record.trial):
        writer.writerow(record.row())
    return buffer.getvalue()


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, (Mode, RecordKind)):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def summary_json(result: ExperimentResult) -> str:
    """Render the summary sidecar of an experiment.

    Parameters:
        result: The experiment result.

    Returns:
        JSON text with the configuration, statistics, frequencies, bounds and checks.
    """
    frequencies = {
        name: {"value": rate.value, "low": rate.low, "high": rate.high, "successes": rate.successes, "count": rate.count}
        for name, rate in result.summary.frequencies.items()
    }
    document = {
        "experiment": result.kind,
        "config": asdict(result.config),
        "count": result.summary.count,
        "fields": {name: asdict(stats) for name, stats in result.summary.fields.items()},
        "frequencies": frequencies,
        "bounds": result.bounds,
        "checks": [asdict(check) for check in result.checks],
    }
    return json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n"


def write_outputs(result: ExperimentResult, out: str | Path | None = None) -> tuple[Path, Path]:
    """Write `<experiment>-<seed>.csv` and `<experiment>-<seed>.summary.json`.

    Parameters:
        result: The experiment result.
        out: Output directory, by default the configured one.

    Returns:
        The paths of both files.
    """
    directory = Path(out if out is not None else result.config.out)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{result.name}.csv"
    json_path = directory / f"{result.name}.summary.json"
    csv_path.write_text(records_csv(result.records, result.kind))
    json_path.write_text(summary_json(result))
    logger.info(f"Wrote {csv_path} and {json_path}")
    return csv_path, json_path

