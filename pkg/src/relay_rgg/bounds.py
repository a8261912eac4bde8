"""Bounds module.

Closed-form failure-probability bounds for the distance, length and weight
results, and an exact tail oracle for sums of independent Bernoulli
variables used to check the concentration inequality they rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from relay_rgg.errors import InstanceTooLargeError, ParameterError
from relay_rgg.logging import Logger
from relay_rgg.relay import DISK_SCALE

logger = Logger.get_logger(__name__)

EXACT_TAIL_LIMIT = 30
TIE_TOLERANCE = 1e-12


def _positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class BernoulliSumSpec:
    """A sum of independent Bernoulli variables with success probabilities `p_list`."""

    p_list: tuple[float, ...]

    def __post_init__(self) -> None:
        probabilities = tuple(float(p) for p in self.p_list)
        if not probabilities or not all(0 < p <= 1 for p in probabilities):
            raise ParameterError("success probabilities must lie in (0, 1]")
        object.__setattr__(self, "p_list", probabilities)

    @classmethod
    def identical(cls, m: int, p: float) -> BernoulliSumSpec:
        """Return the sum of `m` variables of parameter `p`.

        Parameters:
            m: Number of variables.
            p: Success probability.

        Returns:
            The specification.
        """
        return cls((p,) * m)

    @property
    def m(self) -> int:
        """Number of variables."""
        return len(self.p_list)

    @property
    def mu(self) -> float:
        """Mean of the sum."""
        return math.fsum(self.p_list)


def chernoff_upper(mu: float, eps: float) -> float:
    """Two-sided Chernoff bound `exp(-eps^2 mu / 4)` on `P(|T - mu| >= eps mu)`.

    Parameters:
        mu: Mean of the sum.
        eps: Relative deviation, in (0, 1/2].

    Raises:
        ParameterError: When an input is out of range.

    Returns:
        The bound.
    """
    if not 0 < eps <= 0.5:  # noqa: PLR2004
        raise ParameterError(f"eps must lie in (0, 1/2], got {eps!r}")
    _positive(mu=mu)
    return math.exp(-(eps**2) * mu / 4)


def exact_two_sided_tail(spec: BernoulliSumSpec, eps: float) -> float:
    """Exact `P(|T - mu| >= eps mu)` from the distribution of the sum.

    Parameters:
        spec: The Bernoulli sum.
        eps: Relative deviation.

    Raises:
        InstanceTooLargeError: When the sum has more than 30 terms.

    Returns:
        The probability.
    """
    if spec.m > EXACT_TAIL_LIMIT:
        raise InstanceTooLargeError(f"exact tails are limited to {EXACT_TAIL_LIMIT} terms, got {spec.m}")
    distribution = np.ones(1)
    for p in spec.p_list:
        distribution = np.convolve(distribution, [1 - p, p])
    values = np.arange(spec.m + 1)
    far = np.abs(values - spec.mu) >= eps * spec.mu - TIE_TOLERANCE
    return float(min(1.0, distribution[far].sum()))


def degenerate_window(mu: float, eps: float) -> bool:
    """Tell whether no integer lies strictly between `mu (1 - eps)` and `mu (1 + eps)`.

    In that case every outcome deviates by at least `eps mu` and the tail is 1.

    Parameters:
        mu: Mean.
        eps: Relative deviation.

    Returns:
        True if the window holds no integer.
    """
    low, high = mu * (1 - eps), mu * (1 + eps)
    first = math.floor(low + TIE_TOLERANCE) + 1
    return first >= high - TIE_TOLERANCE


class ChernoffCell(NamedTuple):
    """One cell of the Chernoff validity grid."""

    m: int
    p: float
    eps: float
    exact: float
    bound: float
    degenerate: bool

    @property
    def violated(self) -> bool:
        """Whether the exact tail exceeds the bound."""
        return self.exact > self.bound + TIE_TOLERANCE


@dataclass
class ChernoffReport:
    """Result of a Chernoff validity sweep."""

    cells: list[ChernoffCell] = field(default_factory=list)

    @property
    def violations(self) -> list[ChernoffCell]:
        """Non-degenerate cells where the bound fails."""
        return [cell for cell in self.cells if cell.violated and not cell.degenerate]

    @property
    def degenerate(self) -> list[ChernoffCell]:
        """Cells whose deviation window holds no integer."""
        return [cell for cell in self.cells if cell.degenerate]


def chernoff_violations(
    ms: range | list[int] = range(1, EXACT_TAIL_LIMIT + 1),
    ps: tuple[float, ...] = (0.2, 0.5, 0.8),
    epss: tuple[float, ...] = (0.1, 0.25, 0.5),
) -> ChernoffReport:
    """Compare the exact tail with the Chernoff bound on a grid of identical-probability sums.

    Parameters:
        ms: Term counts.
        ps: Success probabilities.
        epss: Relative deviations.

    Returns:
        The report.
    """
    report = ChernoffReport()
    for m in ms:
        for p in ps:
            spec = BernoulliSumSpec.identical(m, p)
            for eps in epss:
                report.cells.append(
                    ChernoffCell(
                        m,
                        p,
                        eps,
                        exact_two_sided_tail(spec, eps),
                        chernoff_upper(spec.mu, eps),
                        degenerate_window(spec.mu, eps),
                    ),
                )
    logger.debug(f"Chernoff sweep: {len(report.violations)} violations, {len(report.degenerate)} degenerate cells")
    return report


def ratio_event_bound(n: float, r_n: float, D: float) -> float:  # noqa: N803
    """Failure bound `exp(-D n r_n^2)` of the ratio distance event.

    Parameters:
        n: Number of points.
        r_n: Adjacency distance.
        D: Constant.

    Returns:
        The bound.
    """
    _positive(n=n, r_n=r_n, D=D)
    return math.exp(-D * n * r_n**2)


class TwoPointBound(NamedTuple):
    """Failure bound of the two-point distance event."""

    value: float
    specialized_applies: bool
    specialized: float


def two_point_event_bound(n: float, r_n: float, d: float, D: float) -> TwoPointBound:  # noqa: N803
    """Failure bound `(2d / r_n) exp(-D n r_n^4 / d^2)` of the two-point distance event.

    When `d <= r_n^2 sqrt(n) / log n` the bound also reads `2 sqrt(2n) exp(-D (log n)^2)`.

    Parameters:
        n: Number of points.
        r_n: Adjacency distance.
        d: Euclidean distance of the pair.
        D: Constant.

    Returns:
        The plain value, whether the specialization applies, and its value.
    """
    _positive(n=n, r_n=r_n, d=d, D=D)
    value = (2 * d / r_n) * math.exp(-D * n * r_n**4 / d**2)
    special = two_point_specialized(n, D)
    applies = n > 1 and d <= r_n**2 * math.sqrt(n) / math.log(n)
    return TwoPointBound(value, applies, special)


def two_point_specialized(n: float, D: float) -> float:  # noqa: N803
    """Return `2 sqrt(2n) exp(-D (log n)^2)`.

    Parameters:
        n: Number of points.
        D: Constant.

    Returns:
        The bound.
    """
    _positive(n=n, D=D)
    return 2 * math.sqrt(2 * n) * math.exp(-D * math.log(n) ** 2)


class TailBounds(NamedTuple):
    """Failure bounds of the length and weight results."""

    ratio_length: float
    two_point_length: float
    weight: float
    delta_n: float


def tail_bound_calculators(
    n: float,
    r_n: float,
    e0: int,
    L_n: float,  # noqa: N803
    C: float = 1.0,  # noqa: N803
    D: float = 1.0,  # noqa: N803
    a: float = 1.0,
) -> TailBounds:
    """Evaluate the failure bounds `exp(-C n r^2)`, `exp(-D n r^4)` and `n^-(1+a)`.

    Parameters:
        n: Number of points.
        r_n: Adjacency distance.
        e0: Backbone edge count.
        L_n: Hop budget.
        C: Constant of the ratio length bound.
        D: Constant of the two-point length bound.
        a: Exponent of the weight bound.

    Raises:
        ParameterError: When an input is not positive.

    Returns:
        The bounds and the weight scale `e0 L_n log n`.
    """
    _positive(n=n, r_n=r_n, e0=e0, L_n=L_n, C=C, D=D, a=a)
    return TailBounds(
        ratio_length=math.exp(-C * n * r_n**2),
        two_point_length=math.exp(-D * n * r_n**4),
        weight=n ** -(1 + a),
        delta_n=e0 * L_n * math.log(n),
    )


def circle_chain_failure_bound(n: float, r_n: float, K: float, gamma: float, eps1: float = 1.0, L: float = DISK_SCALE) -> float:  # noqa: N803
    """Union bound `(1 + K + gamma) exp(-pi eps1 n r^2 gamma^2 / (L^2 (K + gamma)^2))` on an empty disk.

    Parameters:
        n: Number of points.
        r_n: Adjacency distance.
        K: Edge length over `r_n`.
        gamma: Slack of the chain.
        eps1: Lower bound of the density.
        L: Disk scale constant.

    Returns:
        The bound, capped at 1.
    """
    _positive(n=n, r_n=r_n, K=K, gamma=gamma, eps1=eps1, L=L)
    exponent = math.pi * eps1 * n * r_n**2 * gamma**2 / (L**2 * (K + gamma) ** 2)
    return min(1.0, (1 + K + gamma) * math.exp(-exponent))


def ratio_radius_floor(n: float, M: float) -> float:  # noqa: N803
    """Smallest adjacency distance `sqrt(M log n / n)` of the ratio regime.

    Parameters:
        n: Number of points.
        M: Constant.

    Returns:
        The radius.
    """
    _positive(n=n, M=M)
    return math.sqrt(M * math.log(n) / n)


class EupBound(NamedTuple):
    """Failure bound of the all-weights-small event."""

    value: float
    simplified: float


def eup_failure_bound(n: int, v0: int, M: float) -> EupBound:  # noqa: N803
    """Union bound `t / n^M` with `t = v0 n + n (n - 1) / 2` on a weight above `M log n`.

    Parameters:
        n: Number of points.
        v0: Backbone vertex count.
        M: Threshold factor.

    Returns:
        The bound and its simplification `n^-(M - 2)`.
    """
    _positive(n=n, M=M)
    edges = v0 * n + math.comb(int(n), 2)
    return EupBound(min(1.0, edges / n**M), n ** -(M - 2))


def per_hop_weight_failure(m: int, x: float) -> float:
    """Probability `(1 - e^-x)^m` that the maximum of `m` unit exponentials is at most `x`.

    Parameters:
        m: Number of exponentials.
        x: Threshold.

    Returns:
        The probability.
    """
    if m < 1:
        raise ParameterError(f"m must be at least 1, got {m!r}")
    return (-math.expm1(-x)) ** m if x > 0 else 0.0


def max_exponential_median(m: int) -> float:
    """Median `-log(1 - 2^(-1/m))` of the maximum of `m` unit exponentials.

    Parameters:
        m: Number of exponentials.

    Returns:
        The median.
    """
    if m < 1:
        raise ParameterError(f"m must be at least 1, got {m!r}")
    return -math.log1p(-(2 ** (-1 / m)))


def implied_constant(failure_rate: float, exponent: float) -> float:
    """Largest `C` with `exp(-C exponent)` at least an observed failure rate.

    Parameters:
        failure_rate: Observed failure frequency.
        exponent: Value multiplying the constant, such as `n r_n^2`.

    Returns:
        The constant; infinite when no failure was observed.
    """
    _positive(exponent=exponent)
    if failure_rate <= 0:
        return math.inf
    return max(0.0, -math.log(min(1.0, failure_rate)) / exponent)
