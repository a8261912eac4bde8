"""Errors module."""

from __future__ import annotations


class RelayRggError(Exception):
    """Base class for all errors raised by relay_rgg."""


class ConfigError(RelayRggError):
    """Exception raised for errors in the configuration."""


class DensityError(RelayRggError):
    """Exception raised when a density violates the bounds it declares."""


class GeometryError(RelayRggError):
    """Exception raised for invalid lengths or shapes leaving the unit square."""


class GammaError(RelayRggError):
    """Exception raised when backbone graph data are incorrect."""


class ParameterError(RelayRggError):
    """Exception raised for infeasible or out-of-range numerical parameters."""


class InstanceTooLargeError(RelayRggError):
    """Exception raised when an exhaustive oracle is given too large an instance."""


class ExperimentError(RelayRggError):
    """Exception raised when an experiment is set up or aggregated incorrectly."""


class InvariantViolation(RelayRggError):  # noqa: N818
    """A deterministic property of a successful construction does not hold."""


class ConstructionFailure(RelayRggError):  # noqa: N818
    """A construction found no eligible relay vertex in one of its slots."""

    def __init__(self, slot: int, edge: int | None = None, reason: str = "empty slot") -> None:
        """Initialize the failure.

        Parameters:
            slot: Index of the first disk or square without an eligible vertex.
            edge: Index of the backbone edge being routed, if any.
            reason: Short description.
        """
        self.slot = slot
        self.edge = edge
        self.reason = reason
        where = f"edge {edge}, " if edge is not None else ""
        super().__init__(f"{reason} ({where}slot {slot})")
