"""Enumerations module."""

from __future__ import annotations

import enum
from typing import Any


class MetaEnum(type):
    """Metaclass for our constant-holder enums."""

    ALL = ()

    def __contains__(cls, item: Any):
        return item in cls.ALL


class ExitCode(metaclass=MetaEnum):
    """Enumeration of the command line exit codes."""

    OK = 0
    CONFIG_ERROR = 1
    INVARIANT_VIOLATION = 2
    INTERRUPTED = 130

    ALL = (OK, CONFIG_ERROR, INVARIANT_VIOLATION, INTERRUPTED)


class Mode(str, enum.Enum):
    """Slack mode of the circle-chain construction."""

    TWO_POINT = "twopoint"
    RATIO = "ratio"


class VertexTag(str, enum.Enum):
    """Kind of a vertex of the combined graph."""

    BACKBONE = "B"
    RELAY = "R"


class RecordKind(str, enum.Enum):
    """Kind of payload carried by a trial record."""

    DISTANCE = "distance"
    LENGTH = "length"
    WEIGHT = "weight"
