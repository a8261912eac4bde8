"""Configuration module.

Experiment configurations are read from plain `key = value` files (values
are decoded as YAML scalars or flow sequences) or from YAML mappings, then
overridden by command line flags.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from relay_rgg.enums import Mode
from relay_rgg.errors import ConfigError
from relay_rgg.geometry import DensitySpec
from relay_rgg.graphs import DetGraph, gamma_builtin, gamma_segment, load_gamma
from relay_rgg.logging import Logger

logger = Logger.get_logger(__name__)

CONFIG_NAMES = ("relay-rgg.cfg", "relay-rgg.yml", "relay-rgg.yaml")
EXPERIMENTS = ("distance", "length", "weight")
THREADS_VARIABLE = "RELAY_RGG_THREADS"
SMALL_STRIP = 0.1


@dataclass
class ExperimentConfig:
    """Parameters of an experiment run."""

    n: int = 1000
    rn: float | None = None
    beta: float | None = None
    rn_scale: float | None = None
    alpha: float | None = None
    gamma_file: str | None = None
    gamma_builtin: str | None = None
    density_file: str | None = None
    mode: Mode = Mode.TWO_POINT
    eps: float = 0.25
    Ln: int | None = None  # noqa: N815
    Ln_mult: float | None = None  # noqa: N815
    M: float = 3.0  # noqa: N815
    trials: int = 100
    seed: int = 0
    out: str = "."
    d: float | None = None
    constant: float = 1.0
    a_exponent: float = 1.0
    trend_n: list[int] = field(default_factory=list)
    trend_experiment: str = "distance"
    min_success_rate: float | None = None

    def __post_init__(self) -> None:
        try:
            self.mode = Mode(self.mode)
        except ValueError as error:
            raise ConfigError(f"mode must be one of {[mode.value for mode in Mode]}, got {self.mode!r}") from error
        if self.trend_experiment not in EXPERIMENTS:
            raise ConfigError(f"trend_experiment must be one of {EXPERIMENTS}, got {self.trend_experiment!r}")
        if self.n < 0 or self.trials < 0 or self.seed < 0:
            raise ConfigError("n, trials and seed must not be negative")
        if self.gamma_file and self.gamma_builtin:
            raise ConfigError("gamma_file and gamma_builtin are mutually exclusive")

    def resolve_rn(self, n: int | None = None) -> float:
        """Return the adjacency distance: explicit, `n^-beta`, or `scale * sqrt(log n / n)`.

        Parameters:
            n: Number of points, by default `self.n`.

        Raises:
            ConfigError: When no rule is configured or the value is not positive.

        Returns:
            The adjacency distance.
        """
        n = self.n if n is None else n
        if self.rn is not None:
            value = self.rn
        elif self.beta is not None:
            value = n**-self.beta
        elif self.rn_scale is not None:
            value = self.rn_scale * math.sqrt(math.log(n) / n) if n > 1 else math.nan
        else:
            raise ConfigError("missing required key: one of rn, beta, rn_scale")
        if not value > 0:
            raise ConfigError(f"adjacency distance must be positive, got {value!r}")
        return value

    def resolve_Ln(self, gamma: DetGraph, r_n: float) -> int:  # noqa: N802
        """Return the hop budget: explicit, or `Ln_mult * ceil(l_up / r_n)` (multiplier 16 by default).

        Parameters:
            gamma: The backbone graph.
            r_n: Adjacency distance.

        Returns:
            The hop budget.
        """
        if self.Ln is not None:
            return self.Ln
        multiplier = 16 if self.Ln_mult is None else self.Ln_mult
        return math.ceil(multiplier * math.ceil(gamma.l_up / r_n - 1e-9) - 1e-9)

    def gamma(self) -> DetGraph:
        """Build the backbone graph from the file, the builtin description or the separation `d`.

        Raises:
            ConfigError: When no source is configured.

        Returns:
            The backbone graph.
        """
        if self.gamma_file:
            return load_gamma(self.gamma_file)
        if self.gamma_builtin:
            return gamma_builtin(self.gamma_builtin)
        if self.d is not None:
            return gamma_segment(self.d)
        raise ConfigError("missing required key: one of gamma_file, gamma_builtin, d")

    def density(self) -> DensitySpec:
        """Return the configured density, uniform by default.

        Returns:
            The density.
        """
        return DensitySpec.from_file(self.density_file) if self.density_file else DensitySpec.uniform()

    def threads(self) -> int:
        """Return the worker count, capped by the `RELAY_RGG_THREADS` environment variable.

        Returns:
            The number of worker threads.
        """
        default = os.cpu_count() or 1
        value = os.getenv(THREADS_VARIABLE)
        if not value:
            return default
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring invalid {THREADS_VARIABLE}={value!r}")
            return default


_TYPES: dict[str, tuple[type, ...]] = {
    "n": (int,),
    "trials": (int,),
    "seed": (int,),
    "Ln": (int,),
    "gamma_file": (str,),
    "gamma_builtin": (str,),
    "density_file": (str,),
    "mode": (str, Mode),
    "out": (str,),
    "trend_experiment": (str,),
    "trend_n": (list,),
}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    expected = _TYPES.get(key, (float,))
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected {expected[0].__name__}, got a boolean")
    if expected == (float,):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if expected[0] is str and isinstance(value, (int, float)) and key in {"gamma_file", "density_file", "out"}:
        return str(value)
    if not isinstance(value, expected):
        raise ConfigError(f"{key}: expected {expected[0].__name__}, got {value!r}")
    if key == "trend_n" and not all(isinstance(item, int) and not isinstance(item, bool) for item in value):
        raise ConfigError(f"{key}: expected a list of integers, got {value!r}")
    return value


def _decode(key: str, raw: str, where: str) -> Any:
    try:
        return yaml.safe_load(raw) if raw else None
    except yaml.YAMLError as error:
        raise ConfigError(f"{where}: cannot decode value of {key}: {error}") from error


def parse_config_text(text: str, where: str = "<config>") -> dict[str, Any]:
    """Parse the `key = value` format.

    Parameters:
        text: File contents.
        where: Name used in messages.

    Raises:
        ConfigError: On malformed lines.

    Returns:
        The decoded values; a duplicate key keeps its last value.
    """
    values: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{where}:{number}: expected 'key = value', got {raw!r}")
        if key in values:
            logger.warning(f"{where}:{number}: duplicate key {key}, last value wins")
        values[key] = _decode(key, value.strip(), f"{where}:{number}")
    return values


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Read a configuration file and apply overrides.

    Parameters:
        path: Path to a `key = value` or YAML file; None for defaults only.
        overrides: Values that win over the file, None values are ignored.

    Raises:
        ConfigError: On unknown keys, type mismatches or a missing file.

    Returns:
        The configuration.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file {path} does not exist")
        logger.debug(f"Reading configuration from {path}")
        text = path.read_text()
        if path.suffix in {".yml", ".yaml"}:
            try:
                loaded = yaml.safe_load(text) or {}
            except yaml.YAMLError as error:
                raise ConfigError(f"{path}: {error}") from error
            if not isinstance(loaded, dict):
                raise ConfigError(f"{path}: expected a mapping")
            values.update(loaded)
        else:
            values.update(parse_config_text(text, str(path)))
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    known = {item.name for item in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    config = ExperimentConfig(**{key: _coerce(key, value) for key, value in values.items()})
    for warning in regime_warnings(config):
        logger.warning(warning)
    return config


def _encode(value: Any) -> str:
    if isinstance(value, Mode):
        value = value.value
    text = yaml.safe_dump(value, default_flow_style=True, width=math.inf)
    return text.removesuffix("...\n").strip()


def dump_config(config: ExperimentConfig) -> str:
    """Serialize a configuration in the `key = value` format.

    Parameters:
        config: The configuration.

    Returns:
        The text, readable by `load_config`.
    """
    lines = [f"{key} = {_encode(value)}" for key, value in asdict(config).items() if value is not None]
    return "\n".join(lines) + "\n"


def regime_warnings(config: ExperimentConfig, gamma: DetGraph | None = None) -> list[str]:
    """List the asymptotic regime conditions a configuration does not meet.

    Parameters:
        config: The configuration.
        gamma: The backbone graph, built from the configuration when possible.

    Returns:
        Warning messages.
    """
    warnings = []
    if gamma is None:
        try:
            gamma = config.gamma()
        except Exception:  # noqa: BLE001
            gamma = None
    n = config.n
    if config.beta is not None and config.alpha is not None:
        divisor = 4 if config.mode is Mode.TWO_POINT else 2
        limit = (1 - config.alpha) / divisor
        if config.beta >= limit:
            warnings.append(f"beta={config.beta} is not below (1 - alpha) / {divisor} = {limit:.6g}")
    if gamma is None or n < 2:  # noqa: PLR2004
        return warnings
    if config.alpha is not None and gamma.e0 >= n**config.alpha:
        warnings.append(f"e0={gamma.e0} is not below n^alpha = {n**config.alpha:.6g}")
    try:
        r_n = config.resolve_rn()
    except ConfigError:
        return warnings
    if config.Ln is not None or config.Ln_mult is not None:
        budget = config.resolve_Ln(gamma, r_n)
        if budget * r_n < gamma.l_up:
            warnings.append(f"Ln={budget} is below l_up / r_n = {gamma.l_up / r_n:.6g}")
        strip = r_n**2 * budget / gamma.l0
        if strip > SMALL_STRIP:
            warnings.append(f"r_n^2 Ln / l0 = {strip:.6g} is not small")
    return warnings


def find() -> str | None:
    """Find a configuration file in `./config` then in the current directory.

    Returns:
        The path to a configuration file, if any.
    """
    current_dir = Path.cwd()
    for folder in (current_dir / "config", current_dir):
        for name in CONFIG_NAMES:
            config_file = folder / name
            logger.debug(f"Searching for config file at {config_file}")
            if config_file.is_file():
                logger.debug(f"Found {config_file}")
                return str(config_file)
    logger.debug("No config file found")
    return None
