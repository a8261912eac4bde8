"""Tests for the `config` module."""

from __future__ import annotations

import logging
import math
from pathlib import Path

import pytest

from relay_rgg.config import ExperimentConfig, dump_config, find, load_config, parse_config_text, regime_warnings
from relay_rgg.enums import Mode
from relay_rgg.errors import ConfigError
from relay_rgg.graphs import gamma_segment
from tests import FIXTURES_DIR


def test_load_key_value_fixture() -> None:
    """Read the shipped key = value fixture."""
    config = load_config(FIXTURES_DIR / "fixture.cfg")
    assert config.n == 400_000
    assert config.rn == 0.2
    assert config.gamma_builtin == "segment 0.4"
    assert config.mode is Mode.TWO_POINT
    assert (config.trials, config.seed) == (6, 11)
    assert config.gamma().l0 == pytest.approx(0.4)


def test_load_yaml_fixture() -> None:
    """Read the shipped YAML fixture."""
    config = load_config(FIXTURES_DIR / "fixture.yml")
    assert config.n == 500
    assert config.d == 0.3
    assert config.trend_n == [500, 1000]
    assert config.gamma().e0 == 1


def test_empty_file_and_overrides(tmp_path: Path) -> None:
    """Build a full configuration from overrides alone.

    Parameters:
        tmp_path: Pytest fixture providing a temporary directory.
    """
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing here\n\n")
    config = load_config(path, {"n": 200, "rn": 0.2, "d": 0.3, "mode": "ratio", "eps": 0.5, "seed": None})
    assert config.n == 200
    assert config.mode is Mode.RATIO
    assert config.seed == 0


def test_overrides_win_over_file() -> None:
    """Let command line values replace file values."""
    config = load_config(FIXTURES_DIR / "fixture.cfg", {"n": 10, "trials": None})
    assert config.n == 10
    assert config.trials == 6


def test_duplicate_key_keeps_last_value(caplog: pytest.LogCaptureFixture) -> None:
    """Warn about a repeated key and keep its last value.

    Parameters:
        caplog: Pytest fixture to capture logs.
    """
    caplog.set_level(logging.WARNING, logger="relay_rgg.config")
    values = parse_config_text("n = 1\nseed = 3  # comment\nn = 2\n")
    assert values == {"n": 2, "seed": 3}
    assert "duplicate key n" in caplog.text


def test_parse_malformed_line() -> None:
    """Refuse a line without an equal sign."""
    with pytest.raises(ConfigError, match=":2:"):
        parse_config_text("n = 1\njust words\n")


@pytest.mark.parametrize(
    "overrides",
    [{"bogus": 1}, {"n": 1.5}, {"n": True}, {"rn": "far"}, {"trend_n": [1, "2"]}, {"mode": "fast"}, {"n": -1}],
)
def test_invalid_values(overrides: dict) -> None:
    """Refuse unknown keys, type mismatches and invalid values.

    Parameters:
        overrides: Values to load.
    """
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_missing_file() -> None:
    """Refuse a path that does not exist."""
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(FIXTURES_DIR / "missing.cfg")


def test_exclusive_backbone_sources() -> None:
    """Refuse a backbone file together with a builtin backbone."""
    with pytest.raises(ConfigError):
        ExperimentConfig(gamma_file="a.gamma", gamma_builtin="segment 0.3")


def test_missing_required_keys() -> None:
    """Ask for an adjacency rule and a backbone source."""
    config = ExperimentConfig()
    with pytest.raises(ConfigError, match="rn"):
        config.resolve_rn()
    with pytest.raises(ConfigError, match="gamma"):
        config.gamma()


def test_dump_and_load_give_the_same_config(tmp_path: Path) -> None:
    """Serialize a configuration and read it back.

    Parameters:
        tmp_path: Pytest fixture providing a temporary directory.
    """
    config = load_config(FIXTURES_DIR / "fixture.yml", {"mode": "ratio", "eps": 0.5, "out": "results"})
    path = tmp_path / "dumped.cfg"
    path.write_text(dump_config(config))
    assert load_config(path) == config


def test_resolve_rn() -> None:
    """Apply each adjacency rule."""
    assert ExperimentConfig(rn=0.2).resolve_rn() == 0.2
    assert ExperimentConfig(n=10_000, beta=0.25).resolve_rn() == pytest.approx(0.1)
    expected = 2 * math.sqrt(math.log(400) / 400)
    assert ExperimentConfig(n=400, rn_scale=2.0).resolve_rn() == pytest.approx(expected)
    assert ExperimentConfig(rn_scale=2.0).resolve_rn(n=400) == pytest.approx(expected)
    with pytest.raises(ConfigError):
        ExperimentConfig(rn=-0.1).resolve_rn()


def test_resolve_hop_budget() -> None:
    """Apply the explicit, default and multiplied hop budget rules."""
    gamma = gamma_segment(0.3)
    assert ExperimentConfig().resolve_Ln(gamma, 0.1) == 48
    assert ExperimentConfig(Ln_mult=2.0).resolve_Ln(gamma, 0.1) == 6
    assert ExperimentConfig(Ln=7).resolve_Ln(gamma, 0.1) == 7


@pytest.mark.parametrize(("beta", "warned"), [(0.3, True), (0.1, False)])
def test_beta_regime_warning(beta: float, warned: bool, caplog: pytest.LogCaptureFixture) -> None:  # noqa: FBT001
    """Warn when beta is not below (1 - alpha) / 4 in two-point mode.

    Parameters:
        beta: Radius exponent.
        warned: Whether a warning is expected.
        caplog: Pytest fixture to capture logs.
    """
    caplog.set_level(logging.WARNING, logger="relay_rgg.config")
    load_config(None, {"n": 1000, "beta": beta, "alpha": 0.2, "d": 0.3})
    assert ("is not below (1 - alpha) / 4" in caplog.text) is warned


def test_ratio_mode_regime_limit() -> None:
    """Use (1 - alpha) / 2 in ratio mode."""
    config = ExperimentConfig(n=1000, beta=0.3, alpha=0.2, mode=Mode.RATIO, d=0.3)
    assert not any("beta" in warning for warning in regime_warnings(config))


def test_budget_regime_warnings() -> None:
    """Warn about a budget below l_up / r_n and a wide strip."""
    short = ExperimentConfig(n=1000, rn=0.1, d=0.3, Ln=2)
    assert any("below l_up" in warning for warning in regime_warnings(short))
    wide = ExperimentConfig(n=1000, rn=0.1, d=0.3, Ln=48)
    assert any("is not small" in warning for warning in regime_warnings(wide))
    assert regime_warnings(ExperimentConfig(n=1000, rn=0.1, d=0.3)) == []


def test_backbone_size_regime_warning() -> None:
    """Warn when e0 is not below n^alpha."""
    config = ExperimentConfig(n=100, rn=0.1, gamma_builtin="star 5", alpha=0.25)
    assert any("e0=5" in warning for warning in regime_warnings(config))


def test_threads_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Read the worker count from the environment.

    Parameters:
        monkeypatch: Pytest fixture to patch the environment.
    """
    monkeypatch.setenv("RELAY_RGG_THREADS", "4")
    assert ExperimentConfig().threads() == 4
    monkeypatch.setenv("RELAY_RGG_THREADS", "0")
    assert ExperimentConfig().threads() == 1
    monkeypatch.setenv("RELAY_RGG_THREADS", "many")
    assert ExperimentConfig().threads() >= 1


def test_find(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Look for a configuration file in ./config first.

    Parameters:
        tmp_path: Pytest fixture providing a temporary directory.
        monkeypatch: Pytest fixture to change the working directory.
    """
    monkeypatch.chdir(tmp_path)
    assert find() is None
    (tmp_path / "relay-rgg.cfg").write_text("n = 1\n")
    assert find() == str(tmp_path / "relay-rgg.cfg")
    (tmp_path / "config").mkdir()
    (tmp_path / "config" / "relay-rgg.yml").write_text("n: 1\n")
    assert find() == str(tmp_path / "config" / "relay-rgg.yml")
