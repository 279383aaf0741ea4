"""Scenario configuration: defaults, JSON (de)serialisation and overrides.

A scenario is a JSON document with one object per section::

    {"layout": {...}, "channel": {...}, "sectors": {...}, "power": {...},
     "spectrum": {...}, "traffic": {...}, "outage": {...},
     "capacity_macro": {...}, "capacity_femto": {...}, "run": {...}}

Overrides use dotted key paths (``outage.gamma_macro_db=10``); a bare key
is accepted when it names exactly one field across all sections.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from .analysis import CapacityParams
from .antenna import SectorConfig
from .channel import ChannelParams
from .geometry import LayoutConfig
from .power import PowerPolicy

__all__ = [
    "ConfigError",
    "SpectrumConfig",
    "TrafficConfig",
    "OutageModel",
    "RunConfig",
    "Scenario",
    "default_scenario",
    "scenario_from_dict",
    "apply_overrides",
    "parse_override",
]


class ConfigError(ValueError):
    """Invalid scenario configuration; ``key_path`` names the offending entry."""

    def __init__(self, key_path: str, message: str):
        super().__init__(f"{key_path}: {message}" if key_path else message)
        self.key_path = key_path


@dataclass(frozen=True)
class SpectrumConfig:
    total_khz: float = 1000.0
    macro_share_khz: float = 500.0

    def __post_init__(self):
        if not self.total_khz > 0:
            raise ValueError("total_khz must be > 0")
        if not 0 <= self.macro_share_khz <= self.total_khz:
            raise ValueError("macro_share_khz must lie in [0, total_khz]")


@dataclass(frozen=True)
class TrafficConfig:
    femto_lambda: float = 12.0
    max_users_per_femto: int = 20
    macro_load_mean: float = 0.5
    macro_load_std: float = 0.2
    hotspot_threshold: float = 0.8
    rounds: int = 1

    def __post_init__(self):
        if self.femto_lambda < 0:
            raise ValueError("femto_lambda must be >= 0")
        if self.max_users_per_femto < 1:
            raise ValueError("max_users_per_femto must be >= 1")
        if not 0 <= self.hotspot_threshold <= 1:
            raise ValueError("hotspot_threshold must lie in [0, 1]")
        if self.macro_load_std < 0:
            raise ValueError("macro_load_std must be >= 0")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class OutageModel:
    """Two-tier outage model parameters.

    Thresholds and processing gain are the standard system values. The
    fields without defaults are calibration constants and are
    supplied by the packaged default scenario file.
    """

    macro_users: float
    femto_users: float
    n_macro_interferers: int
    power_ratio: float
    out_of_cell_mean_dbm: float
    out_of_cell_cv: float
    cpc_rounds: int
    macro_tx_dbm: float = 43.0
    femto_rx_power_mw: float = 150.0
    gamma_macro_db: float = 12.0
    gamma_femto_db: float = 14.0
    phi_macro: float = 0.1
    phi_femto: float = 0.1
    processing_gain: float = 256.0
    stability_alpha: float = 0.25
    cpc: bool = False

    def __post_init__(self):
        if self.macro_users < 0:
            raise ValueError("macro_users must be >= 0")
        if self.femto_users < 0:
            raise ValueError("femto_users must be >= 0")
        if self.n_macro_interferers < 0:
            raise ValueError("n_macro_interferers must be >= 0")
        if not self.power_ratio > 0:
            raise ValueError("power_ratio must be > 0")
        if self.out_of_cell_cv < 0:
            raise ValueError("out_of_cell_cv must be >= 0")
        if self.cpc_rounds < 0:
            raise ValueError("cpc_rounds must be >= 0")
        for name in ("gamma_macro_db", "gamma_femto_db", "macro_tx_dbm", "out_of_cell_mean_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("phi_macro", "phi_femto"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.processing_gain > 0:
            raise ValueError("processing_gain must be > 0")
        if not self.femto_rx_power_mw > 0:
            raise ValueError("femto_rx_power_mw must be > 0")
        if not self.stability_alpha > 0:
            raise ValueError("stability_alpha must be > 0")

    @property
    def stability_exponent(self) -> float:
        """``2 / alpha``; carried as metadata only."""
        return 2.0 / self.stability_alpha

    @property
    def femto_activity(self) -> float:
        """Probability that a femto BS has at least one active user."""
        return 1.0 - math.exp(-self.femto_users)


@dataclass(frozen=True)
class RunConfig:
    trials: int = 20_000
    master_seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


SECTIONS: dict[str, type] = {
    "layout": LayoutConfig,
    "channel": ChannelParams,
    "sectors": SectorConfig,
    "power": PowerPolicy,
    "spectrum": SpectrumConfig,
    "traffic": TrafficConfig,
    "outage": OutageModel,
    "capacity_macro": CapacityParams,
    "capacity_femto": CapacityParams,
    "run": RunConfig,
}

# fields that do not change any result and stay out of the config hash
_NON_RESULT_KEYS = {("run", "workers")}


@dataclass(frozen=True)
class Scenario:
    layout: LayoutConfig
    channel: ChannelParams
    sectors: SectorConfig
    power: PowerPolicy
    spectrum: SpectrumConfig
    traffic: TrafficConfig
    outage: OutageModel
    capacity_macro: CapacityParams
    capacity_femto: CapacityParams
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict:
        return {name: _section_to_dict(getattr(self, name)) for name in SECTIONS}

    def fingerprint(self) -> str:
        """SHA-256 over every parameter that affects results."""
        data = self.to_dict()
        for section, key in _NON_RESULT_KEYS:
            data[section].pop(key, None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, overrides: Mapping[str, Any] | Iterable[str]) -> "Scenario":
        return apply_overrides(self, overrides)

    # convenience accessors used throughout the engine
    @property
    def trials(self) -> int:
        return self.run.trials

    @property
    def master_seed(self) -> int:
        return self.run.master_seed

    @property
    def n_femto(self) -> int:
        return self.layout.n_femto


def _section_to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, float) and math.isinf(v):
            v = "inf" if v > 0 else "-inf"
        out[f.name] = v
    return out


def _coerce(value, tp, key_path: str):
    if isinstance(tp, str):
        raise TypeError(f"unresolved annotation for {key_path}")
    if tp is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "on", "off", "1", "0"):
            return value.lower() in ("true", "on", "1")
        raise ConfigError(key_path, f"expected a boolean, got {value!r}")
    if tp is int:
        if isinstance(value, bool):
            raise ConfigError(key_path, f"expected an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
        raise ConfigError(key_path, f"expected an integer, got {value!r}")
    if tp is float:
        if isinstance(value, bool):
            raise ConfigError(key_path, f"expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(key_path, f"expected a number, got {value!r}") from None
    return value


def _build_section(name: str, cls: type, data: Mapping[str, Any]):
    if not isinstance(data, Mapping):
        raise ConfigError(name, f"expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{name}.{key}"
        if key not in names:
            raise ConfigError(path, "unknown key")
        kwargs[key] = _coerce(value, hints[key], path)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        missing = [f.name for f in dataclasses.fields(cls) if f.name not in kwargs]
        raise ConfigError(name, f"missing required keys {missing}") from exc
    except ValueError as exc:
        msg = str(exc)
        culprit = next((f.name for f in dataclasses.fields(cls) if msg.startswith(f.name)), None)
        if culprit is None:
            culprit = next((k for k in kwargs if k in msg), None)
        raise ConfigError(f"{name}.{culprit}" if culprit else name, msg) from None


def scenario_from_dict(data: Mapping[str, Any], base: Mapping[str, Any] | None = None) -> Scenario:
    """Build a scenario from nested ``data`` layered over ``base``."""
    if not isinstance(data, Mapping):
        raise ConfigError("", "scenario document must be a JSON object")
    merged: dict[str, dict] = {k: dict(v) for k, v in (base or {}).items()}
    for section, values in data.items():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        if not isinstance(values, Mapping):
            raise ConfigError(section, f"expected an object, got {type(values).__name__}")
        merged.setdefault(section, {}).update(values)
    built = {name: _build_section(name, cls, merged.get(name, {})) for name, cls in SECTIONS.items()}
    return Scenario(**built)


def _default_dict() -> dict:
    text = resources.files("femtosim").joinpath("data/default_scenario.json").read_text()
    return json.loads(text)


def default_scenario() -> Scenario:
    """Packaged system defaults plus the calibration constants."""
    return scenario_from_dict(_default_dict())


def parse_override(item: str) -> tuple[str, Any]:
    """Split ``key=value``; the value is read as JSON when it parses."""
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw.strip()
    return key, value


def _resolve_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(key, "unknown section")
        if name not in {f.name for f in dataclasses.fields(SECTIONS[section])}:
            raise ConfigError(key, "unknown key")
        return section, name
    hits = [s for s, cls in SECTIONS.items() if key in {f.name for f in dataclasses.fields(cls)}]
    if not hits:
        raise ConfigError(key, "unknown key")
    if len(hits) > 1:
        raise ConfigError(key, f"ambiguous key; qualify it with one of {hits}")
    return hits[0], key


def apply_overrides(scenario: Scenario, overrides) -> Scenario:
    if isinstance(overrides, Mapping):
        items = list(overrides.items())
    else:
        items = [parse_override(o) if isinstance(o, str) else tuple(o) for o in overrides]
    data = scenario.to_dict()
    for key, value in items:
        section, name = _resolve_key(key)
        data[section][name] = value
    return scenario_from_dict(data)


def load_scenario_file(path: str | Path | None) -> dict:
    """Read a scenario JSON document; an empty or missing path means ``{}``."""
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(str(p), f"cannot read scenario file: {exc.strerror}") from None
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(p), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
