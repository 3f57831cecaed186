"""Experiment configuration read from a sectioned TOML file."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .devices import BASIS_NAMES, SplitterMatrix
from .drift import DEFAULT_DT, DEFAULT_DURATION, WINDOWS
from .linkbudget import LinkBudget
from .qcore import DIM, InvariantError
from .source import SourceConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class MeasurementConfig:
    bases: Tuple[str, ...] = BASIS_NAMES
    integration_time: float = 20.0  # s per basis: four 5 s trigger groups
    coincidence_efficiency: float = 0.04
    rate: Optional[float] = None  # detected pairs/s; derived from the source when unset
    accidental_rate: object = 0.0  # counts/s, scalar or 4x4
    demux_transmittance: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)
    splitter: Optional[SplitterMatrix] = None  # None -> ideal
    custom_bases: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    seed: Optional[int] = None


@dataclass(frozen=True)
class DriftConfig:
    duration: float = DEFAULT_DURATION
    dt: float = DEFAULT_DT
    basis: str = "X0"
    pair: Tuple[int, int] = (0, 0)
    amplitude: float = 0.5
    diffusion: float = 1e-6
    window: str = "hann"
    seed: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceConfig = field(default_factory=SourceConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    linkbudget: LinkBudget = field(default_factory=lambda: LinkBudget(min_rate=0.35))
    distance: float = 75.0  # km, for the reported rate
    output_dir: str = "out"

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        return replace(
            self,
            measurement=replace(self.measurement, seed=seed),
            drift=replace(self.drift, seed=seed),
        )

    @property
    def detected_rate(self) -> float:
        m = self.measurement
        if m.rate is not None:
            return m.rate
        return self.source.generated_pair_rate * m.coincidence_efficiency


def _number(value, where, *, minimum=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value!r}")
    return int(value) if integer else float(value)


def _vector(value, where, n=DIM, **kw):
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers")
    return tuple(_number(v, f"{where}[{i}]", **kw) for i, v in enumerate(value))


def _seed(value, where):
    if value is None:
        return None
    seed = _number(value, where, minimum=0, integer=True)
    if seed >= 2**64:
        raise ConfigError(f"{where}: seed must fit in 64 bits")
    return seed


def _check_keys(section: dict, allowed, where):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def _source(d: dict) -> SourceConfig:
    kw = {}
    for key in ("pump_weights", "core_phases"):
        if key in d:
            kw[key] = _vector(d[key], f"source.{key}", minimum=0.0 if key == "pump_weights" else None)
    for key in ("visibility", "pair_rate", "pump_power_per_core", "bandwidth"):
        if key in d:
            kw[key] = _number(d[key], f"source.{key}", minimum=0.0)
    try:
        return SourceConfig(**kw)
    except (ValueError, InvariantError) as exc:
        raise ConfigError(f"source: {exc}") from None


def _splitter(value, where) -> Optional[SplitterMatrix]:
    if value == "ideal":
        return None
    if isinstance(value, dict):
        _check_keys(value, ("real", "imag"), where)
        if "real" not in value:
            raise ConfigError(f"{where}.real: required")
        re = np.array([_vector(row, f"{where}.real[{i}]") for i, row in enumerate(_rows(value["real"], f"{where}.real"))])
        im = np.zeros_like(re)
        if "imag" in value:
            im = np.array([_vector(row, f"{where}.imag[{i}]") for i, row in enumerate(_rows(value["imag"], f"{where}.imag"))])
        try:
            return SplitterMatrix(re + 1j * im)
        except InvariantError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: expected \"ideal\" or a table with real/imag 4x4 matrices")


def _rows(value, where):
    if not isinstance(value, list) or len(value) != DIM:
        raise ConfigError(f"{where}: expected {DIM} rows")
    return value


def _measurement(d: dict) -> MeasurementConfig:
    kw = {}
    custom = {}
    if "custom_bases" in d:
        if not isinstance(d["custom_bases"], dict):
            raise ConfigError("measurement.custom_bases: expected a table of name = [4 phases]")
        for name, phases in d["custom_bases"].items():
            if name in BASIS_NAMES:
                raise ConfigError(f"measurement.custom_bases.{name}: shadows a standard basis")
            custom[name] = _vector(phases, f"measurement.custom_bases.{name}")
        kw["custom_bases"] = custom
    if "bases" in d:
        if not isinstance(d["bases"], list) or not d["bases"]:
            raise ConfigError("measurement.bases: expected a nonempty list of basis names")
        for i, name in enumerate(d["bases"]):
            if name not in BASIS_NAMES and name not in custom:
                raise ConfigError(f"measurement.bases[{i}]: unknown basis {name!r}")
        if len(set(d["bases"])) != len(d["bases"]):
            raise ConfigError("measurement.bases: duplicate names")
        kw["bases"] = tuple(d["bases"])
    if "integration_time" in d:
        kw["integration_time"] = _number(d["integration_time"], "measurement.integration_time", minimum=0.0)
    if "coincidence_efficiency" in d:
        eff = _number(d["coincidence_efficiency"], "measurement.coincidence_efficiency", minimum=0.0)
        if eff > 1:
            raise ConfigError("measurement.coincidence_efficiency: must be <= 1")
        kw["coincidence_efficiency"] = eff
    if "rate" in d:
        kw["rate"] = _number(d["rate"], "measurement.rate", minimum=0.0)
    if "accidental_rate" in d:
        acc = d["accidental_rate"]
        if isinstance(acc, list):
            kw["accidental_rate"] = np.array(
                [_vector(row, f"measurement.accidental_rate[{i}]", minimum=0.0)
                 for i, row in enumerate(_rows(acc, "measurement.accidental_rate"))]
            )
        else:
            kw["accidental_rate"] = _number(acc, "measurement.accidental_rate", minimum=0.0)
    if "demux_transmittance" in d:
        t = _vector(d["demux_transmittance"], "measurement.demux_transmittance", minimum=0.0)
        if max(t) > 1:
            raise ConfigError("measurement.demux_transmittance: entries must be <= 1")
        kw["demux_transmittance"] = t
    if "splitter" in d:
        kw["splitter"] = _splitter(d["splitter"], "measurement.splitter")
    if "seed" in d:
        kw["seed"] = _seed(d["seed"], "measurement.seed")
    return MeasurementConfig(**kw)


def _drift(d: dict) -> DriftConfig:
    kw = {}
    for key in ("duration", "dt", "amplitude", "diffusion"):
        if key in d:
            kw[key] = _number(d[key], f"drift.{key}", minimum=0.0)
    if "dt" in kw and kw["dt"] <= 0:
        raise ConfigError("drift.dt: must be positive")
    if kw.get("duration", DEFAULT_DURATION) < kw.get("dt", DEFAULT_DT):
        raise ConfigError("drift.duration: must be at least one time step")
    if "basis" in d:
        if d["basis"] not in BASIS_NAMES[1:]:
            raise ConfigError(f"drift.basis: expected one of X0..X3, got {d['basis']!r}")
        kw["basis"] = d["basis"]
    if "pair" in d:
        pair = _vector(d["pair"], "drift.pair", n=2, minimum=0, integer=True)
        if max(pair) >= DIM:
            raise ConfigError("drift.pair: detector indices must be 0..3")
        kw["pair"] = pair
    if "window" in d:
        if d["window"] not in WINDOWS:
            raise ConfigError(f"drift.window: expected one of {', '.join(WINDOWS)}")
        kw["window"] = d["window"]
    if "seed" in d:
        kw["seed"] = _seed(d["seed"], "drift.seed")
    return DriftConfig(**kw)


def _linkbudget(d: dict) -> Tuple[LinkBudget, Optional[float]]:
    kw = {}
    for key in ("brightness", "pump_power", "bandwidth", "attenuation", "coincidence_efficiency", "min_rate"):
        if key in d:
            kw[key] = _number(d[key], f"linkbudget.{key}", minimum=0.0)
    if "arms" in d:
        arms = _number(d["arms"], "linkbudget.arms", integer=True)
        if arms not in (1, 2):
            raise ConfigError("linkbudget.arms: must be 1 or 2")
        kw["arms"] = arms
    distance = _number(d["distance"], "linkbudget.distance", minimum=0.0) if "distance" in d else None
    base = LinkBudget(min_rate=0.35)
    return replace(base, **kw), distance


SECTION_KEYS = {
    "source": tuple(f.name for f in fields(SourceConfig) if f.init),
    "measurement": tuple(f.name for f in fields(MeasurementConfig)),
    "drift": tuple(f.name for f in fields(DriftConfig)),
    "linkbudget": tuple(f.name for f in fields(LinkBudget)) + ("distance",),
    "output": ("dir",),
}


def config_from_dict(data: dict) -> ExperimentConfig:
    _check_keys(data, SECTION_KEYS, "<top level>")
    sections = {}
    for name, allowed in SECTION_KEYS.items():
        sec = data.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"{name}: expected a [{name}] section")
        _check_keys(sec, allowed, name)
        sections[name] = sec
    kw = {
        "source": _source(sections["source"]),
        "measurement": _measurement(sections["measurement"]),
        "drift": _drift(sections["drift"]),
    }
    budget, distance = _linkbudget(sections["linkbudget"])
    kw["linkbudget"] = budget
    if distance is not None:
        kw["distance"] = distance
    if "dir" in sections["output"]:
        out = sections["output"]["dir"]
        if not isinstance(out, str) or not out:
            raise ConfigError("output.dir: expected a nonempty string")
        kw["output_dir"] = out
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
