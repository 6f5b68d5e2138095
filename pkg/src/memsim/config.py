"""Run configuration: INI-style sections with key=value lines."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .control import DEFAULT_CAP_FACTOR, DEFAULT_FLOOR
from .params import PhysicalParams, RegimeThresholds

DEFAULT_DURATIONS = (4.0, 8.0, 12.0, 16.0, 20.0)
MIN_GRID = 512


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicsSection:
    cooperativity: float = 200.0
    gamma_perp_mhz: float = 3.0
    kappa_mhz: float = 2.0
    delta_mhz: float = 200.0
    omega_sg_mhz: float = 10.0
    atom_number: float = 1.0

    def params(self) -> PhysicalParams:
        return PhysicalParams.from_mhz(self.cooperativity, self.gamma_perp_mhz,
                                       self.kappa_mhz, self.delta_mhz,
                                       self.omega_sg_mhz, self.atom_number)


@dataclass(frozen=True)
class ControlSection:
    floor_eps: float = DEFAULT_FLOOR
    omega_cap_factor: float = DEFAULT_CAP_FACTOR
    raman_ratio_max: float = RegimeThresholds.raman_ratio
    two_band_ratio_min: float = RegimeThresholds.sg_ratio
    depletion_max: float = RegimeThresholds.depletion
    sum_rule_factor: float = 2.0
    matching_tol: float = 0.02

    def thresholds(self) -> RegimeThresholds:
        return RegimeThresholds(self.raman_ratio_max, self.two_band_ratio_min,
                                self.depletion_max)


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    control: ControlSection = field(default_factory=ControlSection)
    sweep: tuple = DEFAULT_DURATIONS
    grid_n: int = 4096
    outputs: str = "memsim_out"
    emit_profiles: bool = True
    emit_oracle: bool = False

    def validate(self):
        if not self.sweep:
            raise ConfigError("sweep list is empty")
        if any(not v > 0 for v in self.sweep):
            raise ConfigError("sweep durations must be positive")
        if self.grid_n < MIN_GRID:
            raise ConfigError(f"grid_n must be >= {MIN_GRID}")
        if not self.control.floor_eps > 0:
            raise ConfigError("floor_eps must be positive")
        try:
            self.physics.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def echo(self) -> list:
        """Resolved parameters as ``section.key=value`` lines (repr floats)."""
        lines = [f"physics.{f.name}={getattr(self.physics, f.name)!r}"
                 for f in fields(PhysicsSection)]
        lines += [f"control.{f.name}={getattr(self.control, f.name)!r}"
                  for f in fields(ControlSection)]
        lines.append("sweep.durations=" + ",".join(repr(float(v)) for v in self.sweep))
        lines.append(f"sweep.grid_n={self.grid_n}")
        return lines


def parse_list(text: str) -> tuple:
    items = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


def _section(parser, name, cls):
    if not parser.has_section(name):
        return cls()
    known = {f.name: f for f in fields(cls)}
    values = {}
    for key, raw in parser.items(name):
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key}")
        try:
            values[key] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{name}] {key}: not a number: {raw!r}") from exc
    return cls(**values)


SWEEP_KEYS = {"durations", "grid_n"}
OUTPUT_KEYS = {"dir", "emit_profiles", "emit_oracle"}


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        text = Path(path).read_text()
        parser.read_string(text, source=str(path))
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc
    extra = set(parser.sections()) - {"physics", "control", "sweep", "output"}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    cfg = RunConfig(physics=_section(parser, "physics", PhysicsSection),
                    control=_section(parser, "control", ControlSection))
    if parser.has_section("sweep"):
        for key, raw in parser.items("sweep"):
            if key not in SWEEP_KEYS:
                raise ConfigError(f"unknown key [sweep] {key}")
            if key == "durations":
                cfg = replace(cfg, sweep=parse_list(raw))
            else:
                try:
                    cfg = replace(cfg, grid_n=int(raw))
                except ValueError as exc:
                    raise ConfigError(f"[sweep] grid_n: {raw!r}") from exc
    if parser.has_section("output"):
        for key, raw in parser.items("output"):
            if key not in OUTPUT_KEYS:
                raise ConfigError(f"unknown key [output] {key}")
            if key == "dir":
                cfg = replace(cfg, outputs=raw.strip())
            else:
                cfg = replace(cfg, **{key: _bool(raw)})
    return cfg.validate()
