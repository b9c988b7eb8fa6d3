"""INI run configuration: one file per run, every default embedded."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .maps import (
    Geometric,
    LocallyConstant,
    MapSpec,
    Potential,
    constant_potential,
    map_from_config,
    parse_list,
    parse_number,
)

SECTIONS = ("map", "potential", "task", "output", "cache")

COMMON_DEFAULTS: dict[str, dict[str, str]] = {
    "map": {"family": "doubling"},
    "potential": {"kind": "geometric", "t": "1"},
    "output": {"directory": "out", "prefix": "", "json": "false", "plot": "false"},
    "cache": {"enabled": "false", "directory": ".periodic-cache"},
}

PRESSURE_TASK = {
    "parameter": "t",
    "grid": "-3:3:61",
    "method": "periodic",
    "period": "12",
    "depth": "1",
    "slope_gap_tol": "0.02",
    "convexity_tol": "1e-9",
    "t": "0",
}

TASK_DEFAULTS: dict[str, dict[str, str]] = {
    "pressure": dict(PRESSURE_TASK),
    "lyapunov": {**PRESSURE_TASK, "lambda_grid": "auto", "lambda_points": "21",
                 "lambda_floor": "1e-6"},
    "temperature": {"q_grid": "-5:5:41", "method": "auto", "period": "12", "depth": "1",
                    "zero_tol": "1e-9"},
    "dimension": {"q_grid": "-5:5:41", "method": "auto", "period": "12", "depth": "1",
                  "zero_tol": "1e-9", "alpha_grid": "auto"},
    "induce": {"base": "0.5,1", "max_time": "20", "max_branches": "100000"},
    "empirical": {"starts": "200", "length": "20000", "bins": "5", "bin_width": "auto",
                  "scales": "8:32", "seed": "0"},
    "verify": {"criteria": "all", "slope_gap_tol": "0.02"},
}

POTENTIAL_KEYS = {
    "geometric": {"t"},
    "bernoulli": {"probabilities"},
    "locally_constant": {"values"},
    "constant": {"value"},
}


@dataclass
class RunConfig:
    command: str
    sections: dict[str, dict[str, str]] = field(default_factory=dict)

    def section(self, name: str) -> dict[str, str]:
        return self.sections[name]

    @property
    def task(self) -> dict[str, str]:
        return self.sections["task"]

    def number(self, key: str) -> float:
        return parse_number(self.task[key])

    def integer(self, key: str) -> int:
        value = self.number(key)
        if value != int(value):
            raise ConfigError(f"task.{key} must be an integer")
        return int(value)

    def flag(self, section: str, key: str) -> bool:
        return parse_bool(self.sections[section][key], f"{section}.{key}")

    def grid(self, key: str) -> np.ndarray:
        return parse_grid(self.task[key], f"task.{key}")

    def build_map(self) -> MapSpec:
        return map_from_config(self.sections["map"])

    def build_potential(self, fmap: MapSpec) -> Potential:
        return potential_from_config(self.sections["potential"], fmap)


def parse_bool(text: str, where: str = "") -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def parse_grid(text: str, where: str = "") -> np.ndarray:
    """'a:b:n' for n evenly spaced points, or an explicit comma list; must be sorted."""
    s = str(text).strip()
    if s.count(":") == 2:
        a, b, n = s.split(":")
        num = int(parse_number(n))
        if num < 1:
            raise ConfigError(f"{where}: grid needs at least one point")
        grid = np.linspace(parse_number(a), parse_number(b), num)
    else:
        grid = np.array(parse_list(s), dtype=float)
    if grid.size == 0:
        raise ConfigError(f"{where}: empty grid")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{where}: grid must be strictly increasing")
    return grid


def potential_from_config(section: Mapping[str, str], fmap: MapSpec) -> Potential:
    kind = section.get("kind", "geometric").strip()
    if kind not in POTENTIAL_KEYS:
        raise ConfigError(f"unknown potential kind {kind!r}; known: {sorted(POTENTIAL_KEYS)}")
    extra = set(section) - {"kind"} - POTENTIAL_KEYS[kind]
    if extra:
        raise ConfigError(f"unknown keys for potential {kind!r}: {sorted(extra)}")
    if kind == "geometric":
        return Geometric(parse_number(section.get("t", "1")))
    if kind == "bernoulli":
        probs = parse_list(section.get("probabilities", ""))
        if len(probs) != fmap.m or any(p <= 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
            raise ConfigError(f"bernoulli needs {fmap.m} positive probabilities summing to 1")
        return LocallyConstant.from_probabilities(probs)
    if kind == "locally_constant":
        vals = parse_list(section.get("values", ""))
        if len(vals) != fmap.m:
            raise ConfigError(f"locally_constant needs {fmap.m} values")
        return LocallyConstant(tuple(vals))
    return constant_potential(fmap, parse_number(section.get("value", "0")))


def defaults(command: str) -> dict[str, dict[str, str]]:
    if command not in TASK_DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    out = {name: dict(values) for name, values in COMMON_DEFAULTS.items()}
    out["task"] = dict(TASK_DEFAULTS[command])
    return out


def defaults_text(command: str) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for name, values in defaults(command).items():
        parser[name] = values
    lines = [f"# defaults for '{command}'"]
    for name in SECTIONS:
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in parser[name].items()]
        lines.append("")
    return "\n".join(lines)


def load_config(command: str, path: str | Path | None = None) -> RunConfig:
    """Merge a config file over the command defaults, rejecting unknown keys.

    The [map] and [potential] sections are replaced wholesale when present,
    since their valid keys depend on the family or kind.
    """
    merged = defaults(command)
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for name in parser.sections():
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
            given = dict(parser[name])
            if name in ("map", "potential"):
                merged[name] = given
                continue
            unknown = set(given) - set(merged[name])
            if unknown:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
            merged[name].update(given)
    cfg = RunConfig(command, merged)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    task = cfg.task
    for key, value in task.items():
        if key.endswith("_tol") or key == "lambda_floor":
            if parse_number(value) <= 0:
                raise ConfigError(f"task.{key} must be positive")
        if key.endswith("grid") and str(value).strip() != "auto":
            parse_grid(value, f"task.{key}")
    for key in ("json", "plot"):
        parse_bool(cfg.sections["output"][key], f"output.{key}")
    parse_bool(cfg.sections["cache"]["enabled"], "cache.enabled")
    cfg.build_map()
