"""Run configuration: a YAML key-value tree with line-anchored diagnostics.

Schema (every section optional except ``params``)::

    params:   {N, gamma, theta, sigma, m, rho_star_lo, rho_star_hi, a0}
    profile:  {kind, modulation, velocity: {kind, amplitude, center, width,
               bump_amplitude, bump_center, bump_width}}
    grid:     {M}
    run:      {horizon, safety, max_steps}     # horizon: number or "f*T1a", "f*T1b", "f*T"
    monitors: {M0, M1, x0}
    region:   {x0, x2, x1, x_cut, ramp}
    output:   {snapshots, formats}             # formats from csv, gnuplot
    sweep:    {values: {name: [..]}, execute}
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .grid import RegionSpec
from .model import ParameterError, Params, ProfileSpec, VelocitySpec

MIN_M = 16
FORMATS = ("csv", "gnuplot")
HORIZON_BASES = ("T1a", "T1b", "T")

_SCHEMA: dict[str, Any] = {
    "params": {"N": int, "gamma": float, "theta": float, "sigma": float, "m": int,
               "rho_star_lo": float, "rho_star_hi": float, "a0": float},
    "profile": {"kind": str, "modulation": float,
                "velocity": {"kind": str, "amplitude": float, "center": float, "width": float,
                             "bump_amplitude": float, "bump_center": float,
                             "bump_width": float}},
    "grid": {"M": int},
    "run": {"horizon": (float, str), "safety": float, "max_steps": int},
    "monitors": {"M0": float, "M1": float, "x0": float},
    "region": {"x0": float, "x2": float, "x1": float, "x_cut": float, "ramp": float},
    "output": {"snapshots": int, "formats": list},
    "sweep": {"values": dict, "execute": bool},
}

_HORIZON_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*\*\s*(T1a|T1b|T)\s*$")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.message, self.line, self.source = message, line, source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class HorizonSpec:
    """Either an absolute time or a fraction of T1a, T1b or T = min(T1a, T1b)."""

    value: float
    base: str | None = None

    def resolve(self, T1a: float, T1b: float) -> float:
        if self.base is None:
            return self.value
        ref = {"T1a": T1a, "T1b": T1b, "T": min(T1a, T1b)}[self.base]
        return self.value * ref

    def __str__(self) -> str:
        return repr(self.value) if self.base is None else f"{self.value!r}*{self.base}"


@dataclass(frozen=True)
class RunConfig:
    params: Params
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    M: int = 256
    horizon: HorizonSpec = field(default_factory=lambda: HorizonSpec(0.5, "T1a"))
    safety: float = 0.4
    max_steps: int = 50_000_000
    M0: float | None = None
    M1: float | None = None
    x0: float = 0.25
    region: RegionSpec = field(default_factory=RegionSpec)
    snapshots: int = 64
    formats: tuple[str, ...] = ("csv", "gnuplot")
    sweep_values: dict[str, list[Any]] = field(default_factory=dict)
    sweep_execute: bool = False
    source: str = "<config>"

    def __post_init__(self) -> None:
        if self.M < MIN_M:
            raise ValueError(f"M must be at least {MIN_M}, got {self.M}")

    def echo(self) -> dict[str, Any]:
        """Plain-data form, parseable back by ``parse_config``."""
        vel = self.profile.velocity
        out: dict[str, Any] = {
            "params": asdict(self.params),
            "profile": {"kind": self.profile.kind, "modulation": self.profile.modulation},
            "grid": {"M": self.M},
            "run": {"horizon": self.horizon.value if self.horizon.base is None else str(self.horizon),
                    "safety": self.safety, "max_steps": self.max_steps},
            "monitors": {"x0": self.x0},
            "region": asdict(self.region),
            "output": {"snapshots": self.snapshots, "formats": list(self.formats)},
        }
        if isinstance(vel, VelocitySpec):
            out["profile"]["velocity"] = asdict(vel)
        for key in ("M0", "M1"):
            if getattr(self, key) is not None:
                out["monitors"][key] = getattr(self, key)
        if self.sweep_values:
            out["sweep"] = {"values": self.sweep_values, "execute": self.sweep_execute}
        return out

    def with_params(self, **changes: Any) -> "RunConfig":
        from dataclasses import replace
        return replace(self, params=replace(self.params, **changes))

    def with_grid(self, M: int) -> "RunConfig":
        from dataclasses import replace
        return replace(self, M=M)


# ---------------------------------------------------------------- parsing

def _compose(text: str, source: str):
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
        data = loader.construct_document(node) if node is not None else None
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax: {exc.problem}", mark.line + 1 if mark else None,
                          source) from None
    finally:
        loader.dispose()
    lines: dict[tuple[str, ...], int] = {}

    def walk(n, path):
        lines.setdefault(path, n.start_mark.line + 1)
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                key = (*path, str(k.value))
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    if node is not None:
        walk(node, ())
    return data, lines


def _coerce(value: Any, kind: Any, where: str, line: int | None, source: str) -> Any:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    for k in kinds:
        if k is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            if not math.isfinite(float(value)):
                raise ConfigError(f"{where}: must be finite, got {value!r}", line, source)
            return float(value)
        if k is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if k is int and isinstance(value, float) and value.is_integer():
            return int(value)
        if k in (str, bool, list, dict) and isinstance(value, k):
            return value
    names = " or ".join(k.__name__ for k in kinds)
    raise ConfigError(f"{where}: expected {names}, got {value!r}", line, source)


def _section(data: dict, schema: dict, path: tuple[str, ...], lines, source) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in data.items():
        where = ".".join((*path, str(key)))
        line = lines.get((*path, str(key)))
        if key not in schema:
            raise ConfigError(f"unknown key {where!r}", line, source)
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a mapping", line, source)
            out[key] = _section(value, kind, (*path, str(key)), lines, source)
        else:
            out[key] = _coerce(value, kind, where, line, source)
    return out


def _horizon(value: Any, line: int | None, source: str) -> HorizonSpec:
    if isinstance(value, float):
        if value <= 0:
            raise ConfigError(f"run.horizon must be positive, got {value}", line, source)
        return HorizonSpec(value)
    m = _HORIZON_RE.match(value)
    if not m:
        raise ConfigError(f"run.horizon: expected a number or 'f*T1a', 'f*T1b', 'f*T', got {value!r}",
                          line, source)
    try:
        f = float(m.group(1))
    except ValueError:
        raise ConfigError(f"run.horizon: bad factor {m.group(1)!r}", line, source) from None
    if not f > 0 or not math.isfinite(f):
        raise ConfigError(f"run.horizon factor must be positive, got {f}", line, source)
    return HorizonSpec(f, m.group(2))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    data, lines = _compose(text, source)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    cfg = _section(data, _SCHEMA, (), lines, source)
    if "params" not in cfg:
        raise ConfigError("missing section 'params'", None, source)

    def line(*path: str) -> int | None:
        for k in range(len(path), 0, -1):
            if path[:k] in lines:
                return lines[path[:k]]
        return None

    try:
        params = Params(**cfg["params"])
    except (ParameterError, TypeError) as exc:
        raise ConfigError(f"params: {exc}", line("params"), source) from None

    prof = dict(cfg.get("profile", {}))
    vel = prof.pop("velocity", {})
    try:
        velocity = VelocitySpec(**vel)
    except ValueError as exc:
        raise ConfigError(f"profile.velocity: {exc}", line("profile", "velocity"), source) from None
    if prof.get("kind") == "custom":
        raise ConfigError("profile.kind 'custom' needs a callable; not available from a config file",
                          line("profile", "kind"), source)
    try:
        profile = ProfileSpec(velocity=velocity, **prof)
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}", line("profile"), source) from None

    M = cfg.get("grid", {}).get("M", 256)
    if M < MIN_M:
        raise ConfigError(f"grid.M must be at least {MIN_M}, got {M}", line("grid", "M"), source)

    run = cfg.get("run", {})
    horizon = _horizon(run["horizon"], line("run", "horizon"), source) if "horizon" in run \
        else HorizonSpec(0.5, "T1a")
    safety = run.get("safety", 0.4)
    if not 0 < safety <= 1:
        raise ConfigError(f"run.safety must lie in (0, 1], got {safety}", line("run", "safety"), source)
    max_steps = run.get("max_steps", 50_000_000)
    if max_steps < 1:
        raise ConfigError("run.max_steps must be positive", line("run", "max_steps"), source)

    mon = cfg.get("monitors", {})
    for key in ("M0", "M1"):
        if key in mon and not mon[key] > 0:
            raise ConfigError(f"monitors.{key} must be positive", line("monitors", key), source)
    x0 = mon.get("x0", 0.25)
    if not 0 < x0 < 1:
        raise ConfigError("monitors.x0 must lie in (0, 1)", line("monitors", "x0"), source)

    try:
        region = RegionSpec(**cfg.get("region", {}))
    except ValueError as exc:
        raise ConfigError(f"region: {exc}", line("region"), source) from None

    out = cfg.get("output", {})
    snapshots = out.get("snapshots", 64)
    if snapshots < 1:
        raise ConfigError("output.snapshots must be positive", line("output", "snapshots"), source)
    formats = tuple(out.get("formats", FORMATS))
    bad = [f for f in formats if f not in FORMATS]
    if bad or "csv" not in formats:
        raise ConfigError(f"output.formats must include 'csv' and draw from {FORMATS}, got {list(formats)}",
                          line("output", "formats"), source)

    sweep = cfg.get("sweep", {})
    values = sweep.get("values", {})
    for name, vals in values.items():
        where = line("sweep", "values", name)
        if name not in _SCHEMA["params"]:
            raise ConfigError(f"sweep.values: unknown parameter {name!r}", where, source)
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep.values.{name}: expected a non-empty list", where, source)
        values[name] = [_coerce(v, _SCHEMA["params"][name], f"sweep.values.{name}", where, source)
                        for v in vals]

    return RunConfig(params, profile, M, horizon, safety, max_steps, mon.get("M0"), mon.get("M1"),
                     x0, region, snapshots, formats, values, sweep.get("execute", False), source)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
