"""Run configuration: TOML file < command-line flags, with a canonical echo.

Example file::

    [model]
    J = 0.1
    omega = 1.0
    g = 1.0
    beta = "inf"

    [grid]
    t_max = 12.566370614359172
    n_points = 2001

    [engine]
    name = "closed"
    kappa = "1"

    [sweep]
    g_range = "0.25:3.0:0.25"
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import DomainError, ModelParams

# table -> field names; the TOML layout of the echo
SECTIONS = {
    "model": ("J", "omega", "g", "beta"),
    "grid": ("t_max", "n_points"),
    "engine": ("name", "kappa", "include_hs", "n_max", "rtol", "atol"),
    "state": ("initial",),
    "sweep": ("g_range", "j_list"),
    "nonmarkov": ("horizon", "n_phases"),
    "correlator": ("kind",),
    "output": ("out", "svg"),
}
# config keys whose names differ from RunConfig attributes
_ALIASES = {("engine", "name"): "engine", ("engine", "kappa"): "kappa"}


def _attr(section, key):
    return _ALIASES.get((section, key), key)


@dataclass
class RunConfig:
    command: str = "dynamics"
    J: float = 0.1
    omega: float = 1.0
    g: float = 1.0
    beta: float = math.inf
    t_max: float = 4 * math.pi
    n_points: int = 2001
    engine: str = "closed"
    kappa: str = "1"
    include_hs: bool = False
    n_max: int = 40
    rtol: float = 1e-10
    atol: float = 1e-10
    initial: str = "ground"
    g_range: str = "0.25:3.0:0.25"
    j_list: list = field(default_factory=list)
    horizon: float = 2 * math.pi
    n_phases: int = 64
    kind: str = "normal"
    out: str = "-"
    svg: bool = False

    @property
    def params(self) -> ModelParams:
        return ModelParams(J=self.J, omega=self.omega, g=self.g, beta=self.beta)

    def g_values(self) -> list[float]:
        return parse_range(self.g_range)

    def j_values(self) -> list[float]:
        return [float(j) for j in self.j_list] if self.j_list else [self.J]

    def grid(self):
        import numpy as np
        if self.n_points < 2 or not self.t_max > 0:
            raise DomainError("grid needs n_points >= 2 and t_max > 0")
        return np.linspace(0.0, self.t_max, self.n_points)

    def update(self, values: dict):
        names = {f.name: f for f in dataclasses.fields(self)}
        for key, value in values.items():
            if value is None:
                continue
            if key not in names:
                raise DomainError(f"unknown configuration key {key!r}")
            setattr(self, key, _coerce(names[key], value))
        return self

    def to_toml(self) -> str:
        lines = [f'command = {_fmt(self.command)}']
        for section, keys in SECTIONS.items():
            lines.append("")
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_fmt(getattr(self, _attr(section, key)))}")
        return "\n".join(lines) + "\n"


def _coerce(f: dataclasses.Field, value):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
    if kind == "float":
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinite", "infinity"):
                return math.inf
            return float(text)
        return float(value)
    if kind == "int":
        if isinstance(value, float) and not value.is_integer():
            raise DomainError(f"{f.name} must be an integer, got {value!r}")
        return int(value)
    if kind == "bool":
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if kind == "list":
        if isinstance(value, str):
            return [float(v) for v in value.replace(",", " ").split()]
        return [float(v) for v in value]
    return str(value)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return '"inf"'
        return repr(value)
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(float(v)) for v in value) + "]"
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def load_config(path) -> dict:
    """Flatten a TOML config file into ``RunConfig`` keyword values."""
    with open(Path(path), "rb") as fh:
        data = tomllib.load(fh)
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            if key not in SECTIONS:
                raise DomainError(f"unknown config section [{key}]")
            for sub, v in value.items():
                if sub not in SECTIONS[key]:
                    raise DomainError(f"unknown key {sub!r} in [{key}]")
                flat[_attr(key, sub)] = v
        else:
            flat[key] = value
    return flat


def parse_range(spec: str) -> list[float]:
    """``'A:B:STEP'`` inclusive of B (to rounding), or a comma list, or one value."""
    spec = str(spec).strip()
    if ":" not in spec:
        return [float(v) for v in spec.replace(",", " ").split()]
    parts = spec.split(":")
    if len(parts) != 3:
        raise DomainError(f"range must look like A:B:STEP, got {spec!r}")
    a, b, step = (float(p) for p in parts)
    if step <= 0 or b < a:
        raise DomainError(f"invalid range {spec!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 12) for k in range(n + 1)]
