"""Run configuration: a flat document of dotted keys.

Example::

    grid.r_min = 3.0
    grid.n_points = 1024
    initial_data.family = "mass_aspect"
    initial_data.M = 1.0
    surfaces.radii = [10, 20, 50, 100]

The syntax is TOML, so ``[grid]`` tables work too. Unknown keys are
rejected. Every key has a default (see ``DEFAULTS``).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, HawkflowError
from .flow_engine import Scheme, SchemeConfig
from .radial_metric import (
    MetricProfile,
    RadialGrid,
    build_grid,
    perturbed_ale_profile,
    schwarzschild_profile,
)
from .surface_flow import DEFAULT_EPSILON_R, SpeedKind

__all__ = ["DEFAULTS", "RunConfig", "parse_config", "load_config", "config_from_mapping"]

DEFAULTS: Dict[str, Any] = {
    "grid.r_min": 3.0,
    "grid.r_max": 200.0,
    "grid.n_points": 2048,
    "initial_data.family": "mass_aspect",
    "initial_data.M": 1.0,
    "initial_data.a": 1.0,
    "scheme.method": "explicit_euler",
    "scheme.cfl_safety": 0.4,
    "scheme.fixed_dt": None,
    "scheme.max_newton_iters": 25,
    "scheme.newton_tol": 1e-12,
    "scheme.surface_cfl": 0.1,
    "flow.t_end": 1.0,
    "flow.sample_every": 1,
    "surfaces.radii": (10.0, 20.0, 50.0, 100.0),
    "surfaces.speed": "forward",
    "guards.epsilon_R": DEFAULT_EPSILON_R,
    "output.directory": "out",
    "output.emit_svg": False,
    "seed": 0,
}

_FLOAT_KEYS = {
    "grid.r_min", "grid.r_max", "initial_data.M", "initial_data.a",
    "scheme.cfl_safety", "scheme.fixed_dt", "scheme.newton_tol", "scheme.surface_cfl",
    "flow.t_end", "guards.epsilon_R",
}
_INT_KEYS = {"grid.n_points", "scheme.max_newton_iters", "flow.sample_every", "seed"}
_STR_KEYS = {"initial_data.family", "scheme.method", "surfaces.speed", "output.directory"}
_BOOL_KEYS = {"output.emit_svg"}
_FAMILIES = ("mass_aspect", "schwarzschild")


@dataclass(frozen=True)
class RunConfig:
    grid: RadialGrid
    family: str = "mass_aspect"
    mass: float = 1.0
    scale: float = 1.0
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    t_end: float = 1.0
    sample_every: int = 1
    radii: Tuple[float, ...] = (10.0, 20.0, 50.0, 100.0)
    speed: SpeedKind = SpeedKind.FORWARD
    epsilon_R: float = DEFAULT_EPSILON_R
    output_dir: str = "out"
    emit_svg: bool = False
    seed: int = 0

    def initial_profile(self, grid: Optional[RadialGrid] = None) -> MetricProfile:
        grid = self.grid if grid is None else grid
        if self.family == "schwarzschild":
            return schwarzschild_profile(self.mass, grid)
        return perturbed_ale_profile("cubic", grid, M=self.mass, a=self.scale)

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "grid.r_min": self.grid.r_min,
            "grid.r_max": self.grid.r_max,
            "grid.n_points": self.grid.n_points,
            "initial_data.family": self.family,
            "initial_data.M": self.mass,
            "initial_data.a": self.scale,
            "scheme.method": self.scheme.scheme.value,
            "scheme.cfl_safety": self.scheme.cfl_safety,
            "scheme.fixed_dt": self.scheme.fixed_dt,
            "scheme.max_newton_iters": self.scheme.max_newton_iters,
            "scheme.newton_tol": self.scheme.newton_tol,
            "scheme.surface_cfl": self.scheme.surface_cfl,
            "flow.t_end": self.t_end,
            "flow.sample_every": self.sample_every,
            "surfaces.radii": tuple(self.radii),
            "surfaces.speed": self.speed.value,
            "guards.epsilon_R": self.epsilon_R,
            "output.directory": self.output_dir,
            "output.emit_svg": self.emit_svg,
            "seed": self.seed,
        }

    def to_text(self) -> str:
        """Dotted-key document that :func:`parse_config` reads back unchanged."""
        lines = []
        for key, value in self.to_mapping().items():
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        merged = self.to_mapping()
        merged.update(overrides)
        return config_from_mapping(merged)

    def with_output(self, directory=None, emit_svg=None) -> "RunConfig":
        return replace(
            self,
            output_dir=self.output_dir if directory is None else str(directory),
            emit_svg=self.emit_svg if emit_svg is None else bool(emit_svg),
        )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


def _flatten(node: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in node.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def _coerce(key: str, value):
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a number or string, got {value!r}")
    if key in _FLOAT_KEYS:
        if value is None and key == "scheme.fixed_dt":
            return None
        if not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if key in _INT_KEYS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if key == "surfaces.radii":
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(key, "expected a non-empty list of radii")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(key, "radii must be numbers")
        return tuple(float(v) for v in value)
    raise ConfigError(key, "unknown key")


def config_from_mapping(flat: Mapping[str, Any]) -> RunConfig:
    """Validate a flat ``{dotted.key: value}`` mapping into a :class:`RunConfig`."""
    for key in flat:
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown key")
    values = dict(DEFAULTS)
    values.update({k: _coerce(k, v) for k, v in flat.items()})

    try:
        grid = build_grid(values["grid.r_min"], values["grid.r_max"], values["grid.n_points"])
    except HawkflowError as exc:
        raise ConfigError("grid", str(exc)) from None

    family = values["initial_data.family"]
    if family not in _FAMILIES:
        raise ConfigError("initial_data.family", f"must be one of {_FAMILIES}, got {family!r}")
    M, a = values["initial_data.M"], values["initial_data.a"]
    if M < 0:
        raise ConfigError("initial_data.M", "mass must be non-negative")
    if a <= 0:
        raise ConfigError("initial_data.a", "scale must be positive")
    if family == "schwarzschild" and grid.r_min <= 2.0 * M:
        raise ConfigError("grid.r_min", f"must exceed the horizon radius 2M = {2.0 * M}")

    try:
        method = Scheme(values["scheme.method"])
    except ValueError:
        raise ConfigError("scheme.method", f"unknown scheme {values['scheme.method']!r}") from None
    try:
        scheme = SchemeConfig(
            scheme=method,
            cfl_safety=values["scheme.cfl_safety"],
            fixed_dt=values["scheme.fixed_dt"],
            max_newton_iters=values["scheme.max_newton_iters"],
            newton_tol=values["scheme.newton_tol"],
            surface_cfl=values["scheme.surface_cfl"],
        )
    except HawkflowError as exc:
        raise ConfigError("scheme", str(exc)) from None

    if values["flow.t_end"] < 0:
        raise ConfigError("flow.t_end", "must be non-negative")
    if values["flow.sample_every"] < 1:
        raise ConfigError("flow.sample_every", "must be at least 1")
    for r in values["surfaces.radii"]:
        if not grid.r_min < r < grid.r_max:
            raise ConfigError("surfaces.radii", f"radius {r} not inside ({grid.r_min}, {grid.r_max})")
    try:
        speed = SpeedKind(values["surfaces.speed"])
    except ValueError:
        raise ConfigError("surfaces.speed", "must be 'forward' or 'backward'") from None
    if not values["guards.epsilon_R"] > 0:
        raise ConfigError("guards.epsilon_R", "must be positive")

    config = RunConfig(
        grid=grid,
        family=family,
        mass=M,
        scale=a,
        scheme=scheme,
        t_end=values["flow.t_end"],
        sample_every=values["flow.sample_every"],
        radii=values["surfaces.radii"],
        speed=speed,
        epsilon_R=values["guards.epsilon_R"],
        output_dir=values["output.directory"],
        emit_svg=values["output.emit_svg"],
        seed=values["seed"],
    )
    try:
        config.initial_profile()
    except HawkflowError as exc:
        raise ConfigError("initial_data", str(exc)) from None
    return config


def parse_config(text: str) -> RunConfig:
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", str(exc)) from None
    return config_from_mapping(_flatten(document))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
