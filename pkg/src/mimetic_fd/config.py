"""Run configuration: a small TOML file with ``grid``, ``law``,
``integrator`` and ``init.<field>`` tables.

Example (Euler, RK4)::

    model = "euler"
    steps = 250
    stride = 25

    [grid]
    dims = 1
    n_cells = 16
    length = 8.0

    [law]
    kind = "power"
    gamma = 3.0

    [integrator]
    scheme = "rk4"
    dt = 0.004

    [init.rho]
    preset = "sine"
    amplitude = 0.7
    offset = 1.0

    [init.v]
    preset = "sine"
    amplitude = 2.0
    phase = 1.5707963267948966
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .grid import StaggeredGrid, build_grid
from .integrators import IntegratorConfig
from .laws import StateLaw
from .models import FIELD_LAYOUT, KINDS, ModelConfig, ModelState, make_state

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "initial_state", "PRESETS"]

PRESETS = {
    "uniform": {"value": 0.0},
    "sine": {"mode": 1, "amplitude": 1.0, "offset": 0.0, "phase": 0.0},
    "gaussian": {"center": None, "width": 0.1, "amplitude": 1.0, "offset": 0.0},
}


class ConfigError(ValueError):
    """Unreadable, inconsistent or unphysical run configuration."""


@dataclass
class RunConfig:
    model: ModelConfig
    grid: StaggeredGrid
    integrator: IntegratorConfig
    init: dict
    steps: int = 100
    stride: int = 1
    out: Optional[str] = None
    t_end: Optional[float] = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def final_time(self) -> float:
        return self.t_end if self.t_end is not None else self.steps * self.integrator.dt


def _take(table: dict, allowed: set, where: str) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(extra)}")
    return table


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    try:
        return _parse(data)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse(data: dict) -> RunConfig:
    _take(data, {"model", "steps", "stride", "out", "t_end", "grid", "law", "integrator", "init"}, "top level")
    kind = data.get("model")
    if kind not in KINDS:
        raise ConfigError(f"model must be one of {KINDS}, got {kind!r}")

    g = _take(data.get("grid", {}), {"dims", "n_cells", "length"}, "grid")
    grid = build_grid(int(g.get("dims", 1)), g.get("n_cells", 32), g.get("length", 1.0))

    law_t = _take(data.get("law", {}), {"kind", "gamma", "C", "p_Q", "p_S", "rho0", "c"}, "law")
    rho0 = float(law_t.get("rho0", 1.0))
    c = float(law_t.get("c", 1.0))
    law_kind = law_t.get("kind", "linear" if kind == "linear_wave" else "power")
    if law_kind == "linear":
        law = StateLaw.linear(c)
    elif law_kind == "power":
        law = StateLaw.power(
            law_t.get("gamma", 2.0), law_t.get("C", 1.0), law_t.get("p_Q"), law_t.get("p_S")
        )
    else:
        raise ConfigError(f"law.kind must be 'power' or 'linear', got {law_kind!r}")
    model = ModelConfig(kind, rho0=rho0, c=c, law=law)

    it = _take(data.get("integrator", {}), {"scheme", "dt", "tol", "max_iter"}, "integrator")
    integrator = IntegratorConfig(
        it.get("scheme", "rk4"), float(it.get("dt", 1e-3)), float(it.get("tol", 1e-13)), int(it.get("max_iter", 100))
    )

    names = [n for n, _ in FIELD_LAYOUT[kind]]
    init = _take(data.get("init", {}), set(names), "init")
    presets = {}
    for name in names:
        entry = dict(init.get(name, {"preset": "uniform", "value": 1.0 if name == "rho" and model.nonlinear else 0.0}))
        preset = entry.pop("preset", "uniform")
        if preset not in PRESETS:
            raise ConfigError(f"init.{name}: unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        _take(entry, set(PRESETS[preset]), f"init.{name}")
        presets[name] = (preset, {**PRESETS[preset], **entry})

    steps = int(data.get("steps", 100))
    stride = int(data.get("stride", 1))
    if steps < 0 or stride < 1:
        raise ConfigError("need steps >= 0 and stride >= 1")
    t_end = data.get("t_end")
    cfg = RunConfig(model, grid, integrator, presets, steps, stride, data.get("out"),
                    None if t_end is None else float(t_end), data)
    initial_state(cfg)  # range checks happen here, before anything is written
    return cfg


def _as_axes(value, dims, name):
    vals = list(value) if isinstance(value, (list, tuple)) else [value] * dims
    if len(vals) != dims:
        raise ConfigError(f"{name} needs {dims} entries")
    return [float(v) for v in vals]


def _evaluate(preset: str, params: dict, coords, grid: StaggeredGrid) -> np.ndarray:
    if preset == "uniform":
        return np.full(coords[0].shape, float(params["value"]))
    if preset == "sine":
        modes = _as_axes(params["mode"], grid.dims, "sine mode")
        phase = sum(2 * math.pi * k * x / L for k, x, L in zip(modes, coords, grid.length))
        return params["amplitude"] * np.sin(phase + params["phase"]) + params["offset"]
    center = params["center"]
    if center is None:
        center = [L / 2 for L in grid.length]
    centers = _as_axes(center, grid.dims, "gaussian center")
    width = float(params["width"])
    if not width > 0:
        raise ConfigError("gaussian width must be positive")
    r2 = np.zeros(coords[0].shape)
    for x, x0, L in zip(coords, centers, grid.length):
        d = (x - x0 + L / 2) % L - L / 2  # periodic distance
        r2 = r2 + d**2
    return params["amplitude"] * np.exp(-r2 / (2 * width**2)) + params["offset"]


def initial_state(cfg: RunConfig) -> ModelState:
    grid = cfg.grid
    values = {}
    for name, loc in FIELD_LAYOUT[cfg.model.kind]:
        preset, params = cfg.init[name]
        if loc == "cells":
            values[name] = _evaluate(preset, params, grid.cell_centers(), grid)
        else:
            comps = [_evaluate(preset, params, grid.face_centers(k), grid) for k in range(grid.dims)]
            values[name] = comps[0] if grid.dims == 1 else np.stack(comps)
    if cfg.model.nonlinear and np.min(values["rho"]) <= 0:
        raise ConfigError(
            f"init.rho leaves the admissible range: min density {np.min(values['rho']):.6g} <= 0"
        )
    try:
        return make_state(cfg.model, grid, **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
