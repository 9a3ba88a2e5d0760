"""Semi-discrete wave and flow models with their conserved functionals.

Four models share one state container:

==================  =====================  ==============================
kind                prognostic fields       right-hand side
==================  =====================  ==============================
scalar_wave         p, w (cells, cells)    p' = w,  w' = LAPL p
linear_wave         rho, v (cells, faces)  rho' = -rho0 DIV v,
                                           v' = -GRAD p / rho0, p = c^2 rho
compressible_wave   rho, v (cells, faces)  rho' = -DIVr~ v,  v' = -GRAD Q(p)
euler               rho, v (cells, faces)  rho' = -DIVr v,
                                           rv' = -ADVEC v - GRAD p
==================  =====================  ==============================

For Euler the momentum ``rv = diag(v) Interp(rho)`` is derived from the state
and ``v'`` is recovered from ``rv'`` with the discrete product rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import (
    CellField,
    FaceField,
    StaggeredGrid,
    inner_product_cells,
    inner_product_faces,
    total_cells,
    total_faces,
)
from .laws import LawDomainError, StateLaw, internal_energy
from .operators import (
    advec_values,
    div_values,
    face_density_values,
    grad_values,
    interp_values,
    interp_c2f,
    lapl,
)

__all__ = [
    "KINDS",
    "FIELD_LAYOUT",
    "ModelConfig",
    "ModelState",
    "EnergyBreakdown",
    "make_state",
    "rhs",
    "rhs_packed",
    "integration_coordinates",
    "tendency_values",
    "energy",
    "energy_rate_terms",
    "energy_rate_audit",
    "energy_rate_scale",
    "finite_difference_energy_check",
    "characteristic_time",
    "random_state",
    "smooth_random_field",
]

KINDS = ("scalar_wave", "linear_wave", "compressible_wave", "euler")

FIELD_LAYOUT = {
    "scalar_wave": (("p", "cells"), ("w", "cells")),
    "linear_wave": (("rho", "cells"), ("v", "faces")),
    "compressible_wave": (("rho", "cells"), ("v", "faces")),
    "euler": (("rho", "cells"), ("v", "faces")),
}


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    rho0: float = 1.0
    c: float = 1.0
    law: Optional[StateLaw] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if not (self.rho0 > 0 and self.c > 0):
            raise ValueError("rho0 and c must be positive")
        if self.law is None:
            law = StateLaw.linear(self.c) if self.kind == "linear_wave" else StateLaw.power(2.0)
            object.__setattr__(self, "law", law)
        if self.kind in ("compressible_wave", "euler") and self.law.kind != "power":
            raise ValueError(f"{self.kind} needs a power law")

    @property
    def nonlinear(self) -> bool:
        return self.kind in ("compressible_wave", "euler")


@dataclass(frozen=True)
class ModelState:
    """Prognostic fields of one model, in ``FIELD_LAYOUT`` order.

    Also used for time derivatives returned by :func:`rhs`; range checks
    therefore happen where the physics is evaluated, not on construction.
    """

    config: ModelConfig
    fields: tuple

    def __post_init__(self):
        layout = FIELD_LAYOUT[self.config.kind]
        if len(self.fields) != len(layout):
            raise ValueError(f"{self.config.kind} needs fields {[n for n, _ in layout]}")
        grid = self.fields[0].grid
        for f, (name, loc) in zip(self.fields, layout):
            expected = CellField if loc == "cells" else FaceField
            if not isinstance(f, expected):
                raise TypeError(f"field {name!r} must be a {expected.__name__}")
            if f.grid != grid:
                raise ValueError("all fields of a state must share one grid")
        if self.config.nonlinear and grid.dims != 1:
            raise ValueError(f"{self.config.kind} is only supported on 1-D grids")

    def __getattr__(self, name):
        if name.startswith("_") or name in ("config", "fields"):
            raise AttributeError(name)
        for f, (n, _) in zip(self.fields, FIELD_LAYOUT[self.config.kind]):
            if n == name:
                return f
        raise AttributeError(f"{self.config.kind} state has no field {name!r}")

    @property
    def kind(self) -> str:
        return self.config.kind

    @property
    def grid(self) -> StaggeredGrid:
        return self.fields[0].grid

    def pack(self) -> np.ndarray:
        return np.concatenate([f.values.ravel() for f in self.fields])

    def unpack(self, vec: np.ndarray) -> "ModelState":
        """New state on the same grid and config built from a packed vector."""
        out, start = [], 0
        for f in self.fields:
            n = f.values.size
            out.append(type(f)(f.grid, vec[start : start + n]))
            start += n
        return ModelState(self.config, tuple(out))


@dataclass(frozen=True)
class EnergyBreakdown:
    E_kin: float
    E_int: float
    mass: float
    momentum: float
    E_total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "E_total", self.E_kin + self.E_int)


def make_state(config: ModelConfig, grid: StaggeredGrid, **values) -> ModelState:
    """Build a state from raw arrays (or scalars) keyed by field name."""
    fields = []
    for name, loc in FIELD_LAYOUT[config.kind]:
        if name not in values:
            raise ValueError(f"missing field {name!r} for {config.kind}")
        shape = grid.cell_shape if loc == "cells" else grid.face_shape
        arr = np.broadcast_to(np.asarray(values[name], dtype=float), shape)
        fields.append(CellField(grid, arr) if loc == "cells" else FaceField(grid, arr))
    extra = set(values) - {n for n, _ in FIELD_LAYOUT[config.kind]}
    if extra:
        raise ValueError(f"unexpected fields {sorted(extra)} for {config.kind}")
    return ModelState(config, tuple(fields))


def _pressure(state: ModelState) -> CellField:
    return CellField(state.grid, state.config.law.pressure(state.rho.values))


def _face_rho(state: ModelState) -> FaceField:
    rho_f = interp_c2f(state.rho)
    if np.any(rho_f.values <= 0):
        raise LawDomainError("interpolated face density is not positive")
    return rho_f


def tendency_values(config: ModelConfig, grid: StaggeredGrid, a: np.ndarray, b: np.ndarray):
    """Right-hand side on raw arrays ``(a, b)`` in ``FIELD_LAYOUT`` order."""
    kind = config.kind
    if kind == "scalar_wave":
        return b, div_values(grad_values(a, grid), grid)
    if kind == "linear_wave":
        return (
            -config.rho0 * div_values(b, grid),
            -(config.c**2 / config.rho0) * grad_values(a, grid),
        )
    law = config.law
    p = law.pressure(a)
    if kind == "compressible_wave":
        r = face_density_values(p, law, kind, grid)
        return -div_values(r * b, grid), -grad_values(law.Q(p), grid)
    drho, drv, rho_f = _euler_tendency(config, grid, p, a, b)
    # product rule: rv' = v' Interp(rho) + v Interp(rho')
    dv = (drv - b * interp_values(drho, grid)) / rho_f
    return drho, dv


def _face_density_positive(rho, grid):
    rho_f = interp_values(rho, grid)
    if np.any(rho_f <= 0):
        raise LawDomainError("interpolated face density is not positive")
    return rho_f


def _euler_tendency(config, grid, p, rho, v):
    """``(rho', (rv)', Interp(rho))`` for the Euler model."""
    rho_f = _face_density_positive(rho, grid)
    m = face_density_values(p, config.law, "euler", grid) * v
    drho = -div_values(m, grid)
    drv = -advec_values(m, v, grid) - grad_values(p, grid)
    return drho, drv, rho_f


def rhs(state: ModelState) -> ModelState:
    """Time derivative of every prognostic field.

    Euler evolves ``rv = diag(v) Interp(rho)`` through
    ``rv' = -ADVEC v - GRAD p`` with mass flux ``m = diag(r) v``; the returned
    ``v'`` is recovered from ``rv'`` by the product rule.
    """
    grid = state.grid
    da, db = tendency_values(state.config, grid, *(f.values for f in state.fields))
    f0, f1 = state.fields
    return ModelState(state.config, (type(f0)._owned(grid, da), type(f1)._owned(grid, db)))


def rhs_packed(config: ModelConfig, grid: StaggeredGrid):
    """Right-hand side as a map on packed state vectors."""
    (_, loc_a), (_, loc_b) = FIELD_LAYOUT[config.kind]
    shape_a = grid.cell_shape
    shape_b = grid.cell_shape if loc_b == "cells" else grid.face_shape
    n_a = grid.n_cell_dofs

    def f(y: np.ndarray) -> np.ndarray:
        da, db = tendency_values(
            config, grid, y[:n_a].reshape(shape_a), y[n_a:].reshape(shape_b)
        )
        return np.concatenate((da.ravel(), db.ravel()))

    return f


def integration_coordinates(config: ModelConfig, grid: StaggeredGrid):
    """``(encode, decode, f)`` for the vector that time steppers advance.

    Euler is stepped in the conserved pair ``(rho, Interp(rho) v)``, which
    makes momentum a linear function of the coordinates and hence exactly
    preserved by any Runge-Kutta method. Every other model is stepped in its
    packed fields, already linear in mass and momentum.
    """
    if config.kind != "euler":
        ident = lambda y: y  # noqa: E731
        return ident, ident, rhs_packed(config, grid)
    n = grid.n_cell_dofs
    law = config.law

    def encode(y):
        return np.concatenate((y[:n], interp_values(y[:n], grid) * y[n:]))

    def decode(u):
        return np.concatenate((u[:n], u[n:] / _face_density_positive(u[:n], grid)))

    def f(u):
        rho, rv = u[:n], u[n:]
        rho_f = _face_density_positive(rho, grid)
        drho, drv, _ = _euler_tendency(config, grid, law.pressure(rho), rho, rv / rho_f)
        return np.concatenate((drho, drv))

    return encode, decode, f


def momentum_rate(state: ModelState, tendency: ModelState) -> FaceField:
    """Face momentum tendency: ``rv'`` for Euler, ``rho0 v'`` otherwise."""
    if state.kind == "euler":
        return tendency.v * interp_c2f(state.rho) + state.v * interp_c2f(tendency.rho)
    return tendency.v * state.config.rho0


def energy(state: ModelState) -> EnergyBreakdown:
    cfg = state.config
    kind = cfg.kind
    if kind == "scalar_wave":
        p, w = state.p, state.w
        return EnergyBreakdown(
            0.5 * inner_product_cells(w, w), -0.5 * inner_product_cells(p, lapl(p)), 0.0, 0.0
        )
    rho, v = state.rho, state.v
    mass = total_cells(rho)
    if kind == "linear_wave":
        return EnergyBreakdown(
            0.5 * cfg.rho0 * inner_product_faces(v, v),
            cfg.c**2 / (2 * cfg.rho0) * inner_product_cells(rho, rho),
            mass,
            cfg.rho0 * total_faces(v),
        )
    p = _pressure(state)
    e_int = p.map(lambda x: internal_energy(cfg.law, kind, x, cfg.rho0))
    if kind == "compressible_wave":
        return EnergyBreakdown(
            0.5 * cfg.rho0 * inner_product_faces(v, v),
            total_cells(e_int),
            mass,
            cfg.rho0 * total_faces(v),
        )
    rv = v * _face_rho(state)
    return EnergyBreakdown(0.5 * inner_product_faces(v, rv), total_cells(e_int), mass, total_faces(rv))


def energy_rate_terms(state: ModelState, tendency: Optional[ModelState] = None) -> tuple:
    """The separate contributions to dE/dt obtained by differentiating the
    energy functional and substituting the right-hand side.

    They cancel in exact arithmetic; their magnitudes set the scale against
    which the sum is judged.
    """
    cfg = state.config
    d = rhs(state) if tendency is None else tendency
    kind = cfg.kind
    if kind == "scalar_wave":
        p = state.p
        return (
            inner_product_cells(state.w, d.w),
            -0.5 * inner_product_cells(d.p, lapl(p)),
            -0.5 * inner_product_cells(p, lapl(d.p)),
        )
    v = state.v
    if kind == "linear_wave":
        return (
            cfg.rho0 * inner_product_faces(v, d.v),
            cfg.c**2 / cfg.rho0 * inner_product_cells(state.rho, d.rho),
        )
    p = _pressure(state)
    if kind == "compressible_wave":
        Sp = p.map(cfg.law.S)
        return (
            cfg.rho0 * inner_product_faces(v, d.v),
            cfg.rho0 * total_cells(Sp * d.rho),
        )
    rho_f = _face_rho(state)
    drv = d.v * rho_f + v * interp_c2f(d.rho)
    Qp = p.map(cfg.law.Q)
    return (
        inner_product_faces(v, drv),
        -0.5 * inner_product_faces(v * v, interp_c2f(d.rho)),
        total_cells(Qp * d.rho),
    )


def energy_rate_audit(state: ModelState) -> float:
    """dE/dt of the semi-discrete model at ``state``; zero up to round-off."""
    return float(sum(energy_rate_terms(state)))


def energy_rate_scale(state: ModelState) -> float:
    return float(sum(abs(t) for t in energy_rate_terms(state)))


def characteristic_time(state: ModelState) -> float:
    """Grid spacing over the fastest signal speed."""
    cfg = state.config
    if cfg.kind == "scalar_wave":
        speed = 1.0
    elif cfg.kind == "linear_wave":
        speed = cfg.c
    else:
        p = cfg.law.pressure(state.rho.values)
        speed = float(np.max(np.abs(state.v.values)) + np.max(cfg.law.sound_speed(p)))
    return state.grid.h / speed


def finite_difference_energy_check(state: ModelState, dt: Optional[float] = None) -> float:
    """Central difference of the energy along the right-hand side direction.

    ``(E(y + dt f) - E(y - dt f)) / (2 dt)``, an oracle for
    :func:`energy_rate_audit` that never touches its algebra.
    """
    if dt is None:
        dt = 1e-6 * characteristic_time(state)
    y = state.pack()
    k = rhs(state).pack()
    plus = energy(state.unpack(y + dt * k)).E_total
    minus = energy(state.unpack(y - dt * k)).E_total
    return (plus - minus) / (2 * dt)


def smooth_random_field(coords, lengths, rng, n_modes, amplitude):
    """Random trigonometric polynomial with max-norm at most ``amplitude``."""
    out = np.zeros_like(coords[0])
    total = 0.0
    ranges = [range(0, n_modes + 1)] * len(coords)
    for ks in np.ndindex(*[len(r) for r in ranges]):
        if not any(ks):
            continue
        phase = sum(2 * np.pi * k * x / L for k, x, L in zip(ks, coords, lengths))
        a, b = rng.uniform(-1.0, 1.0, size=2)
        out = out + a * np.cos(phase) + b * np.sin(phase)
        total += abs(a) + abs(b)
    return amplitude * out / total


def random_state(
    config: ModelConfig,
    grid: StaggeredGrid,
    rng: np.random.Generator,
    n_modes: int = 3,
    amplitude: float = 0.3,
    offset: float = 1.0,
) -> ModelState:
    """Smooth random state built from low-wavenumber sines and cosines.

    Densities of the nonlinear models get ``offset`` added and stay within
    ``offset +- amplitude``; other fields have zero mean part plus a random
    constant of size ``amplitude/2``.
    """
    n_modes = max(1, min(n_modes, min(grid.n_cells) // 2))
    values = {}
    for name, loc in FIELD_LAYOUT[config.kind]:
        if loc == "cells":
            arr = smooth_random_field(grid.cell_centers(), grid.length, rng, n_modes, amplitude)
        else:
            comps = [
                smooth_random_field(grid.face_centers(k), grid.length, rng, n_modes, amplitude)
                for k in range(grid.dims)
            ]
            arr = comps[0] if grid.dims == 1 else np.stack(comps)
        if name == "rho" and config.nonlinear:
            arr = arr + offset
        else:
            arr = arr + rng.uniform(-0.5, 0.5) * amplitude
        values[name] = arr
    return make_state(config, grid, **values)
