"""Explicit RK4 and the implicit midpoint rule.

Both work on flat numpy vectors; :func:`step` adapts them to model states,
stepping each model in the coordinates given by
:func:`~mimetic_fd.models.integration_coordinates`.
Implicit midpoint preserves every quadratic invariant of a linear flow, so
on the scalar- and linear-wave models the energy drift is set by the
fixed-point tolerance alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import ModelState, integration_coordinates

__all__ = [
    "ConvergenceError",
    "IntegratorConfig",
    "rk4_step",
    "implicit_midpoint_step",
    "step",
    "advance",
    "coordinates",
]

SCHEMES = ("rk4", "implicit_midpoint")


class ConvergenceError(RuntimeError):
    """Fixed-point iteration of the implicit midpoint rule did not converge."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    tol: float = 1e-13
    max_iter: int = 100

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def implicit_midpoint_step(
    f: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    dt: float,
    tol: float = 1e-13,
    max_iter: int = 100,
) -> np.ndarray:
    """Solve ``k = f(y + dt/2 k)`` by fixed-point iteration, return ``y + dt k``.

    Iteration stops once the implied state update changes by at most ``tol``
    in the max-norm.
    """
    k = f(y)
    change = np.inf
    for _ in range(max_iter):
        k_new = f(y + 0.5 * dt * k)
        change = abs(dt) * float(np.max(np.abs(k_new - k)))
        k = k_new
        if change <= tol:
            return y + dt * k
    raise ConvergenceError(
        f"implicit midpoint did not converge in {max_iter} iterations "
        f"(last update {change:.3e} > tol {tol:.1e}); reduce dt or loosen tol",
        change,
    )


def coordinates(template: ModelState):
    """``(encode, decode, f)``: packed fields to stepping coordinates, back,
    and the right-hand side in stepping coordinates."""
    return integration_coordinates(template.config, template.grid)


def advance(f, y: np.ndarray, config: IntegratorConfig) -> np.ndarray:
    if config.scheme == "rk4":
        return rk4_step(f, y, config.dt)
    return implicit_midpoint_step(f, y, config.dt, config.tol, config.max_iter)


def step(state: ModelState, config: IntegratorConfig) -> ModelState:
    encode, decode, f = coordinates(state)
    return state.unpack(decode(advance(f, encode(state.pack()), config)))
