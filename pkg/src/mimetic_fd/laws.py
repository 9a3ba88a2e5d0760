"""Constitutive laws ``rho = R(p)`` and the antiderivatives built from them.

``Q`` and ``S`` are antiderivatives of ``1/R`` and ``1/R**2``::

    Q(p) = int_{p_Q}^p dq / R(q)        S(p) = int_{p_S}^p dq / R(q)**2

Lower limits are explicit anchors. They only shift ``Q`` and ``S`` by
constants, which moves the internal energy by a multiple of the (conserved)
mass and volume.

Two law families are supported:

* ``power``: ``R(p) = C * p**(1/gamma)``, the isentropic gas, with ``p > 0``;
* ``linear``: acoustic law ``p = c**2 * rho``, i.e. ``R(p) = p / c**2``. Only
  the linear-wave model uses it, and that model never needs ``Q`` or ``S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LawDomainError", "StateLaw", "internal_energy"]


class LawDomainError(ValueError):
    """Pressure or density outside the admissible range of a law."""


@dataclass(frozen=True)
class StateLaw:
    kind: str = "power"
    gamma: float = 2.0
    C: float = 1.0
    c: float = 1.0
    p_Q: Optional[float] = None
    p_S: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("power", "linear"):
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.kind == "linear":
            if not self.c > 0:
                raise ValueError("linear law needs c > 0")
            return
        if not (self.gamma > 0 and self.C > 0):
            raise ValueError("power law needs gamma > 0 and C > 0")
        # 1/R is integrable at 0 iff gamma > 1; 1/R^2 iff gamma > 2
        if self.p_Q is None:
            object.__setattr__(self, "p_Q", 0.0 if self.gamma > 1 else 1.0)
        if self.p_S is None:
            object.__setattr__(self, "p_S", 1.0)
        if self.p_Q < 0 or (self.p_Q == 0 and self.gamma <= 1):
            raise ValueError(f"anchor p_Q={self.p_Q} not admissible for gamma={self.gamma}")
        if self.p_S < 0 or (self.p_S == 0 and self.gamma <= 2):
            raise ValueError(f"anchor p_S={self.p_S} not admissible for gamma={self.gamma}")

    @classmethod
    def power(cls, gamma=2.0, C=1.0, p_Q=None, p_S=None) -> "StateLaw":
        return cls("power", gamma=float(gamma), C=float(C), p_Q=p_Q, p_S=p_S)

    @classmethod
    def linear(cls, c=1.0) -> "StateLaw":
        return cls("linear", c=float(c))

    def _check_p(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "power" and np.any(~(p > 0)):
            raise LawDomainError("power law needs p > 0")
        return p

    def _need_power(self, what):
        if self.kind != "power":
            raise LawDomainError(f"{what} is only defined for power laws here")

    def R(self, p):
        p = self._check_p(p)
        if self.kind == "linear":
            return p / self.c**2
        return self.C * p ** (1.0 / self.gamma)

    def dR(self, p):
        p = self._check_p(p)
        if self.kind == "linear":
            return np.full_like(p, 1.0 / self.c**2)
        g = self.gamma
        return (self.C / g) * p ** (1.0 / g - 1.0)

    def pressure(self, rho):
        """Inverse of ``R``."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "linear":
            return self.c**2 * rho
        if np.any(~(rho > 0)):
            raise LawDomainError("power law needs rho > 0")
        return (rho / self.C) ** self.gamma

    def sound_speed(self, p):
        """``sqrt(dp/drho)``."""
        return 1.0 / np.sqrt(self.dR(p))

    def Q(self, p):
        self._need_power("Q")
        p = self._check_p(p)
        g, C = self.gamma, self.C
        if g == 1.0:
            return np.log(p / self.p_Q) / C
        a = (g - 1.0) / g
        return (g / (C * (g - 1.0))) * (p**a - self.p_Q**a)

    def dQ(self, p):
        return 1.0 / self.R(p)

    def S(self, p):
        self._need_power("S")
        p = self._check_p(p)
        g, C = self.gamma, self.C
        if g == 2.0:
            return np.log(p / self.p_S) / C**2
        a = (g - 2.0) / g
        return (g / (C**2 * (g - 2.0))) * (p**a - self.p_S**a)

    def dS(self, p):
        return 1.0 / self.R(p) ** 2

    def Q_diff(self, p_left, p_right):
        """``Q(p_right) - Q(p_left)`` without cancellation for close pressures."""
        self._need_power("Q")
        g, C = self.gamma, self.C
        if g == 1.0:
            return _power_diff(self._check_p(p_left), self._check_p(p_right), 0.0, 1.0 / C)
        return _power_diff(self._check_p(p_left), self._check_p(p_right), (g - 1.0) / g, g / (C * (g - 1.0)))

    def S_diff(self, p_left, p_right):
        """``S(p_right) - S(p_left)`` without cancellation for close pressures."""
        self._need_power("S")
        g, C = self.gamma, self.C
        if g == 2.0:
            return _power_diff(self._check_p(p_left), self._check_p(p_right), 0.0, 1.0 / C**2)
        return _power_diff(self._check_p(p_left), self._check_p(p_right), (g - 2.0) / g, g / (C**2 * (g - 2.0)))


def _power_diff(pl, pr, a, k):
    # k * (pr^a - pl^a), or k * log(pr/pl) when a == 0
    t = np.log1p((pr - pl) / pl)
    if a == 0.0:
        return k * t
    return k * pl**a * np.expm1(a * t)


def internal_energy(law: StateLaw, model_kind: str, p, rho0: float = 1.0):
    """Internal energy density as a function of pressure.

    ``compressible_wave``: ``rho0 * (R(p) S(p) - Q(p))``, whose p-derivative
    is ``rho0 R'(p) S(p)``.
    ``euler``: ``R(p) Q(p) - p``, whose p-derivative is ``R'(p) Q(p)``.
    """
    if model_kind == "compressible_wave":
        return rho0 * (law.R(p) * law.S(p) - law.Q(p))
    if model_kind == "euler":
        return law.R(p) * law.Q(p) - np.asarray(p, dtype=float)
    raise ValueError(f"no pressure-based internal energy for {model_kind!r}")


def internal_energy_slope(law: StateLaw, model_kind: str, p, rho0: float = 1.0):
    """Closed-form p-derivative of :func:`internal_energy`."""
    if model_kind == "compressible_wave":
        return rho0 * law.dR(p) * law.S(p)
    if model_kind == "euler":
        return law.dR(p) * law.Q(p)
    raise ValueError(f"no pressure-based internal energy for {model_kind!r}")
