import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimetic_fd.audit import integrate
from mimetic_fd.grid import build_grid
from mimetic_fd.integrators import (
    ConvergenceError,
    IntegratorConfig,
    coordinates,
    implicit_midpoint_step,
    rk4_step,
    step,
)
from mimetic_fd.laws import StateLaw
from mimetic_fd.models import KINDS, ModelConfig, energy, energy_rate_scale, make_state, random_state

from . import oracle


def test_config_validation():
    for bad in (dict(scheme="euler_forward"), dict(dt=0.0), dict(dt=-1.0), dict(tol=0.0), dict(max_iter=0)):
        with pytest.raises(ValueError):
            IntegratorConfig(**{"scheme": "rk4", "dt": 0.1, **bad})


@pytest.mark.parametrize("scheme", ["rk4", "implicit_midpoint"])
def test_zero_rhs_leaves_state_unchanged(scheme):
    y = np.array([1.0, -2.0, 3.5])
    zero = lambda y: np.zeros_like(y)  # noqa: E731
    out = rk4_step(zero, y, 0.1) if scheme == "rk4" else implicit_midpoint_step(zero, y, 0.1)
    np.testing.assert_array_equal(out, y)
    g = build_grid(1, 5, 1.0)
    s = make_state(ModelConfig("euler"), g, rho=2.0, v=0.0)
    np.testing.assert_array_equal(step(s, IntegratorConfig(scheme, 0.01)).pack(), s.pack())


def test_rk4_single_mode_matches_exact_oscillation():
    n, length, k = 16, 2 * math.pi, 1
    g = build_grid(1, n, length)
    x = g.cell_centers()[0]
    s = make_state(ModelConfig("scalar_wave"), g, p=np.cos(k * x), w=0.0)
    omega = math.sqrt(oracle.lapl_eigenvalue(k, n, length))
    cfg = IntegratorConfig("rk4", 0.01)
    for _ in range(100):
        s = step(s, cfg)
    exact = math.cos(omega * 1.0) * np.cos(k * x)
    assert np.max(np.abs(s.p.values - exact)) <= 1e-8


def test_rk4_scalar_linear_ode_order():
    # y' = i y as a real 2-vector; RK4 error at t=1 drops by ~16 per halving
    f = lambda y: np.array([-y[1], y[0]])  # noqa: E731
    errs = []
    for dt in (0.1, 0.05):
        y = np.array([1.0, 0.0])
        for _ in range(int(round(1 / dt))):
            y = rk4_step(f, y, dt)
        errs.append(np.hypot(y[0] - math.cos(1), y[1] - math.sin(1)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_linear_wave_midpoint_energy_drift():
    g = build_grid(1, 16, 16.0)  # h = 1, dt = 0.1
    s = random_state(ModelConfig("linear_wave"), g, np.random.default_rng(0))
    E0 = energy(s).E_total
    end = integrate(s, IntegratorConfig("implicit_midpoint", 0.1), 1000)
    assert abs(energy(end).E_total - E0) / abs(E0) <= 1e-10


@given(st.sampled_from(["scalar_wave", "linear_wave"]), st.integers(0, 2**32 - 1), st.integers(10, 60))
@settings(max_examples=10)
def test_midpoint_drift_bounded_by_tolerance(kind, seed, steps):
    g = build_grid(1, 12, 1.0)
    s = random_state(ModelConfig(kind), g, np.random.default_rng(seed))
    cfg = IntegratorConfig("implicit_midpoint", 0.1 * g.h)
    end = integrate(s, cfg, steps)
    E0 = energy(s)
    scale = abs(E0.E_kin) + abs(E0.E_int)
    assert abs(energy(end).E_total - E0.E_total) <= steps * 100 * cfg.tol * scale


@pytest.mark.parametrize("kind", KINDS)
def test_midpoint_is_time_symmetric(kind):
    g = build_grid(1, 16, 1.0)
    law = StateLaw.power(1.4) if kind in ("compressible_wave", "euler") else None
    s = random_state(ModelConfig(kind, law=law), g, np.random.default_rng(2))
    encode, decode, f = coordinates(s)
    u0 = encode(s.pack())
    dt, tol = 0.1 * g.h, 1e-13
    back = implicit_midpoint_step(f, implicit_midpoint_step(f, u0, dt, tol), -dt, tol)
    assert np.max(np.abs(back - u0)) <= 10 * tol


def test_nonconvergence_reports_residual():
    g = build_grid(1, 16, 1.0)
    s = random_state(ModelConfig("linear_wave"), g, np.random.default_rng(0))
    with pytest.raises(ConvergenceError) as info:
        step(s, IntegratorConfig("implicit_midpoint", 10.0, max_iter=20))
    assert info.value.residual > 1e-13
    assert "20 iterations" in str(info.value)


@given(st.sampled_from(KINDS), st.sampled_from(["rk4", "implicit_midpoint"]), st.integers(0, 2**32 - 1))
@settings(max_examples=16)
def test_mass_and_momentum_preserved_by_both_schemes(kind, scheme, seed):
    g = build_grid(1, 16, 1.0)
    law = StateLaw.power(2.0) if kind in ("compressible_wave", "euler") else None
    s = random_state(ModelConfig(kind, law=law), g, np.random.default_rng(seed))
    E0 = energy(s)
    end = integrate(s, IntegratorConfig(scheme, 0.1 * g.h), 50)
    E1 = energy(end)
    assert abs(E1.mass - E0.mass) <= 1e-13 * max(abs(E0.mass), 1.0)
    assert abs(E1.momentum - E0.momentum) <= 1e-13 * max(abs(E0.momentum), 1.0)
    assert energy_rate_scale(end) >= 0.0
