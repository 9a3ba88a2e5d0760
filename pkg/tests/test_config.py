import math
from pathlib import Path

import numpy as np
import pytest

from mimetic_fd.config import ConfigError, initial_state, load_config, parse_config

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.toml"))


def base(**over):
    cfg = {
        "model": "euler",
        "grid": {"n_cells": 8, "length": 2.0},
        "law": {"gamma": 1.4},
        "integrator": {"scheme": "rk4", "dt": 0.01},
        "init": {"rho": {"preset": "sine", "amplitude": 0.2, "offset": 1.0}, "v": {"preset": "uniform", "value": 0.3}},
    }
    cfg.update(over)
    return cfg


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    initial_state(cfg)


def test_presets_evaluate_on_grid():
    cfg = parse_config(base())
    s = initial_state(cfg)
    x = cfg.grid.cell_centers()[0]
    np.testing.assert_allclose(s.rho.values, 1.0 + 0.2 * np.sin(2 * math.pi * x / 2.0))
    np.testing.assert_array_equal(s.v.values, 0.3)


def test_gaussian_is_periodic():
    cfg = parse_config(base(init={"rho": {"preset": "gaussian", "center": 0.0, "width": 0.3, "offset": 1.0}}))
    rho = initial_state(cfg).rho.values
    np.testing.assert_allclose(rho, rho[::-1], rtol=1e-14)  # symmetric about the seam at x = 0


def test_two_dimensional_presets():
    cfg = parse_config({
        "model": "scalar_wave",
        "grid": {"dims": 2, "n_cells": [4, 6], "length": [1.0, 2.0]},
        "init": {"p": {"preset": "sine", "mode": [1, 2]}},
    })
    s = initial_state(cfg)
    assert s.p.values.shape == (4, 6)
    assert s.w.values.shape == (4, 6)


def test_defaults_fill_missing_fields():
    cfg = parse_config({"model": "euler", "grid": {"n_cells": 5}})
    s = initial_state(cfg)
    assert np.all(s.rho.values == 1.0) and np.all(s.v.values == 0.0)
    assert cfg.final_time == cfg.steps * cfg.integrator.dt


@pytest.mark.parametrize(
    "over",
    [
        {"model": "plasma"},
        {"grid": {"n_cells": 2}},
        {"grid": {"n_cells": 8, "spacing": 0.1}},
        {"law": {"kind": "tabulated"}},
        {"law": {"gamma": -1.0}},
        {"integrator": {"scheme": "leapfrog"}},
        {"integrator": {"dt": 0.0}},
        {"init": {"rho": {"preset": "square"}}},
        {"init": {"rho": {"preset": "sine", "wavelength": 2}}},
        {"init": {"pressure": {"preset": "uniform"}}},
        {"init": {"rho": {"preset": "sine", "amplitude": 0.5, "offset": -2.0}}},
        {"init": {"rho": {"preset": "gaussian", "width": 0.0, "offset": 1.0}}},
        {"steps": -1},
        {"stride": 0},
        {"colour": "blue"},
    ],
)
def test_invalid_configs_raise(over):
    with pytest.raises(ConfigError):
        parse_config(base(**over))


def test_negative_density_message_names_the_range():
    with pytest.raises(ConfigError, match="admissible range"):
        parse_config(base(init={"rho": {"preset": "uniform", "value": -0.5}}))


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("model = \n[grid")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(bad)
