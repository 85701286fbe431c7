import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hestonvi.assembly import apply_A_lambda
from hestonvi.config import load_config, parse_config
from hestonvi.errors import CoefficientError, ConfigError
from hestonvi.fields import SmoothField
from hestonvi.params import HestonParams
from hestonvi.problems import Put, Ramp, builtin_field, four_term, four_term_image, \
    manufactured, oracle_battery

PARAMS = {"sigma": 1.0, "rho": -0.5, "kappa": 1.0, "theta": 0.5, "r": 0.5, "q": 0.2}

params_st = st.builds(
    HestonParams, sigma=st.floats(0.2, 3.0), rho=st.floats(-0.9, 0.9),
    kappa=st.floats(0.2, 3.0), theta=st.floats(0.1, 1.5), r=st.floats(0.0, 2.0),
    q=st.floats(0.0, 1.0))
coef = st.floats(-2.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(params_st, coef, coef, coef, st.floats(-1.0, 1.0), coef, st.floats(-1.0, 1.0),
       st.floats(0.0, 2.0))
def test_four_term_image_is_exact(p, d0, d2, d3, ell, d4, k, lam):
    u = four_term(d0, d2, d3, ell, d4, k)
    img = four_term_image(p, d0, d2, d3, ell, d4, k, lam=lam)
    x, y = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(0.0, 3.0, 5))
    ref = apply_A_lambda(u, x, y, p, lam)
    np.testing.assert_allclose(img(x, y), ref, rtol=1e-11, atol=1e-11 * (1 + np.abs(ref).max()))


def test_manufactured_default():
    u, f = manufactured(HestonParams(1.0, 0.0, 1.0, 0.5, 0.5, 0.0), 0.0)
    assert u(0.0, 0.0) == pytest.approx(2 + 1 + 1)


def test_put_and_ramp():
    assert Put(1.0)(0.0, 0.3) == 0.0
    assert Put(2.0, 0.5)(0.0, 0.3) == pytest.approx(1.5)
    assert Ramp(0.5)(0.0, 0.2) == pytest.approx(0.3)
    assert Ramp(0.5)(0.0, 0.7) == 0.0


def test_builtin_fields():
    assert builtin_field(2)(0.0, 0.0) == 2.0
    assert builtin_field({"kind": "affine", "d0": 1, "d2": 2})(0.0, 0.5) == 2.0
    assert builtin_field({"kind": "put", "strike": 1.5})(0.0, 0.0) == pytest.approx(0.5)
    assert builtin_field({"kind": "ramp"})(0.0, 0.0) == 0.5
    with pytest.raises(ConfigError):
        builtin_field({"kind": "nope"})
    with pytest.raises(ConfigError):
        builtin_field({"kind": "put", "level": 1})
    with pytest.raises(ConfigError):
        builtin_field({"kind": "upper_envelope"})
    with pytest.raises(ConfigError):
        builtin_field("put")


def test_oracle_battery_shape():
    probs = oracle_battery(n=9)
    assert len(probs) == 5
    assert len({p.name for p in probs}) == 5


def test_parse_minimal_config():
    cfg = parse_config({"params": PARAMS})
    assert cfg.kind == "equation" and cfg.method == "coercive"
    assert cfg.nx == cfg.ny == 33
    assert cfg.pair() is None
    assert isinstance(cfg.data_field("f"), SmoothField)


def test_parse_full_config(tmp_path):
    raw = {
        "params": PARAMS,
        "domain": {"x_lo": -1, "x_hi": 1, "y_max": 1},
        "grid": {"nx": 9, "ny": 11, "grading": 1.0, "upwind": True},
        "problem": {"kind": "vi", "method": "noncoercive", "lambda": 1.0},
        "data": {"f": 0.5, "psi": {"kind": "put"}, "g": {"kind": "upper_envelope"}},
        "envelopes": {"c0": -1, "C0": 1},
        "penalty": {"eps_sequence": [0.1, 0.01, 0.001]},
        "cir": {"y": [0.01, 0.1]},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(raw))
    cfg = load_config(path)
    assert (cfg.nx, cfg.ny, cfg.upwind, cfg.lam) == (9, 11, True, 1.0)
    assert cfg.penalty.eps_sequence == (0.1, 0.01, 0.001)
    assert cfg.data_field("g")(0.0, 0.0) == pytest.approx(cfg.pair().M(0.0, 0.0))
    assert cfg.cir_y == [0.01, 0.1]


@pytest.mark.parametrize("raw", [
    [],
    {},
    {"params": PARAMS, "bogus": {}},
    {"params": PARAMS, "grid": {"nx": 2}},
    {"params": PARAMS, "grid": {"size": 9}},
    {"params": {"sigma": 1.0}},
    {"params": PARAMS, "problem": {"kind": "pde"}},
    {"params": PARAMS, "problem": {"method": "fast"}},
    {"params": PARAMS, "penalty": {"eps_sequence": [0.01, 0.1]}},
    {"params": PARAMS, "domain": {"x_lo": 1, "x_hi": -1}},
    {"params": PARAMS, "cir": {"y": [0.0]}},
    {"params": PARAMS, "data": {"f": {"kind": "lower_envelope"}}},
    {"params": dict(PARAMS, r="fast")},
])
def test_bad_configs(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_bad_coefficients_propagate():
    with pytest.raises(CoefficientError):
        parse_config({"params": dict(PARAMS, sigma=0.0)})


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
