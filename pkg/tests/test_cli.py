import csv
import json

import pytest

from hestonvi.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NONCONV, EXIT_OK, EXIT_USAGE, main

PARAMS = {"sigma": 1.0, "rho": -0.5, "kappa": 1.0, "theta": 0.5, "r": 0.5, "q": 0.2}
B1_ZERO = {"sigma": 1.0, "rho": 0.5, "kappa": 1.0, "theta": 0.5, "r": 0.5, "q": 0.25}
SMALL = {"domain": {"x_lo": -2, "x_hi": 2, "y_max": 2}, "grid": {"nx": 13, "ny": 13}}


def write_cfg(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def run(tmp_path, *argv, out="out"):
    return main([*argv, "--out", str(tmp_path / out)])


def read_json(tmp_path, name, out="out"):
    return json.loads((tmp_path / out / name).read_text())


def vi_config(**penalty):
    return {"params": PARAMS, **SMALL,
            "problem": {"kind": "vi"},
            "data": {"f": 0.0, "psi": {"kind": "put", "strike": 1.0, "shift": -0.5}, "g": 0.5},
            "penalty": penalty or {"eps_sequence": [1e-2, 1e-3, 1e-4, 1e-5]}}


# --------------------------------------------------------------------------
# usage and configuration errors


def test_unknown_flag_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["solve", write_cfg(tmp_path, {"params": PARAMS}), "--bogus"])
    assert err.value.code == EXIT_USAGE


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == EXIT_USAGE


def test_zero_volatility_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, {"params": dict(PARAMS, sigma=0.0)})
    assert run(tmp_path, "check-constants", cfg) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert run(tmp_path, "solve", str(tmp_path / "nope.json")) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    cfg = write_cfg(tmp_path, {"params": PARAMS, "solver": {}})
    assert run(tmp_path, "solve", cfg) == EXIT_CONFIG


def test_side_condition_violation_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, {"params": PARAMS, "envelopes": {"C4": 1.0, "K": 5.0}})
    assert run(tmp_path, "envelopes", cfg) == EXIT_CONFIG


# --------------------------------------------------------------------------
# check-constants


def test_check_constants_reports_failed_normalization(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"params": PARAMS})
    assert run(tmp_path, "check-constants", cfg) == EXIT_OK
    data = read_json(tmp_path, "constants.json")
    assert json.loads(capsys.readouterr().out) == data
    assert data["params"]["sigma"] == 1.0
    for key in ("beta", "mu", "lambda0", "nu1"):
        assert key in data["constants"]
    assert data["coordinate_change"]["status"] == "failed"
    assert data["coordinate_change"]["reason"]


def test_check_constants_identity_when_b1_vanishes(tmp_path):
    cfg = write_cfg(tmp_path, {"params": B1_ZERO})
    assert run(tmp_path, "check-constants", cfg) == EXIT_OK
    assert read_json(tmp_path, "constants.json")["coordinate_change"]["status"] == "identity"


# --------------------------------------------------------------------------
# envelopes


def test_envelopes_need_a_block(tmp_path):
    cfg = write_cfg(tmp_path, {"params": PARAMS})
    assert run(tmp_path, "envelopes", cfg) == EXIT_CONFIG


def test_envelopes_with_admissibility(tmp_path):
    raw = {"params": PARAMS, **SMALL, "envelopes": {"c0": -1.0, "C0": 1.0},
           "data": {"f": 0.0, "g": 0.0, "psi": -1.0}}
    assert run(tmp_path, "envelopes", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "envelopes.json")
    assert data["coefficients"]["d0"] == -2.0 and data["coefficients"]["D0"] == 2.0  # c0/r
    assert data["admissibility"]["passed"] is True


# --------------------------------------------------------------------------
# solve


def test_solve_equation_writes_outputs(tmp_path):
    raw = {"params": PARAMS, **SMALL, "data": {"f": 1.0, "g": 0.0}}
    assert run(tmp_path, "solve", write_cfg(tmp_path, raw)) == EXIT_OK
    out = tmp_path / "out"
    rep = read_json(tmp_path, "report.json")
    assert rep["converged"] is True
    assert rep["linear_residual"] <= 1e-8
    with open(out / "solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 13 * 13
    assert (out / "traces.csv").exists()


def test_solve_reports_error_against_exact_field(tmp_path):
    # the constant 1 solves A u = r, and the boundary data match it
    raw = {"params": PARAMS, **SMALL, "problem": {"method": "noncoercive"},
           "data": {"f": 0.5, "g": 1.0, "exact": 1.0}}
    assert run(tmp_path, "solve", write_cfg(tmp_path, raw)) == EXIT_OK
    assert read_json(tmp_path, "report.json")["error_max"] <= 1e-6


def test_solve_vi(tmp_path):
    assert run(tmp_path, "solve", write_cfg(tmp_path, vi_config())) == EXIT_OK
    rep = read_json(tmp_path, "report.json")
    assert rep["converged"] is True
    assert rep["penalty_norm"] > 0


def test_solve_nonconvergence_still_writes_report(tmp_path):
    raw = vi_config(eps_sequence=[1e-2, 1e-3, 1e-4], newton_max_iter=1)
    assert run(tmp_path, "solve", write_cfg(tmp_path, raw)) == EXIT_NONCONV
    assert read_json(tmp_path, "report.json")["converged"] is False


def test_noncoercive_vi_needs_envelopes(tmp_path):
    raw = vi_config()
    raw["problem"]["method"] = "noncoercive"
    assert run(tmp_path, "solve", write_cfg(tmp_path, raw)) == EXIT_CONFIG


def test_solve_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, vi_config())
    assert run(tmp_path, "solve", cfg, out="a") == EXIT_OK
    assert run(tmp_path, "solve", cfg, out="b") == EXIT_OK
    for name in ("solution.csv", "traces.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# --------------------------------------------------------------------------
# sweep-eps


def test_sweep_eps_rates(tmp_path):
    raw = vi_config()
    raw["grid"] = {"nx": 17, "ny": 17}
    assert run(tmp_path, "sweep-eps", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "rates.json")
    assert len(data["rows"]) == 4
    for key in ("penalty_norm", "v_distance"):
        assert set(data[key]) >= {"slope", "threshold", "passed"}
    assert data["penalty_norm"]["passed"] is True
    assert (tmp_path / "out" / "rates.csv").exists()


def test_sweep_eps_warns_with_three_points(tmp_path):
    cfg = write_cfg(tmp_path, vi_config(eps_sequence=[1e-2, 1e-3, 1e-4]))
    with pytest.warns(UserWarning, match="three eps"):
        assert run(tmp_path, "sweep-eps", cfg) == EXIT_OK


def test_sweep_eps_inactive_obstacle_is_trivial(tmp_path):
    raw = vi_config()
    raw["data"] = {"f": 0.0, "psi": -1.0, "g": 0.0}
    assert run(tmp_path, "sweep-eps", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "rates.json")
    assert data["penalty_norm"]["trivial"] is True and data["penalty_norm"]["slope"] is None


@pytest.mark.parametrize("raw", [
    {"params": PARAMS},
    vi_config(eps_sequence=[1e-2, 1e-3]),
])
def test_sweep_eps_rejects_bad_setups(tmp_path, raw):
    assert run(tmp_path, "sweep-eps", write_cfg(tmp_path, raw)) == EXIT_CONFIG


# --------------------------------------------------------------------------
# refine-study and cir


def test_refine_study_exponential(tmp_path):
    raw = {"params": PARAMS, "domain": {"x_lo": -1, "x_hi": 1, "y_max": 1},
           "refine": {"sizes": [17, 33, 65]}}
    assert run(tmp_path, "refine-study", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "refine.json")
    assert data["solution"] == "exponential"
    assert data["min_order"] >= 1.5 and data["order_at_least_1.5"] is True


def test_refine_study_constant_is_exact(tmp_path):
    raw = {"params": PARAMS, "refine": {"sizes": [9, 17],
                                        "solution": {"kind": "constant", "value": 2.0}}}
    assert run(tmp_path, "refine-study", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "refine.json")
    assert data["rows"][1]["order"] == "exact"
    assert data["min_order"] is None


def test_refine_study_cir_profile(tmp_path):
    raw = {"params": PARAMS, "domain": {"x_lo": -1, "x_hi": 1, "y_max": 1},
           "refine": {"sizes": [17, 33], "solution": "cir"}}
    assert run(tmp_path, "refine-study", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "refine.json")
    assert data["solution"] == "cir"
    assert data["rows"][-1]["cir_max_gap"] < data["rows"][0]["cir_max_gap"]


@pytest.mark.parametrize("refine", [{"sizes": [17]}, {"sizes": [33, 17]},
                                    {"solution": {"kind": "put"}},
                                    {"solution": {"kind": "affine", "slope": 1}}])
def test_refine_study_rejects_bad_setups(tmp_path, refine):
    raw = {"params": PARAMS, "refine": refine}
    assert run(tmp_path, "refine-study", write_cfg(tmp_path, raw)) == EXIT_CONFIG


def test_cir_outputs(tmp_path):
    raw = {"params": dict(PARAMS, theta=0.25), "cir": {"y": [0.1, 0.01, 1.0]}}
    assert run(tmp_path, "cir", write_cfg(tmp_path, raw)) == EXIT_OK
    data = read_json(tmp_path, "cir.json")
    assert data["beta"] == pytest.approx(0.5)
    assert data["U_trace_limit"] < 0
    assert data["classes"]["U H2"] == "infinite"
    with open(tmp_path / "out" / "cir_branches.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["y"]) for r in rows] == [0.01, 0.1, 1.0]
    assert (tmp_path / "out" / "cir_classes.csv").exists()


def test_cir_large_beta_has_no_trace_limit(tmp_path):
    raw = {"params": dict(PARAMS, theta=0.75), "cir": {"y": [0.1]}}
    assert run(tmp_path, "cir", write_cfg(tmp_path, raw)) == EXIT_OK
    assert read_json(tmp_path, "cir.json")["U_trace_limit"] is None


# --------------------------------------------------------------------------
# suite


def test_suite_single_criterion(tmp_path, capsys):
    assert run(tmp_path, "suite", "--only", "1") == EXIT_OK
    line = capsys.readouterr().out.strip().splitlines()
    assert len(line) == 1 and line[0].startswith("[PASS]")
    data = read_json(tmp_path, "suite.json")
    assert len(data) == 1 and data[0]["passed"] is True


@pytest.mark.parametrize("only", ["99", "0", "one", "1,x"])
def test_suite_rejects_unknown_criteria(tmp_path, only):
    assert run(tmp_path, "suite", "--only", only) == EXIT_USAGE


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_FAIL, EXIT_NONCONV, EXIT_USAGE, EXIT_CONFIG}) == 5
