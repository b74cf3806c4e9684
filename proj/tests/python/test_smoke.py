import math

import pytest

import structsim as ss


def test_presets_listed():
    assert set(ss.preset_names()) >= {"forward", "backward"}


def test_r0_linear_in_lambda_m():
    p = ss.preset("forward")
    g = ss.default_grid(p)
    per = ss.r0_per_lambda_m(p, g)
    p.lambda_m = 7e6
    r = ss.r0_closed_form(p, g)["r0_squared_closed_form"]
    assert math.isclose(r, 7e6 * per, rel_tol=1e-12)


def test_methods_agree():
    p = ss.preset("forward")
    g = ss.default_grid(p)
    r = ss.r0_all(p, g)
    assert math.isclose(r["r0_squared_closed_form"], r["r0_squared_power_iter"], rel_tol=1e-8)
    assert math.isclose(r["r0_squared_closed_form"], r["r0_squared_reduced"], rel_tol=1e-8)
    assert math.isclose(r["r0_squared_closed_form"], ss.g_of_lambda(p, g, 0.0), rel_tol=1e-8)


def test_backward_has_two_roots():
    p = ss.preset("backward")
    g = ss.default_grid(p)
    k = ss.reduced_kernels(p, g)
    assert ss.c_bif(k) > 0
    assert len(ss.solve_endemic(0.38, k)) == 2
    assert ss.solve_endemic(0.15, k) == []


def test_validate_and_bad_config():
    p = ss.preset("forward")
    ok, checks = ss.validate(p, ss.default_grid(p))
    assert ok and all(checks.values())
    with pytest.raises(ValueError):
        ss.parse_config("[population]\nlambda_h = -1\n")


def test_short_simulation_positive():
    p = ss.preset("forward")
    g = ss.default_grid(p, 0.01)
    s = ss.simulate(p, g, 1e-3, 1.0, every=10)
    assert s["t"][-1] == pytest.approx(1.0)
    assert all(v >= 0 for v in s["total_i_h"] + s["total_i_m"])
