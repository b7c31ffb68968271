import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_pucci.fields import AnalyticField
from nonlocal_pucci.kernels import EllipticityBounds, Extremal
from nonlocal_pucci.operators import DEFAULT_CFG, kernel_value_only
from nonlocal_pucci.exponents import NoExponentFound, _scan_bisect, check_plus_condition, power_symbol, solve_sigma


@pytest.mark.parametrize("N,s", [(2, 0.6), (3, 0.75), (3, 0.9)])
def test_linear_class_gives_the_classical_exponent(N, s):
    fe = solve_sigma(EllipticityBounds(1.0, 1.0, s, N), "plus")
    assert fe.sigma == pytest.approx(2 * s - N, abs=1e-4)
    assert fe.Ntilde == pytest.approx(N, abs=1e-4)
    assert fe.bracket[0] <= fe.sigma <= fe.bracket[1]
    assert fe.bracket[1] - fe.bracket[0] <= 1e-7


def test_power_symbol_against_frozen_oracle(frozen):
    ref = frozen["power_symbol_g1_G2_N2_s0.75_sigma-1"]
    b = EllipticityBounds(1.0, 2.0, 0.75, 2)
    for sign in ("plus", "minus"):
        # the reference is an adaptive nested integral good to a few 1e-4
        assert power_symbol(-1.0, b, sign) == pytest.approx(ref[sign], abs=5e-4)


def test_power_symbol_rejects_bad_exponents():
    b = EllipticityBounds(1.0, 2.0, 0.75, 2)
    for sigma in (0.0, -2.0, 1.5, 3.0):
        with pytest.raises(ValueError):
            power_symbol(sigma, b, "plus")
    with pytest.raises(ValueError):
        power_symbol(-1.0, b, "sideways")


@settings(max_examples=6)
@given(st.floats(-1.9, -0.1), st.floats(0.3, 5.0), st.sampled_from(["plus", "minus"]))
def test_power_evaluations_scale_homogeneously(sigma, radius, sign):
    b = EllipticityBounds(1.0, 1.0, 0.75, 2)
    at_one = kernel_value_only(AnalyticField.power(sigma), Extremal(b), sign, 1.0)
    at_r = kernel_value_only(AnalyticField.power(sigma), Extremal(b), sign, radius)
    assert at_r == pytest.approx(radius ** (sigma - 1.5) * at_one, rel=1e-6, abs=1e-12)


def test_nearly_linear_class_brackets_the_dimension():
    b = EllipticityBounds(1.0, 1.05, 0.75, 3)
    plus = solve_sigma(b, "plus", tol=1e-5)
    minus = solve_sigma(b, "minus", tol=1e-5)
    assert minus.Ntilde >= 3.0 >= plus.Ntilde
    assert abs(minus.Ntilde - 3.0) < 0.1 and abs(plus.Ntilde - 3.0) < 0.1
    assert minus.residual < 1e-3 and plus.residual < 1e-3


def test_plus_condition_in_two_dimensions():
    ok, margin = check_plus_condition(EllipticityBounds(1.0, 1.0, 0.75, 2))
    assert ok
    assert margin == pytest.approx(0.5, abs=1e-4)


def test_plus_condition_fails_on_the_line():
    # the root moves to (0, 2s) when 2s > N
    ok, margin = check_plus_condition(EllipticityBounds(1.0, 1.0, 0.75, 1))
    assert not ok
    assert margin == pytest.approx(-0.5, abs=1e-4)


def test_missing_root_is_reported():
    # with 2s < N the only root sits at 2s - N < 0, outside this window
    with pytest.raises(NoExponentFound):
        _scan_bisect(EllipticityBounds(1.0, 1.0, 0.75, 2), "plus", 0.05, 1.45, 1e-6, DEFAULT_CFG, 9)


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        solve_sigma(EllipticityBounds(1.0, 1.0, 0.75, 2), "plus", tol=0.0)


def test_exponent_serialises():
    fe = solve_sigma(EllipticityBounds(1.0, 1.0, 0.75, 2), "minus", tol=1e-6)
    d = fe.to_json()
    assert d["sign"] == "minus" and math.isclose(d["Ntilde"], 1.5 - d["sigma"])
