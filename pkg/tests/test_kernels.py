import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_pucci.kernels import (
    EllipticityBounds,
    Explicit,
    Extremal,
    FractionalLaplacian,
    IsaacsFamily,
    frac_laplacian_constant,
    kernel_from_json,
    kernel_to_json,
    kernel_value,
    validate,
)


def unit(N, s):
    return Explicit.constant(EllipticityBounds(1.0, 1.0, s, N), 1.0)


def test_explicit_unit_multiplier_at_radius_two():
    assert kernel_value(unit(1, 0.75), [2.0]) == pytest.approx(2**-2.5, rel=1e-15)


def test_explicit_unit_multiplier_at_unit_radius():
    assert kernel_value(unit(1, 0.75), [1.0]) == pytest.approx(1.0, rel=1e-15)


def test_half_laplacian_constant_in_one_dimension():
    assert kernel_value(FractionalLaplacian(1, 0.5), [1.0]) == pytest.approx(1 / math.pi, rel=1e-14)


@pytest.mark.parametrize("N,s,expected", [
    (1, 0.5, 1 / math.pi),
    # 4^s Gamma(N/2 + s) / (pi^(N/2) |Gamma(-s)|) evaluated by hand
    (3, 0.5, 1 / math.pi**2),
    (2, 0.5, 4**0.5 * math.gamma(1.5) / (math.pi * abs(math.gamma(-0.5)))),
])
def test_normalisation_constant(N, s, expected):
    assert frac_laplacian_constant(N, s) == pytest.approx(expected, rel=1e-14)


def test_kernel_value_rejects_origin():
    with pytest.raises(ValueError):
        kernel_value(unit(2, 0.5), [0.0, 0.0])


def test_extremal_is_not_a_single_kernel():
    with pytest.raises(TypeError):
        kernel_value(Extremal(EllipticityBounds(1, 2, 0.5, 2)), [1.0, 0.0])


def test_valid_extremal_bounds():
    assert validate(Extremal(EllipticityBounds(1.0, 2.0, 0.75, 2))).ok


def test_swapped_bounds_reported():
    res = validate(Extremal(EllipticityBounds(2.0, 1.0, 0.75, 2)))
    assert not res.ok
    assert "gamma > Gamma" in res.violations


@pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5])
def test_order_out_of_range_reported(s):
    assert not validate(Extremal(EllipticityBounds(1.0, 2.0, s, 2))).ok


def test_half_space_multiplier_is_out_of_bounds_and_asymmetric():
    b = EllipticityBounds(1.0, 2.0, 0.75, 2)
    k = Explicit(b, lambda rho, cos: np.where(np.asarray(cos) > 0, 3.0, 1.0) * np.ones_like(np.asarray(rho)))
    v = validate(k).violations
    assert "bound exceeded" in v
    assert "asymmetry" in v


def test_isaacs_row_violation_is_located():
    b = EllipticityBounds(1.0, 2.0, 0.75, 2)
    good = Explicit.constant(b, 1.5)
    bad = Explicit.constant(b, 2.5)
    v = validate(IsaacsFamily([[good], [good, bad]])).violations
    assert v == ["[1][1] bound exceeded"]


def test_empty_isaacs_family_rejected():
    assert not validate(IsaacsFamily([])).ok


def test_operations_refuse_bad_bounds():
    with pytest.raises(ValueError):
        EllipticityBounds(2.0, 1.0, 0.5, 2).check()
    with pytest.raises(ValueError, match="gradient"):
        EllipticityBounds(1.0, 2.0, 0.4, 2).check(gradient=True)


@pytest.mark.parametrize("k", [
    FractionalLaplacian(2, 0.75),
    Extremal(EllipticityBounds(1.0, 2.0, 0.6, 3)),
    Explicit.constant(EllipticityBounds(1.0, 2.0, 0.6, 1), 1.25),
])
def test_json_round_trip(k):
    assert kernel_to_json(kernel_from_json(kernel_to_json(k))) == kernel_to_json(k)


@given(st.floats(0.1, 10), st.floats(1.0, 5.0), st.floats(0.05, 0.95), st.integers(1, 3),
       st.floats(0.05, 50))
def test_constant_multiplier_sits_between_bound_kernels(g, ratio, s, N, rho):
    b = EllipticityBounds(g, g * ratio, s, N)
    k = Explicit.constant(b, g * (1 + ratio) / 2)
    y = np.zeros(N)
    y[0] = rho
    val = kernel_value(k, y)
    base = rho ** (-(N + 2 * s))
    assert b.gamma * base * (1 - 1e-12) <= val <= b.Gamma * base * (1 + 1e-12)
    assert validate(k).ok


@given(st.floats(0.05, 0.95), st.integers(1, 3), st.floats(0.01, 100), st.floats(0.01, 100))
def test_fractional_kernel_is_homogeneous(s, N, r1, r2):
    k = FractionalLaplacian(N, s)
    y1, y2 = np.zeros(N), np.zeros(N)
    y1[-1], y2[0] = r1, r2
    assert kernel_value(k, y1) / kernel_value(k, y2) == pytest.approx((r1 / r2) ** (-(N + 2 * s)), rel=1e-12)
