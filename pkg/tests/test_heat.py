import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_pucci.heat import (
    fourier_profile,
    heat_profile,
    profile_at_origin,
    self_similar_value,
    tail_coefficients,
    verify_eigen_relation,
    verify_kernel_bounds,
    verify_scaling,
)
from nonlocal_pucci.kernels import FractionalLaplacian
from nonlocal_pucci.operators import OperatorSpec, full_operator


@pytest.fixture(scope="module")
def profile_1d():
    return heat_profile(1, 0.75)


@pytest.fixture(scope="module")
def profile_2d():
    return heat_profile(2, 0.75)


# -- closed forms ------------------------------------------------------------------------


def test_cauchy_kernel_on_the_line():
    r = np.array([0.0, 0.3, 1.0, 4.0, 10.0])
    assert np.allclose(fourier_profile(1, 0.5, r), 1 / (math.pi * (1 + r * r)), rtol=1e-8)


def test_poisson_kernel_in_three_dimensions():
    r = np.array([0.0, 0.5, 2.0, 6.0])
    assert np.allclose(fourier_profile(3, 0.5, r), 1 / (math.pi**2 * (1 + r * r) ** 2), rtol=1e-8)


def test_origin_value_closed_form():
    assert profile_at_origin(1, 0.5) == pytest.approx(1 / math.pi, rel=1e-14)
    assert profile_at_origin(2, 1.0 - 1e-12) == pytest.approx(1 / (4 * math.pi), rel=1e-9)
    assert profile_at_origin(1, 0.5, t=2.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)


def test_leading_tail_coefficient_of_the_cauchy_kernel():
    assert tail_coefficients(1, 0.5, 1)[0] == pytest.approx(1 / math.pi, rel=1e-14)
    # 1/(pi (1+r^2)) has no r^-3 term and -1/pi in front of r^-4
    a = tail_coefficients(1, 0.5, 3)
    assert a[1] == 0.0
    assert a[2] == pytest.approx(-1 / math.pi, rel=1e-12)


# -- oracle values ----------------------------------------------------------------------


def test_fourier_profile_against_frozen_oracle(frozen):
    ref = frozen["heat_N1_s0.75"]
    got = fourier_profile(1, 0.75, ref["r"])
    assert np.allclose(got, ref["value"], rtol=1e-4)


@pytest.mark.parametrize("k", [0, 1])
def test_self_similar_values_against_frozen_oracle(frozen, profile_1d, k):
    ref = frozen["heat_N1_s0.75_times"]
    r, t, expect = np.asarray(ref["r"]), ref["t"][k], ref["value"][k]
    assert np.allclose(fourier_profile(1, 0.75, r, t=t), expect, rtol=1e-4)
    scaled = self_similar_value(profile_1d.field, profile_1d.lam, r, t, 0.75)
    assert np.allclose(scaled, expect, rtol=1e-4)


# -- profile -----------------------------------------------------------------------------------


def test_profile_has_unit_mass(profile_1d, profile_2d):
    assert profile_1d.mass() == pytest.approx(1.0, abs=1e-3)
    assert profile_2d.mass() == pytest.approx(1.0, abs=1e-3)


def test_profile_is_positive_and_decreasing(profile_2d):
    v = profile_2d.field.values
    assert np.all(v > 0) and np.all(np.diff(v) < 0)


def test_fitted_tail_matches_the_asymptotic_coefficient(profile_1d, profile_2d):
    for prof in (profile_1d, profile_2d):
        a1 = tail_coefficients(prof.N, prof.s, 1)[0]
        assert prof.field.tail.p == prof.N + 2 * prof.s
        assert prof.field.tail.A == pytest.approx(a1, rel=0.02)


def test_cauchy_profile_has_a_flat_kernel_band():
    lo, hi, ratio = verify_kernel_bounds(heat_profile(1, 0.5))
    assert lo == pytest.approx(1 / math.pi, rel=1e-6) and ratio == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("fixture", ["profile_1d", "profile_2d"])
def test_eigen_relation(fixture, request):
    assert verify_eigen_relation(request.getfixturevalue(fixture)) < 1e-2


def test_operator_is_linear_on_the_profile(profile_2d):
    spec = OperatorSpec(FractionalLaplacian(2, 0.75), drift="selfsimilar")
    five = profile_2d.field.with_values(5 * profile_2d.field.values,
                                        tail=type(profile_2d.field.tail)(5 * profile_2d.field.tail.A,
                                                                         profile_2d.field.tail.p))
    for r in (0.0, 1.0, 4.0):
        a = full_operator(five, spec, r).value
        b = full_operator(profile_2d.field, spec, r).value
        assert a == pytest.approx(5 * b, rel=1e-10)


def test_invalid_profile_requests():
    with pytest.raises(ValueError):
        heat_profile(4, 0.75)
    with pytest.raises(ValueError):
        heat_profile(1, 1.0)
    with pytest.raises(ValueError):
        verify_eigen_relation(heat_profile(1, 0.4, R=50.0))


# -- scaling -------------------------------------------------------------------------------------


def test_scaling_identity_is_exact(profile_1d):
    assert verify_scaling(profile_1d.field, profile_1d.lam, 0.75) <= 1e-12
    assert verify_scaling(profile_1d.field, profile_1d.lam, 0.75, c_list=(1.0,)) == 0.0
    with pytest.raises(ValueError):
        verify_scaling(profile_1d.field, profile_1d.lam, 0.75, c_list=(0.0,))


@settings(max_examples=20)
@given(st.floats(0.1, 10.0), st.floats(0.0, 20.0))
def test_self_similar_value_at_the_centre(t, r):
    # Phi(0, t) = t^-lam Phi(0, 1) and Phi is radially decreasing at every time
    phi = lambda x: 1.0 / (1.0 + np.asarray(x) ** 2)  # noqa: E731
    lam = 0.5 / 0.75
    assert self_similar_value(phi, lam, 0.0, t, 0.75) == pytest.approx(t**-lam, rel=1e-14)
    assert self_similar_value(phi, lam, r, t, 0.75) <= t**-lam
    with pytest.raises(ValueError):
        self_similar_value(phi, lam, r, -t, 0.75)
