import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nonlocal_pucci.barriers import (
    FundamentalE,
    PsiSub,
    SubVarphi,
    SuperPhi,
    barrier_field,
    eval_barrier,
    mollifier,
    verify_corollary,
    verify_psi,
    verify_subsolution,
    verify_supersolution,
)
from nonlocal_pucci.kernels import EllipticityBounds, sphere_area

LINEAR = EllipticityBounds(1.0, 1.0, 0.75, 2)
PUCCI = EllipticityBounds(1.0, 2.0, 0.75, 2)


# -- closed forms ---------------------------------------------------------------------


def test_subsolution_profile_values():
    assert eval_barrier(SubVarphi(2.0, 4.0), 0.0) == 0.0625
    assert eval_barrier(SubVarphi(2.0, 4.0), 2.0) == pytest.approx(1 / 64, rel=1e-15)
    out = eval_barrier(SubVarphi(1.0, 3.5), np.array([0.0, 1.0]))
    assert out.shape == (2,) and out[0] == 1.0


def test_supersolution_switch_radius_and_continuity():
    spec = SuperPhi(3.0, 0.1, -0.5)
    assert spec.r_c == pytest.approx(10**0.4, rel=1e-14)
    rc = spec.r_c
    inner = spec.c * rc**spec.sigma
    outer = rc ** (-spec.beta)
    assert inner == pytest.approx(outer, rel=1e-13)
    assert eval_barrier(spec, rc * (1 - 1e-6)) == pytest.approx(outer, rel=1e-5)
    assert spec.branch(rc * (1 - 1e-6)) == "inner"
    assert spec.branch(rc * (1 + 1e-6)) == "outer"


def test_supersolution_is_the_smaller_branch():
    spec = SuperPhi(3.2, 0.4, -0.6)
    r = np.geomspace(0.01, 100, 200)
    expect = np.minimum(spec.c * r**spec.sigma, r ** (-spec.beta))
    assert np.allclose(eval_barrier(spec, r), expect, rtol=1e-14)


def test_theta_exponent():
    assert SuperPhi(3.0, 1.0, -0.5).theta(2) == pytest.approx(1.0 / 2.5)


def test_psi_beyond_the_bump():
    spec = PsiSub(4.0, 3.5, 8.0, 1e-3, -0.4)
    expect = (4.0 + 1.5**2) ** (-1.75) - 1e-3 * 1.5**-0.4
    assert eval_barrier(spec, 1.5) == pytest.approx(expect, rel=1e-15)


def test_fundamental_power():
    assert eval_barrier(FundamentalE(-0.5), 4.0) == 0.5


@pytest.mark.parametrize("bad", [
    lambda: SubVarphi(0.5, 4.0),
    lambda: SubVarphi(2.0, 0.0),
    lambda: SuperPhi(3.0, 0.0, -0.5),
    lambda: SuperPhi(3.0, 1.0, 0.2),
    lambda: SuperPhi(0.4, 1.0, -0.5),
    lambda: FundamentalE(0.0),
    lambda: PsiSub(0.0, 3.5, 1.0, 0.0, -0.4),
    lambda: PsiSub(1.0, 3.5, 1.0, 0.0, 0.1),
    lambda: PsiSub(1.0, 3.5, 1.0, 0.0, -4.0),
    lambda: PsiSub(1.0, 3.5, 1.0, 0.0, -0.4, sigma=-0.2),
])
def test_invalid_parameters_are_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_parameter_ranges_depending_on_the_class():
    with pytest.raises(ValueError):
        SubVarphi(1.0, 3.0).check(2, 0.75)
    with pytest.raises(ValueError):
        SuperPhi(1.9, 1.0, -0.5).check(2, 0.75)
    with pytest.raises(ValueError):
        SuperPhi(3.6, 1.0, -0.5).check(2, 0.75)
    SuperPhi(3.5, 1.0, -0.5).check(2, 0.75)


def test_domain_errors():
    with pytest.raises(ValueError):
        eval_barrier(SubVarphi(1.0, 4.0), -1.0)
    with pytest.raises(ValueError):
        eval_barrier(SuperPhi(3.0, 1.0, -0.5), 0.0)
    with pytest.raises(ValueError):
        eval_barrier(PsiSub(1.0, 3.5, 1.0, 1e-3, -0.4), 0.0)
    with pytest.raises(ValueError):
        eval_barrier(PsiSub(1.0, 3.5, 1.0, 0.0, -0.4), 0.5)


# -- mollifier ----------------------------------------------------------------------------


@pytest.mark.parametrize("N", [1, 2, 3])
def test_mollifier_has_unit_mass(N, frozen):
    eta = mollifier(N)
    assert eta.meta["kappa"] == pytest.approx(frozen["mollifier_kappa"][str(N)], rel=1e-4)
    mass, _ = integrate.quad(lambda r: float(eta.f(np.array(r))) * r ** (N - 1), 0, 1, epsabs=0, epsrel=1e-12)
    assert sphere_area(N) * mass == pytest.approx(1.0, rel=1e-10)
    assert float(eta.f(np.array(1.0))) == 0.0 and float(eta.f(np.array(3.0))) == 0.0


# -- derivatives ---------------------------------------------------------------------------

SPECS = [
    (SubVarphi(2.0, 3.5), None),
    (FundamentalE(-0.7), None),
    (SuperPhi(3.0, 0.5, -0.5), None),
    (PsiSub(4.0, 3.5, 2.0, 1e-3, -0.4), 2),
    (PsiSub(4.0, 3.5, 2.0, 0.0, -0.4), 3),
]


@pytest.mark.parametrize("spec,N", SPECS)
def test_derivatives_match_finite_differences(spec, N):
    u = barrier_field(spec, N)
    r = np.geomspace(0.05, 20.0, 50)
    if isinstance(spec, SuperPhi):
        r = r[np.abs(r / spec.r_c - 1) > 0.01]
    r = r[np.abs(r - 1.0) > 0.01]
    h = 1e-5 * r
    fd1 = (u.f(r + h) - u.f(r - h)) / (2 * h)
    fd2 = (u.df(r + h) - u.df(r - h)) / (2 * h)
    assert np.allclose(u.df(r), fd1, rtol=1e-6, atol=1e-12)
    assert np.allclose(u.d2f(r), fd2, rtol=1e-6, atol=1e-12)


@settings(max_examples=30)
@given(st.floats(1.0, 8.0), st.floats(3.5, 6.0), st.floats(0.0, 50.0))
def test_subsolution_profile_is_positive_and_bounded(M, beta, r):
    v = eval_barrier(SubVarphi(M, beta), r)
    assert 0 < v <= M**-beta


@settings(max_examples=30)
@given(st.floats(2.1, 3.5), st.floats(0.05, 5.0), st.floats(-1.9, -0.1), st.floats(0.01, 50.0))
def test_supersolution_never_exceeds_either_branch(beta, c, sigma, r):
    spec = SuperPhi(beta, c, sigma)
    v = eval_barrier(spec, r)
    assert v <= c * r**sigma * (1 + 1e-12) and v <= r**-beta * (1 + 1e-12)


# -- numerical certificates ------------------------------------------------------------------


@pytest.fixture(scope="module")
def linear_subsolutions():
    return {M: verify_subsolution(LINEAR, M) for M in (4.0, 8.0)}


def test_subsolution_certificate(linear_subsolutions):
    rep = linear_subsolutions[4.0]
    assert rep.passed
    assert rep.constants["c_emp"] > 0 and math.isfinite(rep.constants["lambda_emp"])
    assert rep.violations == 0


def test_subsolution_constant_is_scale_free(linear_subsolutions):
    a, b = (linear_subsolutions[M].constants["c_emp"] for M in (4.0, 8.0))
    assert abs(a - b) <= 0.25 * max(a, b)


def test_corollary_slack():
    big = verify_corollary(LINEAR, 8.0)
    assert big.passed and big.constants["c_emp"] > 0
    small = verify_corollary(LINEAR, 1.0)
    assert not small.passed and small.constants["c_emp"] < 0
    assert "M below empirical M0" in small.notes


def test_supersolution_certificate():
    rel = np.array([0.05, 0.2, 0.6, 1.5, 4.0, 12.0])
    rep = verify_supersolution(LINEAR, beta=3.0, c=1.0, sigma=-0.5, sample_radii=rel)
    assert rep.passed, rep.notes
    assert 1 / 3 <= rep.constants["ratio"] <= 3
    assert rep.constants["inner_margin"] >= 0


def test_psi_certificate():
    rep = verify_psi(LINEAR, sigma=-0.5, sample_radii=[2.0, 6.0, 20.0])
    assert rep.passed and rep.constants["C0"] is not None
    with pytest.raises(ValueError):
        verify_psi(LINEAR, sigma=-0.5, sample_radii=[1.0])


def test_reports_serialise_deterministically(tmp_path, linear_subsolutions):
    rep = linear_subsolutions[4.0]
    first = rep.to_csv(tmp_path / "a.csv")
    second = rep.to_csv(tmp_path / "b.csv")
    assert first == second
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert first.splitlines()[0] == "radius,lhs,rhs,margin,err"
    assert '"passed": true' in rep.to_json()


def test_pucci_subsolution_certificate():
    rep = verify_subsolution(PUCCI, 8.0)
    assert rep.passed and rep.constants["c_emp"] > 0
