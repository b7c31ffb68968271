"""The thirteen end-to-end criteria, each held to its stated tolerance.

Every test prints one PASS/FAIL line; the lines are also collected into a
section of the terminal summary so they survive output capture.
"""
import math

import pytest

from nonlocal_pucci.acceptance import AcceptanceRun, run_criterion

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def run():
    return AcceptanceRun(harnack_count=100, seed=0)


def measure(run, number):
    res = run_criterion(run, number)
    print(res.line())
    ACCEPTANCE_LINES.append(res.line())
    assert not res.error, res.error
    return res


def test_criterion_01_linear_exponent(run):
    res = measure(run, 1)
    assert res.measured["max_abs_error"] <= 1e-4
    assert res.passed


def test_criterion_02_pucci_exponent_inequality(run):
    res = measure(run, 2)
    assert all(m >= 0 for m in res.measured["margin"])
    assert res.passed


def test_criterion_03_whole_space_linear_eigenvalue(run):
    res = measure(run, 3)
    assert res.measured["lambda_inf"] == pytest.approx(2 / 1.5, rel=0.03)
    assert res.passed


def test_criterion_04_decay_exponent(run):
    res = measure(run, 4)
    assert res.measured["p"] == pytest.approx(2 + 1.5, rel=0.05)
    assert res.passed


def test_criterion_05_eigenvalue_bounds(run):
    res = measure(run, 5)
    m = res.measured
    assert m["lower"] <= m["lambda_inf"] <= m["upper"]
    assert res.passed


def test_criterion_06_exhaustion_monotonicity(run):
    res = measure(run, 6)
    for seq in (res.measured["linear"], res.measured["minus"]):
        assert all(b <= a + 1e-3 * (1 + a) for a, b in zip(seq, seq[1:]))
    assert res.passed


def test_criterion_07_punctured_bound(run):
    res = measure(run, 7)
    m = res.measured
    assert min(m["lambda_eps"]) >= m["bound"] and m["decreasing"]
    assert res.passed


def test_criterion_08_scaling(run):
    res = measure(run, 8)
    assert res.measured["linear_rel"] <= 0.01 and res.measured["minus_rel"] <= 0.01
    assert res.passed


def test_criterion_09_barriers(run):
    res = measure(run, 9)
    for name in ("linear", "pucci"):
        part = res.measured[name]
        assert part["sub"] and part["super"] and part["corollary_M_c"] is not None
        assert part["corollary_M_c"][1] > 0
    assert res.passed


def test_criterion_10_harnack(run):
    res = measure(run, 10)
    m = res.measured
    assert m["nonnegative"] and m["finite"]
    assert abs(m["max_ratio_100"] - m["max_ratio_50"]) <= 0.5 * m["max_ratio_50"]
    assert res.passed


def test_criterion_11_heat(run):
    res = measure(run, 11)
    m = res.measured
    assert m["cauchy_rel"] <= 1e-3 and m["eigen_residual"] < 1e-2 and math.isfinite(m["band_ratio"])
    assert res.passed


def test_criterion_12_oracle_equivalence(run):
    res = measure(run, 12)
    assert res.measured["max_rel_error"] < 1e-3 and res.measured["duality_gap_over_allowed"] <= 1.0
    assert res.passed


def test_criterion_13_simplicity(run):
    res = measure(run, 13)
    assert res.measured["linear_distance"] < 1e-2 and res.measured["minus_distance"] < 1e-2
    assert res.passed
