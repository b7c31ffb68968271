import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_pucci.fields import AnalyticField, RadialField, RadialGrid, ZeroOutside
from nonlocal_pucci.harnack import (
    ProblemSample,
    generate_family,
    harnack_ratio,
    level_set_fit,
    level_set_measure,
    run_harnack_experiment,
    solve_sample,
)
from nonlocal_pucci.kernels import EllipticityBounds

PUCCI = EllipticityBounds(1.0, 2.0, 0.75, 2)


def field_on(nodes, values):
    return RadialField(RadialGrid(np.asarray(nodes, float), 2), np.asarray(values, float), ZeroOutside())


# -- sample generation -----------------------------------------------------------------


def test_family_is_reproducible():
    a = generate_family(42, 5)
    b = generate_family(42, 5)
    assert a == b
    assert generate_family(43, 5) != a
    assert [smp.index for smp in a] == list(range(5))


def test_family_arguments_are_validated():
    with pytest.raises(ValueError):
        generate_family(0, 0)
    with pytest.raises(ValueError):
        generate_family(0, 3, M1=-1.0)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_samples_respect_their_bounds(seed, M1, M2):
    r = np.linspace(0.0, 4.0, 81)
    for smp in generate_family(seed, 3, M1, M2):
        assert np.all(np.abs(smp.c(r)) <= M2 + 1e-12)
        assert np.all(np.abs(smp.m(r)) <= M1 + 1e-12)
        assert np.all(smp.f(r) <= 0) and np.max(np.abs(smp.f(r))) <= smp.f_norm + 1e-12
        g = smp.exterior(r)
        assert np.all(g >= 0) and np.all(g[r > 3.0] == 0)


# -- ratio ---------------------------------------------------------------------------------


NODES = np.linspace(0.0, 2.0, 17)


def test_ratio_examples():
    u = field_on(NODES, 4.0 - 2.0 * NODES)
    assert harnack_ratio(u) == 2.0
    assert harnack_ratio(u, f_norm=2.0) == 1.0
    assert harnack_ratio(field_on(NODES, np.zeros_like(NODES))) == 0.0
    assert harnack_ratio(field_on(NODES, np.where(NODES < 0.75, 1.0, 0.0))) == math.inf


def test_ratio_rejects_negative_input():
    with pytest.raises(ValueError):
        harnack_ratio(field_on(NODES, 0.5 - NODES))
    with pytest.raises(ValueError):
        harnack_ratio(field_on(NODES, np.ones_like(NODES)), f_norm=-1.0)


# -- solves ----------------------------------------------------------------------------------


def test_zero_data_gives_the_zero_solution():
    smp = generate_family(1, 1, M1=0.0, M2=0.0, zero_amplitudes=True)[0]
    u = solve_sample(smp, PUCCI)
    assert np.all(u.values == 0.0)
    assert harnack_ratio(u, smp.f_norm) == 0.0


def test_constant_data_obeys_the_maximum_principle():
    u = solve_sample(ProblemSample.constant(1.0), PUCCI)
    inside = u.values[u.grid.nodes <= 2.0]
    assert np.all(inside >= -1e-12) and np.all(inside <= 1.0 + 1e-9)
    assert harnack_ratio(u.with_values(np.maximum(u.values, 0))) >= 1.0


def test_small_experiment_is_nonnegative_and_reproducible(tmp_path):
    rep = run_harnack_experiment(PUCCI, 1.0, 1.0, count=6, seed=3)
    assert rep.all_nonnegative and len(rep.records) + len(rep.failures) == 6
    assert np.all(np.isfinite(rep.ratios))
    assert all(r.sup >= r.inf for r in rep.records)
    again = run_harnack_experiment(PUCCI, 1.0, 1.0, count=6, seed=3)
    assert rep.to_csv(tmp_path / "a.csv") == again.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    summary = rep.summary()
    assert summary["count"] == len(rep.records) and 0 < summary["stability"] <= 1


def test_experiment_needs_large_order():
    with pytest.raises(ValueError):
        run_harnack_experiment(EllipticityBounds(1.0, 2.0, 0.4, 2), count=2)


# -- level sets ----------------------------------------------------------------------------------


def test_level_set_of_a_constant_jumps():
    one = AnalyticField.constant(1.0)
    assert level_set_measure(one, 0.5, 2.0, 2) == pytest.approx(4 * math.pi)
    assert level_set_measure(one, 1.0, 2.0, 2) == 0.0


def test_level_set_of_a_radial_decreasing_profile():
    u = AnalyticField.power(-1.0)
    # {1/|x| > t} is the ball of radius 1/t
    assert level_set_measure(u, 2.0, 1.0, 2) == pytest.approx(math.pi / 4, rel=1e-10)


def test_level_set_exponent_of_the_inverse_distance():
    u = AnalyticField.power(-1.0)
    fit = level_set_fit(u, 1.0, 0.0, [1.0, 2.0], [2.0, 4.0, 8.0, 16.0], N=2)
    assert fit.eps == pytest.approx(2.0, abs=1e-6)
    assert all(v == pytest.approx(2.0, abs=1e-6) for v in fit.per_radius.values())
    single = level_set_fit(u, 1.0, 0.0, [1.0], [2.0, 4.0, 8.0], N=2)
    assert single.r2 == pytest.approx(1.0, abs=1e-9) and single.n_points == 3


def test_level_set_fit_needs_a_nonempty_range():
    with pytest.raises(ValueError):
        level_set_fit(AnalyticField.constant(1.0), 1.0, 0.0, [1.0], [2.0, 3.0], N=2)
    with pytest.raises(ValueError):
        level_set_fit(AnalyticField.power(-1.0), 1.0, 1.0, [1.0], [2.0, 3.0], N=2)
