import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_pucci.fields import (
    AnalyticField,
    PowerLaw,
    RadialField,
    RadialGrid,
    ZeroOutside,
    fit_tail,
    fit_tail_window,
    graded_nodes,
    radial_derivative,
    read_csv,
    write_csv,
)


def grid(R=10.0, N=2, **kw):
    return RadialGrid.graded(R, N, **kw)


def test_constant_data_reproduced_at_a_node():
    g = grid()
    f = RadialField(g, np.ones(len(g)), ZeroOutside())
    assert f.eval(g.nodes[3]) == 1.0


def test_zero_outside_beyond_last_node():
    g = grid(5.0)
    f = RadialField(g, np.ones(len(g)))
    assert f.eval(5.5) == 0.0


def test_bump_power_at_origin():
    assert AnalyticField.bump_power(1.0, 3.0).eval(0.0) == 1.0


def test_fundamental_power_value():
    assert AnalyticField.power(-0.5).eval(4.0) == pytest.approx(0.5, rel=1e-15)


def test_power_field_refuses_origin():
    with pytest.raises(ValueError):
        AnalyticField.power(-0.5).eval(0.0)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        AnalyticField.gaussian().eval(-1.0)


def test_constant_field_has_zero_slope():
    assert radial_derivative(AnalyticField.constant(3.0), 2.7) == 0.0


def test_power_field_slope():
    assert radial_derivative(AnalyticField.power(-1.0), 2.0) == pytest.approx(-0.25, rel=1e-15)


def test_sampled_bump_power_slope_matches_closed_form():
    g = grid(20.0, h0=0.02)
    exact = AnalyticField.bump_power(1.0, 3.0)
    f = RadialField(g, exact(g.nodes), PowerLaw(1.0, 3.0))
    assert radial_derivative(f, 1.0) == pytest.approx(-3 * 2**-2.5, rel=1e-3)


def test_power_law_fit_is_exact_on_power_data():
    g = grid(100.0)
    f = RadialField(g, np.r_[2.0, 2 * g.nodes[1:] ** -3.5], PowerLaw(2.0, 3.5))
    fit = fit_tail(f, (len(g) // 2, len(g)))
    assert fit.A == pytest.approx(2.0, abs=1e-6)
    assert fit.p == pytest.approx(3.5, abs=1e-6)


def test_perturbed_power_law_fit():
    g = grid(100.0)
    x = np.maximum(g.nodes, 1e-3)
    f = RadialField(g, x**-2 * (1 + 1 / x), PowerLaw(1.0, 2.0))
    p = fit_tail_window(f, 50.0, 100.0).p
    assert 1.95 < p < 2.05


def test_constant_data_fits_zero_exponent():
    g = grid(100.0)
    f = RadialField(g, np.ones(len(g)))
    assert fit_tail(f, (10, len(g))).p == pytest.approx(0.0, abs=1e-12)


def test_power_law_tail_needs_positive_exponent():
    with pytest.raises(ValueError):
        PowerLaw(1.0, 0.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(np.linspace(0.1, 1, 40), 2)
    with pytest.raises(ValueError):
        RadialGrid(np.linspace(0, 1, 5), 2)
    with pytest.raises(ValueError):
        RadialGrid(np.r_[0.0, 0.5, 0.4, np.linspace(1, 2, 20)], 2)


def test_csv_round_trip_is_lossless(tmp_path):
    g = grid(30.0)
    f = RadialField(g, (1 + g.nodes**2) ** -1.75, PowerLaw(1.0, 3.5))
    p = write_csv(f, tmp_path / "f.csv", {"label": "demo"})
    back = read_csv(p)
    np.testing.assert_array_equal(back.grid.nodes, g.nodes)
    np.testing.assert_array_equal(back.values, f.values)
    assert back.tail == f.tail
    side = json.loads((tmp_path / "f.json").read_text())
    assert side["label"] == "demo"
    assert p.read_text().splitlines()[0] == "r,value"


def test_csv_is_deterministic(tmp_path):
    g = grid(8.0)
    f = RadialField(g, np.exp(-g.nodes))
    a = write_csv(f, tmp_path / "a.csv").read_bytes()
    b = write_csv(f, tmp_path / "b.csv").read_bytes()
    assert a == b


@given(st.floats(0.01, 0.2), st.floats(1.01, 1.1), st.floats(2.0, 80.0))
def test_graded_nodes_increase_and_end_at_radius(h0, ratio, R):
    x = graded_nodes(R, h0=h0, ratio=ratio)
    assert x[0] == 0.0 and x[-1] == pytest.approx(R)
    assert np.all(np.diff(x) > 0)


@given(st.floats(0.3, 3.0), st.floats(0.5, 4.0))
def test_interpolant_reproduces_nodes(w, amp):
    g = grid(4.0)
    v = amp * np.exp(-(g.nodes / w) ** 2)
    for smooth in (False, True):
        f = RadialField(g, v, smooth=smooth)
        np.testing.assert_allclose(f(g.nodes), v, rtol=1e-13, atol=1e-15)
        assert f.deriv(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0.5, 3.0), st.floats(0.5, 4.0), st.floats(0.0, 5.0))
def test_dilation_and_scaling(M, beta, r):
    f = AnalyticField.bump_power(M, beta)
    assert f.scaled(2.5).eval(r) == pytest.approx(2.5 * f.eval(r), rel=1e-14)
    assert f.dilated(2.0).eval(r) == pytest.approx(f.eval(2.0 * r), rel=1e-14)


def test_tail_continuity_warning():
    g = grid(10.0)
    with pytest.warns(RuntimeWarning):
        RadialField(g, np.ones(len(g)), PowerLaw(100.0, 1.0))


@given(st.floats(0.2, 2.0))
def test_gaussian_curvature_at_origin(w):
    f = AnalyticField.gaussian(w)
    assert f.second_derivative(0.0) == pytest.approx(-2 / w**2, rel=1e-12)
    assert math.isfinite(f.eval(0.0))
