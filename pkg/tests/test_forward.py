import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdotpeak import ForwardModel, GridSpec, PhysicalParams, SdPair, Target
from fdotpeak.errors import PeakNotBracketed
from fdotpeak.forward import (
    Um_lifetime,
    khat,
    peak_time_numeric,
    response_curve,
    um_asymptotic,
    um_zero_lifetime,
)
from fdotpeak.peaktime import PeakEquationContext, asymptotic_peak_small_ell

# Frozen from tests/oracles.py (mpmath erfc integral, 1e6-point midpoint rule,
# 4000 x 4000 nested midpoint grid).
KHAT_20_1000 = 0.210770636931373
UM_1500 = 1.1790192685700421e-24
UM_LIFETIME_100_2000 = 5.2736744080090474e-23


# -- boundary factor ----------------------------------------------------------


def test_khat_reference_value(params):
    val = khat(20.0, 1000.0, params)
    assert 0.0 < val < 1.0
    assert val == pytest.approx(KHAT_20_1000, rel=1e-10)


def test_khat_no_reflection_is_one():
    p = PhysicalParams(beta=0.0)
    assert khat(20.0, 1000.0, p) == 1.0
    assert np.all(khat(5.0, np.linspace(1, 1e5, 50), p) == 1.0)


def test_khat_short_time_limit(params):
    assert khat(20.0, 1e-6, params) == pytest.approx(1.0, abs=1e-6)


def test_khat_no_overflow_at_long_times(params):
    # exp(xi^2) alone overflows here
    val = khat(1.0, 1e7, params)
    assert np.isfinite(val) and 0.0 < val < 1.0


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.1, 100.0),
    st.floats(1e-2, 1e6),
    st.floats(0.0, 5.0),
    st.floats(0.0, 5.0),
)
def test_khat_range_and_monotone_in_beta(xc3, t, b1, b2):
    lo, hi = sorted((b1, b2))
    k_lo = khat(xc3, t, PhysicalParams(beta=lo))
    k_hi = khat(xc3, t, PhysicalParams(beta=hi))
    assert 0.0 < k_hi <= 1.0
    assert k_hi <= k_lo + 1e-15


# -- zero-lifetime response ---------------------------------------------------


def test_um_reference_value(pair, target, params):
    assert um_zero_lifetime(1500.0, pair, target, params) == pytest.approx(UM_1500, rel=1e-6)


def test_um_short_time_vanishes(pair, target, params):
    assert um_zero_lifetime(0.0, pair, target, params) == 0.0
    assert um_zero_lifetime(1.0, pair, target, params) < 1e-200


def test_um_fixed_rule_matches_adaptive(pair, target, params):
    m = ForwardModel(pair, target, params)
    times = np.linspace(100.0, 5000.0, 25)
    grid = m.um_grid(times)
    ref = np.array([m.um(t, rtol=1e-10) for t in times])
    np.testing.assert_allclose(grid, ref, rtol=1e-9)


def test_um_tolerance_refinement(pair, target, params):
    m = ForwardModel(pair, target, params)
    for t in (300.0, 600.0, 2000.0):
        assert m.um(t, rtol=1e-8) == pytest.approx(m.um(t, rtol=1e-11), rel=1e-8)
    fine = ForwardModel(pair, target, params, n_nodes=128)
    times = np.linspace(200.0, 3000.0, 10)
    np.testing.assert_allclose(m.um_grid(times), fine.um_grid(times), rtol=1e-10)


def test_um_linear_in_strength(pair, target, params):
    doubled = params.replace(c_strength=2.0)
    for t in (400.0, 1500.0):
        assert um_zero_lifetime(t, pair, target, doubled) == pytest.approx(
            2.0 * um_zero_lifetime(t, pair, target, params), rel=1e-12)


# -- finite lifetime ----------------------------------------------------------


def test_Um_reference_value(pair, target, params):
    val = Um_lifetime(2000.0, pair, target, params.replace(ell=100.0))
    assert val == pytest.approx(UM_LIFETIME_100_2000, rel=1e-5)


def test_Um_short_lifetime_limit(pair, target, params):
    p0 = params.replace(ell=0.0)
    tp = peak_time_numeric(pair, target, p0).t_peak
    m1 = ForwardModel(pair, target, params.replace(ell=1.0))
    m0 = ForwardModel(pair, target, p0)
    for t in (0.9 * tp, tp, 1.1 * tp):
        assert m1.Um(t) == pytest.approx(m0.um(t), rel=0.02)


def test_Um_zero_lifetime_is_um(pair, target, params):
    m = ForwardModel(pair, target, params.replace(ell=0.0))
    assert m.Um(800.0) == m.um(800.0)
    assert Um_lifetime(0.0, pair, target, params.replace(ell=50.0)) == 0.0


def test_Um_panel_refinement(pair, target, params):
    m = ForwardModel(pair, target, params.replace(ell=100.0))
    edges = np.linspace(0.0, 1500.0, 129)
    coarse = m._conv_cumulative(edges, m=8)[-1]
    fine = m._conv_cumulative(np.linspace(0.0, 1500.0, 513), m=8)[-1]
    assert coarse == pytest.approx(fine, rel=1e-9)


# -- asymptotic profile -------------------------------------------------------


def test_asymptotic_ratio_at_depth(pair, params):
    deep = Target([10, 10, 40])
    p0 = params.replace(ell=0.0)
    tp = peak_time_numeric(pair, deep, p0).t_peak
    ratio = um_zero_lifetime(tp, pair, deep, p0) / um_asymptotic(tp, pair, deep, p0)
    assert abs(ratio - 1.0) < 0.10


def test_asymptotic_ratio_improves_with_depth(pair, params):
    p0 = params.replace(ell=0.0)
    gaps = []
    for z in (20, 40, 80, 160):
        tgt = Target([10, 10, z])
        tp = peak_time_numeric(pair, tgt, p0).t_peak
        gaps.append(abs(um_zero_lifetime(tp, pair, tgt, p0) / um_asymptotic(tp, pair, tgt, p0) - 1.0))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_asymptotic_scaling_and_tails(pair, target, params):
    t = np.array([0.0, 500.0, 1e6])
    a1 = um_asymptotic(t, pair, target, params)
    a2 = um_asymptotic(t, pair, target, params.replace(c_strength=2.0))
    assert a1[0] == 0.0 and a1[2] == 0.0
    np.testing.assert_allclose(a2, 2.0 * a1, rtol=1e-14)


# -- curves -------------------------------------------------------------------


def test_curve_shape(pair, target, params):
    c = response_curve(pair, target, params.replace(ell=100.0), 3000.0, n_points=301)
    assert c.times[0] == 0.0 and c.values[0] == 0.0
    assert np.all(c.values >= 0) and np.all(c.u_m >= 0)
    with pytest.raises(ValueError):
        c.values[1] = 1.0
    with pytest.raises(ValueError):
        ForwardModel(pair, target, params).curve([1.0, 2.0])
    with pytest.raises(ValueError):
        ForwardModel(pair, target, params).curve([0.0, 2.0, 1.0])


def test_curve_matches_pointwise(pair, target, params):
    p = params.replace(ell=100.0)
    m = ForwardModel(pair, target, p)
    c = m.curve(np.linspace(0.0, 2000.0, 41))
    assert c.values[-1] == pytest.approx(m.Um(2000.0), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-20, 20), st.floats(-20, 20), st.floats(5, 40),
    st.floats(0.0, 500.0),
)
def test_curve_nonnegative(x1, x2, z, ell):
    pair = SdPair([0, 0, 0], [8, 0, 0])
    p = PhysicalParams(ell=ell)
    c = ForwardModel(pair, Target([x1, x2, z]), p).curve(np.linspace(0.0, 4000.0, 81))
    assert np.all(c.values >= 0) and np.all(c.u_m >= 0)


# -- numeric peak -------------------------------------------------------------


def test_peak_unimodal_and_close_to_expansion(pair, target, params):
    p = params.replace(ell=100.0)
    est = peak_time_numeric(pair, target, p)
    assert est.method == "numeric"
    assert est.flags["unimodal"] is True
    lo, hi = est.flags["bracket"]
    assert lo < est.t_peak < hi
    ts = asymptotic_peak_small_ell(PeakEquationContext.from_geometry(pair, target, p)).t_peak
    assert abs(est.t_peak - ts) / est.t_peak < 0.05


def test_peak_translation_invariance(pair, target, params):
    p = params.replace(ell=100.0)
    shift = np.array([3.5, -7.25, 0.0])
    moved = peak_time_numeric(pair.translated(shift), Target(target.x_c + shift), p)
    assert moved.t_peak == pytest.approx(peak_time_numeric(pair, target, p).t_peak, abs=0.1)


def test_rotation_invariance(params):
    p = params.replace(ell=100.0)
    pair, tgt = SdPair([6, 10, 0], [14, 10, 0]), Target([8, 7, 20])
    th = 0.7
    R = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
    rpair = SdPair(R @ pair.x_s, R @ pair.x_d)
    rtgt = Target(R @ tgt.x_c)
    times = np.linspace(0.0, 2500.0, 51)
    a = ForwardModel(pair, tgt, p).curve(times)
    b = ForwardModel(rpair, rtgt, p).curve(times)
    np.testing.assert_allclose(b.values, a.values, rtol=1e-10, atol=1e-300)


def test_peak_invariant_under_strength(pair, target, params):
    p = params.replace(ell=100.0)
    a = peak_time_numeric(pair, target, p).t_peak
    b = peak_time_numeric(pair, target, p.replace(c_strength=7.0)).t_peak
    assert a == pytest.approx(b, abs=1e-9)


def test_peak_grid_refinement(pair, target, params):
    p = params.replace(ell=100.0)
    a = peak_time_numeric(pair, target, p).t_peak
    b = peak_time_numeric(pair, target, p, GridSpec(n_panels=1024, xtol=0.01)).t_peak
    assert a == pytest.approx(b, abs=0.1)


def test_peak_not_bracketed(pair, target, params):
    with pytest.raises(PeakNotBracketed):
        peak_time_numeric(pair, target, params.replace(ell=100.0), GridSpec(t_max=100.0))


@pytest.mark.parametrize("ell,depth", [(100.0, 20.0), (1000.0, 30.0), (30.0, 45.0)])
def test_peak_where_response_meets_zero_lifetime_curve(params, pair, ell, depth):
    # dU/dt = (u - U)/ell, so U and u cross exactly at the maximiser of U
    tgt = Target([10, 10, depth])
    m = ForwardModel(pair, tgt, params.replace(ell=ell))
    t = m.peak(GridSpec(xtol=1e-3)).t_peak
    U, u = m.Um(t), m.um(t)
    slope = abs(m.um(t + 1.0) - m.um(t - 1.0)) / 2.0
    assert abs(U - u) <= slope * 2e-3 + 1e-9 * U
