import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdotpeak import PhysicalParams, SdPair, Target
from fdotpeak.errors import GeometryError
from fdotpeak.physics import k_rate, lambda_param, radius_from_lambda, sd_geometry

coord = st.floats(-50, 50, allow_nan=False)
depth = st.floats(0.5, 80, allow_nan=False)


@st.composite
def geometries(draw):
    xs = [draw(coord), draw(coord), 0.0]
    xd = [draw(coord), draw(coord), 0.0]
    if math.hypot(xs[0] - xd[0], xs[1] - xd[1]) < 1e-3:
        xd[0] += 1.0
    xc = [draw(coord), draw(coord), draw(depth)]
    return SdPair(xs, xd), Target(xc)


def test_k_rate_defaults():
    assert k_rate(PhysicalParams()) == pytest.approx(0.0219, rel=1e-15)
    assert k_rate(PhysicalParams(mu_a=0.05)) == pytest.approx(0.01095, rel=1e-15)


@pytest.mark.parametrize("field,value", [
    ("mu_a", 0.0), ("v", -1.0), ("D", 0.0), ("beta", -0.1), ("ell", -1.0),
    ("c_strength", 0.0), ("v", math.nan), ("ell", math.inf),
])
def test_params_reject_invalid(field, value):
    with pytest.raises(ValueError):
        PhysicalParams(**{field: value})


def test_params_replace_and_dict():
    p = PhysicalParams().replace(ell=100.0)
    assert p.ell == 100.0
    assert p.to_dict()["ell"] == 100.0
    assert p.vD == pytest.approx(0.073, rel=1e-15)


def test_pair_invariants():
    with pytest.raises(GeometryError):
        SdPair([0, 0, 1], [1, 0, 0])
    with pytest.raises(GeometryError):
        SdPair([1, 2, 0], [1, 2, 0])
    with pytest.raises(ValueError):
        SdPair([1, 2], [3, 4, 0])
    p = SdPair([6, 10, 0], [14, 10, 0])
    assert np.array_equal(p.midpoint, [10, 10, 0])
    assert p.half_separation_sq == 16.0
    with pytest.raises(ValueError):
        p.x_s[0] = 3.0


def test_target_invariants():
    with pytest.raises(GeometryError):
        Target([0, 0, 0])
    with pytest.raises(GeometryError):
        Target([0, 0, -1])
    assert Target([1, 2, 3]).depth == 3.0


def test_lambda_symmetric_config(pair, target, params):
    assert lambda_param(pair, target, params) == pytest.approx(math.sqrt(832 / 0.146), rel=1e-14)


def test_lambda_asymmetric_target(pair, params):
    # |x_d - x_c|^2 = 36 + 9 + 400, |x_s - x_c|^2 = 4 + 9 + 400
    lam = lambda_param(pair, Target([8, 7, 20]), params)
    assert lam == pytest.approx(math.sqrt(858 / 0.146), rel=1e-14)


def test_radius_round_trip_example(pair, target, params):
    lam = lambda_param(pair, target, params)
    assert radius_from_lambda(lam, pair, params) == pytest.approx(20.0, rel=1e-13)


def test_radius_boundary_and_error(pair, params):
    lam0 = math.sqrt(pair.half_separation_sq / params.vD)
    assert radius_from_lambda(lam0, pair, params) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(GeometryError):
        radius_from_lambda(0.9 * lam0, pair, params)


def test_geometry_bundle(pair, params):
    g = sd_geometry(pair, Target([8, 7, 20]), params)
    assert g.k == pytest.approx(0.0219)
    assert g.leg_asymmetry == pytest.approx(32.0)
    assert np.array_equal(g.midpoint, [10, 10, 0])


@settings(max_examples=200, deadline=None)
@given(geometries())
def test_round_trip_property(geom):
    pair, target = geom
    p = PhysicalParams()
    r = radius_from_lambda(lambda_param(pair, target, p), pair, p)
    truth = float(np.linalg.norm(target.x_c - pair.midpoint))
    assert r == pytest.approx(truth, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(geometries())
def test_lambda_swap_symmetry(geom):
    pair, target = geom
    p = PhysicalParams()
    swapped = SdPair(pair.x_d, pair.x_s)
    assert lambda_param(swapped, target, p) == lambda_param(pair, target, p)


@settings(max_examples=100, deadline=None)
@given(geometries(), st.floats(1.01, 5.0))
def test_lambda_monotone_along_ray(geom, scale):
    pair, target = geom
    p = PhysicalParams()
    m = pair.midpoint
    far = Target(m + scale * (target.x_c - m))
    assert lambda_param(pair, far, p) > lambda_param(pair, target, p)
