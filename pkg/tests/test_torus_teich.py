import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinframe import torus_teich as tt
from thinframe.metric_core import hyp_d

upper = st.builds(complex, st.floats(-3, 3), st.floats(0.2, 5))
sl2z_words = st.lists(st.sampled_from([tt.S, tt.T, tt.T_INV]), min_size=1, max_size=8)


def _word(ws):
    m = tt.MappingClass(1, 0, 0, 1)
    for w in ws:
        m = m @ w
    return m


def test_distance_oracle():
    assert tt.teich_distance(1j, 2j) == pytest.approx(math.log(2) / 2, abs=1e-15)
    assert tt.teich_distance(1j, 1j) == 0


@settings(max_examples=100)
@given(upper, upper, sl2z_words)
def test_distance_is_modular_invariant(z1, z2, ws):
    m = _word(ws)
    w1, w2 = tt.apply_mapping_class(m, z1), tt.apply_mapping_class(m, z2)
    assert tt.teich_distance(w1, w2) == pytest.approx(tt.teich_distance(z1, z2), abs=1e-9)


@settings(max_examples=100)
@given(upper, st.integers(-20, 20), st.integers(-20, 20))
def test_ext_length_is_squared_flat_length(tau, p, q):
    if math.gcd(p, q) != 1:
        return
    v = tt.flat_vector(tau, (p, q))
    assert tt.ext_length(tau, (p, q)) == pytest.approx(abs(v) ** 2, rel=1e-12)


def test_curve_and_mapping_class_validation():
    with pytest.raises(ValueError):
        tt.CurveClass(2, 4)
    with pytest.raises(ValueError):
        tt.CurveClass(0, 0)
    with pytest.raises(ValueError):
        tt.MappingClass(1, 1, 1, 1)
    assert tt.CurveClass.canonical(-1, -2) == tt.CurveClass(1, 2)
    assert (tt.T @ tt.T_INV).as_tuple() == (1, 0, 0, 1)
    assert (tt.S @ tt.S).trace == -2


def test_kerckhoff_matches_closed_form_on_axis():
    r = tt.kerckhoff_scan(1j, 2j, 50)
    assert r.distance == pytest.approx(math.log(2) / 2, abs=1e-14)
    assert tuple(abs(x) for x in r.argmax_pq) in {(0, 1), (1, 0)}


@pytest.mark.filterwarnings("ignore:Kerckhoff sup attained")
@settings(max_examples=40, deadline=None)
@given(upper, upper)
def test_kerckhoff_never_exceeds_closed_form(z1, z2):
    assert tt.kerckhoff_distance(z1, z2, 20) <= tt.teich_distance(z1, z2) + 1e-12


def test_primitive_vectors():
    v = tt.primitive_vectors(3)
    assert all(math.gcd(int(p), int(q)) == 1 for p, q in v)
    # one representative of each +/- pair: Euler-phi count 2 * sum phi + 2 axes
    assert len(v) == len({(int(p), int(q)) for p, q in v})
    assert (1, 0) in {tuple(map(int, x)) for x in v}


@settings(max_examples=100)
@given(upper)
def test_reduce_point_lands_in_fundamental_domain(tau):
    r = complex(tt.reduce_point(tau))
    assert abs(r.real) <= 0.5 + 1e-12
    assert abs(r) >= 1 - 1e-12
    assert tt.systole(tau) == pytest.approx(tt.systole(r), rel=1e-9)


def test_systole_and_thick_part():
    assert tt.systole(1j) == pytest.approx(1.0)
    assert tt.in_thick(1j, 0.9)
    assert not tt.in_thick(10j, 0.5)


def test_geodesic_is_unit_speed():
    g = tt.TeichGeodesic(1j, 0.3)
    for t in (0.5, 2.0, 7.0):
        z = tt.geodesic_point_mp(g, t)
        assert float(tt.TEICH.distance(1j, z)) == pytest.approx(t, rel=1e-10)


def test_vertical_geodesic_goes_up():
    g = tt.TeichGeodesic(1j, "vertical")
    assert tt.geodesic_point(g, math.log(2)) == pytest.approx(4j)


@pytest.mark.parametrize("xi", [Fraction(0), Fraction(1, 2), Fraction(3, 7), Fraction(-5, 3), tt.INF])
@pytest.mark.parametrize("eps", [0.3, 0.7])
def test_thin_times_match_direct_systole(xi, eps):
    intervals = tt.thin_times(xi, eps, t_max=12)
    g = tt.TeichGeodesic(1j, xi)
    ts = np.linspace(0.01, 12, 400)
    with mpmath.workdps(60):
        for t in ts:
            z = tt.geodesic_point_mp(g, t)
            thin = tt.systole(z) < eps
            inside = any(lo <= t <= hi for lo, hi in intervals)
            if not any(abs(t - e) < 1e-6 for iv in intervals for e in iv):
                assert thin == inside, (t, thin, intervals)


def test_unsigned_holonomy_scales_along_flow():
    for curve in [(1, 0), (0, 1), (2, 3), (-1, 4)]:
        h0, v0 = tt.unsigned_holonomy_along(1j, "vertical", curve, 0.0)
        for t in (0.3, 1.7):
            h, v = tt.unsigned_holonomy_along(1j, "vertical", curve, t)
            assert h == pytest.approx(math.exp(t) * h0, rel=1e-12, abs=1e-14)
            assert v == pytest.approx(math.exp(-t) * v0, rel=1e-12, abs=1e-14)


def test_curve_families_are_nonempty_and_json():
    rep = tt.curve_families(0.3 + 1.1j, "vertical", 2.0)
    d = rep.to_dict()
    assert d["C1"] and d["C2"]
    assert tt.to_json(d)


def test_not_in_upper_half_plane():
    with pytest.raises(ValueError):
        tt.teich_distance(1j, -1j)


def test_curve_family_replay_frame_is_consistent():
    r = tt.curve_family_replay(1j, 0.3 + 1.2j, 2 + 1.5j, 3.0, 0.5)
    fr = r["frame"]
    assert fr["c"] >= max(fr["a"], fr["b"]) - 1e-12
    assert fr["d"] >= (fr["a"] + fr["b"] - fr["c"]) / 2 - 1e-12
    assert fr["d"] == pytest.approx(
        hyp_d(fr["a"], fr["b"], fr["c"], 0.5), abs=1e-9)
