import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinframe import metric_core as mc

fracs = st.fractions(min_value=0, max_value=50, max_denominator=40)
pos_fracs = st.fractions(min_value=Fraction(1, 40), max_value=50, max_denominator=40)
coords = st.floats(-20, 20, allow_nan=False)


@given(pos_fracs, fracs, pos_fracs)
def test_tripod_frame_is_exact(r, s, t):
    s = min(s, r, t)
    fr = mc.tripod_frame(r, s, t)
    assert fr.d == fr.a + fr.b - fr.c
    assert isinstance(fr.d, Fraction)
    assert fr.c >= max(fr.a, fr.b)


def test_tree_space_tripod_distances():
    tree = mc.TreeSpace.tripod(1, 2, 3)
    fr = mc.frame_triangle("x", "y", "z", tree)
    assert sorted([fr.a, fr.b, fr.c]) == [3, 4, 5]
    assert fr.d == fr.defect


@settings(max_examples=200)
@given(coords, coords, coords, coords, coords, coords)
def test_euclidean_closed_form_matches_construction(x1, y1, x2, y2, x3, y3):
    pts = [(x1, y1), (x2, y2), (x3, y3)]
    try:
        fr = mc.frame_triangle(*pts, mc.EuclideanPlane())
    except ValueError:
        return
    # from side lengths alone d has sqrt(rounding) sensitivity near collinearity
    assert fr.d == pytest.approx(mc.euclid_d(fr.a, fr.b, fr.c), abs=1e-6)
    assert fr.d >= fr.defect / 2 - 1e-9
    if fr.a > 0:
        assert fr.d <= math.sqrt(2 * max(fr.rho, 0.0)) * fr.a + 1e-9


def test_euclidean_degenerate_triangle_has_zero_d():
    fr = mc.frame_triangle((0, 0), (1, 0), (3, 0), mc.EuclideanPlane())
    assert fr.defect == pytest.approx(0, abs=1e-12)
    assert fr.d == pytest.approx(0, abs=1e-12)


def test_hyperbolic_distance_oracle():
    assert mc.hyp_distance(1j, 2j) == pytest.approx(math.log(2), abs=1e-15)
    # d(i, x + i) = 2 asinh(x / 2)
    assert mc.hyp_distance(1j, 3 + 1j) == pytest.approx(2 * math.asinh(1.5), abs=1e-14)


def test_hyperbolic_scale_halves_distances():
    h = mc.HyperbolicPlane(scale=0.5)
    assert float(h.distance(1j, 2j)) == pytest.approx(math.log(2) / 2, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_hyperbolic_closed_form_matches_construction(seed):
    fr = mc.sample_frames("hyperbolic", 1, seed)[0]
    assert mc.hyp_d(float(fr.a), float(fr.b), float(fr.c)) == pytest.approx(float(fr.d), abs=1e-9)
    assert fr.d >= fr.defect / 2 - 1e-12


def test_hyp_d_tends_to_euclid_at_small_scale():
    a, b, c = 1e-4, 1.3e-4, 1.9e-4
    assert mc.hyp_d(a, b, c) == pytest.approx(mc.euclid_d(a, b, c), rel=1e-6)


@pytest.mark.parametrize("theta", [0.1, 0.7, 1.2, math.pi / 2])
def test_sphere_counterexample(theta):
    fr = mc.sphere_counterexample(theta)
    assert fr.rho == pytest.approx(0, abs=1e-12)
    assert float(fr.d) / float(fr.a) == pytest.approx(2, abs=1e-9)


def test_sphere_counterexample_rejects_bad_theta():
    with pytest.raises(ValueError):
        mc.sphere_counterexample(0.0)


def test_bounds():
    assert mc.make_bound("linear")(0.25) == 0.25
    assert mc.make_bound("linear_k", 3)(0.25) == 0.75
    assert mc.make_bound("sqrt2t")(0.5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mc.make_bound("nope")


def test_check_star_tripod_passes_linear_and_sphere_fails():
    frames = mc.sample_frames("tripod", 300, seed=3)
    rep = mc.check_star(frames, "linear")
    assert rep.violations == []
    assert sum(b.count for b in rep.bins) == sum(1 for f in frames if f.a != 0)
    sph = mc.check_star(mc.sphere_family(np.linspace(0.1, 1.5, 20)), "sqrt2t")
    assert len(sph.violations) == 20


def test_check_star_rejects_mixed_spaces():
    frames = mc.sample_frames("tripod", 2, 0) + mc.sample_frames("euclidean", 2, 0)
    with pytest.raises(ValueError):
        mc.check_star(frames)


def test_sample_frames_unknown_space():
    with pytest.raises(ValueError):
        mc.sample_frames("torus", 3, 0)


def test_sample_frames_respects_min_side_and_seed():
    a = mc.sample_frames("euclidean", 50, seed=9, min_side=1.0)
    b = mc.sample_frames("euclidean", 50, seed=9, min_side=1.0)
    assert all(min(f.a, f.b, f.c) >= 1.0 for f in a)
    assert [f.d for f in a] == [f.d for f in b]


def test_report_round_trips_through_json():
    import json
    rep = mc.estimate_bounding_function("euclidean", 100, seed=1)
    d = json.loads(rep.to_json())
    assert d["samples"] == 100
    assert "sup_d_minus_defect" in d["extras"]


def test_hyperbolic_mp_distance_agrees_with_float():
    h = mc.HyperbolicPlane()
    z1, z2 = mpmath.mpc(0.3, 0.2), mpmath.mpc(-4, 7)
    assert float(h.distance_mp(z1, z2)) == pytest.approx(float(h.distance(complex(z1), complex(z2))), rel=1e-12)
