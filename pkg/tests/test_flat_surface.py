import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from thinframe import flat_surface as fs


def brute_primitive(L):
    R = int(math.floor(L)) + 1
    return sum(1 for p in range(-R, R + 1) for q in range(-R, R + 1)
               if (p, q) != (0, 0) and math.gcd(p, q) == 1 and p * p + q * q <= L * L)


def test_square_torus_invariants():
    s = fs.square_torus()
    assert s.genus == 1
    assert s.area == 1
    assert s.translation and s.exact
    assert [round(a / math.pi, 9) for a in s.cone_angles.values()] == [2.0]


def test_l_shape_has_one_six_pi_point():
    s = fs.l_shaped_surface()
    assert s.genus == 2
    assert [round(a / math.pi, 9) for a in s.cone_angles.values()] == [6.0]


def test_pillowcase_has_four_pi_points():
    s = fs.pillowcase()
    assert not s.translation
    assert sorted(round(a / math.pi, 9) for a in s.cone_angles.values()) == [1.0] * 4
    cover = fs.orientation_double_cover(s)
    assert cover.translation
    assert cover.area == 2 * s.area


def test_gauss_bonnet_on_builtins():
    for s in (fs.square_torus(), fs.l_shaped_surface(), fs.pillowcase()):
        total = sum(a - 2 * math.pi for a in s.cone_angles.values())
        assert total == pytest.approx(2 * math.pi * (2 * s.genus - 2))


def test_json_round_trip():
    s = fs.l_shaped_surface()
    t = fs.surface_from_json(s.to_json())
    assert t.summary() == s.summary()


def test_incomplete_gluing_rejected():
    d = {"polygons": [[[0, 0], [1, 0], [1, 1], [0, 1]]], "gluings": [[0, 0, 0, 2, "translation"]]}
    with pytest.raises(ValueError, match="gluing incomplete"):
        fs.surface_from_dict(d)


def test_non_parallel_gluing_rejected():
    d = {"polygons": [[[0, 0], [2, 0], [1, 1], [0, 1]]],
         "gluings": [[0, 0, 0, 2, "translation"], [0, 1, 0, 3, "translation"]]}
    with pytest.raises(ValueError):
        fs.surface_from_dict(d)


@pytest.mark.parametrize("L", [1, math.sqrt(2), 3, 5, 7.5])
def test_square_torus_saddle_count_matches_lattice(L):
    sc = fs.enumerate_saddle_connections(fs.square_torus(), L)
    assert len(sc) == brute_primitive(L)
    assert all(math.gcd(int(c.h), int(c.v)) == 1 for c in sc)


def test_saddle_connections_are_exact_on_square_tiled_input():
    sc = fs.enumerate_saddle_connections(fs.square_torus(), 3)
    assert all(isinstance(c.h, Fraction) and isinstance(c.v, Fraction) for c in sc)


def test_saddle_count_is_monotone_in_L():
    s = fs.l_shaped_surface()
    counts = [len(fs.enumerate_saddle_connections(s, L)) for L in (1, 2, 3, 4)]
    assert counts == sorted(counts) and counts[0] > 0


def test_sheared_torus_counts_are_lattice_counts():
    s = fs.parallelogram_torus((1, 0), (Fraction(1, 3), 1))
    L = 4
    want = sum(1 for p in range(-8, 9) for q in range(-8, 9)
               if (p, q) != (0, 0) and math.gcd(p, q) == 1 and (p + q / 3) ** 2 + q ** 2 <= L * L)
    assert len(fs.enumerate_saddle_connections(s, L)) == want


def test_cylinders_of_square_torus():
    cyl = fs.enumerate_cylinders(fs.square_torus(), 3)
    # one cylinder per primitive direction, circumference = |(p, q)|, area 1
    assert len(cyl) == brute_primitive(3) // 2
    assert all(c.area == pytest.approx(1) for c in cyl)


def test_vertical_decompositions():
    sq = fs.vertical_decomposition(fs.square_torus())
    assert len(sq.cylinders) == 1 and not sq.minimal_components
    gold = fs.vertical_decomposition(fs.golden_sheared_torus())
    assert not gold.cylinders and len(gold.minimal_components) == 1
    L = fs.vertical_decomposition(fs.l_shaped_surface())
    assert len(L.cylinders) == 2
    assert L.parts_area == pytest.approx(L.surface_area)


primitive = st.tuples(st.integers(-20, 20), st.integers(-20, 20)).filter(
    lambda v: math.gcd(*v) == 1)


@settings(max_examples=60, deadline=None)
@given(primitive, primitive)
def test_intersection_equals_determinant(a, b):
    s = fs.square_torus()
    ca = fs.torus_line(s, *a)
    cb = fs.torus_line(s, *b, base=(Fraction(1, 3) + Fraction(1, 7919), Fraction(1, 5) + Fraction(1, 7907)))
    assert fs.intersection_number(ca, cb) == abs(a[0] * b[1] - a[1] * b[0])


def test_intersection_rejects_curves_from_different_surfaces():
    a = fs.torus_line(fs.square_torus(), 1, 0)
    b = fs.torus_line(fs.square_torus(), 0, 1)
    with pytest.raises(ValueError):
        fs.intersection_number(a, b)


def test_thick_bound_and_thin_rejection():
    s = fs.square_torus()
    a, b = fs.torus_line(s, 1, 2), fs.torus_line(s, 3, -1, base=(Fraction(1, 3), Fraction(1, 7)))
    rep = fs.check_thick_intersection_bound(s, 0.5, a, b)
    assert rep.passed and rep.i == 7
    with pytest.raises(ValueError, match="thick"):
        fs.check_thick_intersection_bound(s, 2.0, a, b)


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-5, 5), st.floats(-5, 5))
def test_flow_scales_holonomy(t, h, v):
    hol = fs.apply_flow(fs.Holonomy(h, v), t)
    assert abs(hol.h) == pytest.approx(math.exp(t) * abs(h), rel=1e-12, abs=1e-300)
    assert abs(hol.v) == pytest.approx(math.exp(-t) * abs(v), rel=1e-12, abs=1e-300)


def test_flowed_surface_keeps_area_and_saddle_count():
    s = fs.square_torus()
    g = fs.apply_flow(s, 0.4)
    assert float(g.area) == pytest.approx(1)
    assert fs.systole(g) < fs.systole(s)


def test_slope_bound_on_square_torus():
    s = fs.square_torus()
    a = fs.torus_line(s, 1, 120)
    b = fs.torus_line(s, -1, 130, base=(Fraction(1, 3) + Fraction(1, 7919), Fraction(1, 5) + Fraction(1, 7907)))
    rep = fs.slope_intersection_bound(s, a, b, H=10, epsilon=1.0)
    assert rep.i == 250
    assert rep.passed
    assert rep.extras["i_C"] + rep.extras["i_Z"] + rep.extras["low_slope"] == rep.i


def test_slope_bound_rejects_low_slope():
    s = fs.square_torus()
    a, b = fs.torus_line(s, 1, 3), fs.torus_line(s, 0, 1, base=(Fraction(1, 3), Fraction(1, 7)))
    with pytest.raises(ValueError, match="slope"):
        fs.slope_intersection_bound(s, a, b, H=10)


def test_k9():
    assert fs.k9(1.0) == 15
    assert fs.k9(0.5) == pytest.approx(4 + 9 + 16)


def test_surface_json_schema_keys():
    d = json.loads(fs.square_torus().to_json())
    assert set(d) == {"polygons", "gluings", "marked"}
