import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from thinframe import iet


def test_rotation_is_x_plus_alpha_mod_one():
    T = iet.rotation(Fraction(1, 3))
    assert T(Fraction(0)) == Fraction(1, 3)
    assert T(Fraction(5, 6)) == Fraction(1, 6)


@settings(max_examples=100)
@given(st.lists(st.fractions(min_value=Fraction(1, 50), max_value=3, max_denominator=50),
                min_size=2, max_size=5), st.randoms())
def test_exact_iet_is_a_bijection_preserving_lengths(lengths, rnd):
    perm = list(range(1, len(lengths) + 1))
    rnd.shuffle(perm)
    T = iet.build_iet(lengths, perm)
    assert T.exact
    pts = [Fraction(k, 97) * T.total for k in range(97)]
    imgs = [T(x) for x in pts]
    assert len(set(imgs)) == len(imgs)
    assert all(0 <= y < T.total for y in imgs)


def test_build_rejects_bad_input():
    with pytest.raises(ValueError):
        iet.build_iet([1, 1], [1, 1])
    with pytest.raises(ValueError):
        iet.build_iet([1, -1], [2, 1])


def test_keane_statuses():
    assert iet.keane_check(iet.rotation(Fraction(2, 5))).status == "periodic"
    assert iet.keane_check(iet.build_iet("golden", [2, 1]), 2000).status == "minimal_up_to_depth"


def test_orbit_of_rational_rotation_is_periodic():
    o = iet.orbit(iet.rotation(Fraction(2, 7)), Fraction(0), 20)
    assert o.periodic and o.period == 7


def test_first_return_area_and_induced_golden_rotation():
    susp = iet.golden_suspension()
    zr = iet.first_return(susp, iet.golden_gamma())
    assert float(zr.area) == pytest.approx(float(susp.area), rel=1e-12)
    # inducing the golden rotation on [0, gamma) rescales to a golden rotation
    lengths = sorted(float(w) for w in zr.induced.lengths)
    assert lengths[1] / lengths[0] == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-9)


def test_tall_section_golden():
    cert = iet.tall_section(iet.golden_suspension(), 10, samples=200)
    assert cert.verified_min_height >= 10
    assert cert.l2 <= cert.l1 <= cert.l0


def test_tall_section_heights_grow_with_H():
    a = iet.tall_section(iet.golden_suspension(), 5, samples=50)
    b = iet.tall_section(iet.golden_suspension(), 20, samples=50)
    assert b.l2 < a.l2


def test_tall_section_rejects_periodic():
    with pytest.raises(ValueError, match="not minimal"):
        iet.tall_section(iet.Suspension(iet.rotation(Fraction(1, 3)), [1, 1]), 10)


def test_flow_until_returns_height():
    susp = iet.Suspension(iet.rotation(Fraction(1, 4)), [1, 2])
    h, event = iet.flow_until(susp, Fraction(1, 8), Fraction(1, 4))
    # 1/8 -> 3/8 -> 5/8 -> 7/8 -> 1/8 with heights 1 + 1 + 1 + 2
    assert event == "return" and h == 5


def test_suspension_validates_heights():
    with pytest.raises(ValueError):
        iet.Suspension(iet.rotation(Fraction(1, 3)), [1, 0])


def test_random_iet_reproducible():
    a, b = iet.random_iet(4, 7), iet.random_iet(4, 7)
    assert a.lengths == b.lengths and a.permutation == b.permutation
