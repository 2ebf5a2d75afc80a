import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinframe import metric_core as mc
from thinframe import random_walk as rw
from thinframe import torus_teich as tt

GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)  # translation length of (2,1;1,1) at scale 1/2


def g_walk(steps=200, paths=1):
    return rw.WalkConfig([tt.MappingClass(2, 1, 1, 1)], [1.0], 1j, 0.5, steps, 0, paths)


def brute_records(a, D, slope):
    """Plain O(n^2) scan: for each n the last failing k decides the minimal N."""
    out = []
    for n in range(1, len(a)):
        last_bad = 0
        for k in range(1, n + 1):
            if not a[n] - D[k][n] >= slope * k:
                last_bad = k
        if last_bad < n:
            out.append((n, last_bad + 1))
    return out


def test_matrix_distance_oracle():
    assert rw.matrix_distance((1, 0, 0, 1)) == 0
    assert rw.matrix_distance((2, 1, 1, 1)) == pytest.approx(GOLDEN_LOG, rel=1e-15)
    m = (1, 0, 0, 1)
    for _ in range(300):
        m = rw._mul(m, (2, 1, 1, 1))
    assert rw.matrix_distance(m) == pytest.approx(300 * GOLDEN_LOG, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from([tt.S, tt.T, tt.T_INV]), min_size=1, max_size=30))
def test_matrix_distance_matches_mpmath(word):
    m = (1, 0, 0, 1)
    for g in word:
        m = rw._mul(m, g.as_tuple())
    a, b, c, d = m
    with mpmath.workdps(60):
        z = (a * mpmath.mpc(0, 1) + b) / (c * mpmath.mpc(0, 1) + d)
        want = float(tt.TEICH.distance_mp(mpmath.mpc(0, 1), z))
    assert rw.matrix_distance(m) == pytest.approx(want, abs=1e-12)


def test_config_validation_and_round_trip():
    cfg = rw.uniform_walk(50, seed=3, paths=2)
    again = rw.WalkConfig.from_json(json.dumps(cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()
    assert cfg.non_elementary
    assert not rw.WalkConfig([tt.T], [1.0]).non_elementary
    with pytest.raises(ValueError):
        rw.WalkConfig([tt.T, tt.S], [0.5, 0.6])
    with pytest.raises(ValueError):
        rw.WalkConfig([tt.T], [1.0], epsilon=0.0)


def test_basepoint_must_be_orbit_of_i():
    rw.WalkConfig([tt.T], [1.0], basepoint=1 + 1j)
    with pytest.raises(ValueError):
        rw.WalkConfig([tt.T], [1.0], basepoint=2j)


def test_paths_are_reproducible_and_independent():
    cfg = rw.uniform_walk(300, seed=11, paths=2)
    p0, p0b, p1 = rw.sample_path(cfg, 0), rw.sample_path(cfg, 0), rw.sample_path(cfg, 1)
    assert np.array_equal(p0.omega, p0b.omega)
    assert p0.final == p0b.final
    assert not np.array_equal(p0.omega, p1.omega)


def test_point_and_mapping_class_agree():
    cfg = rw.WalkConfig([tt.T, tt.T_INV, tt.S], [1 / 3] * 3, basepoint=1 + 1j, steps=60)
    path = rw.sample_path(cfg, 0)
    for n in (0, 7, 60):
        z = tt.apply_mapping_class(path.mapping_class(n), 1 + 1j)
        assert complex(path.point(n)) == pytest.approx(complex(z), abs=1e-9)


def test_cocycle_matches_direct_distances():
    cfg = rw.uniform_walk(400, seed=5)
    path = rw.sample_path(cfg, 0)
    table = rw.cocycle(path)
    rng = np.random.default_rng(0)
    for _ in range(30):
        k, n = sorted(int(x) for x in rng.integers(0, 401, 2))
        with mpmath.workdps(80):
            want = float(tt.TEICH.distance_mp(path.point(k), path.point(n)))
        assert table.distance(k, n) == pytest.approx(want, abs=1e-10)
    assert table.subadditivity_violation < 1e-9
    assert table.shifted_distance(0, 400) == pytest.approx(table.a[400], abs=1e-10)


def test_g_walk_drift_is_translation_length():
    path = rw.sample_path(g_walk(500), 0)
    table = rw.cocycle(path)
    assert table.a[500] / 500 == pytest.approx(GOLDEN_LOG, abs=1e-12)


def test_g_walk_limit_point_is_attracting_fixed_point():
    lp = rw.limit_point(rw.sample_path(g_walk(200), 0))
    assert lp.converged
    assert lp.xi_float == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)


def test_elliptic_walk_does_not_converge():
    cfg = rw.WalkConfig([tt.S], [1.0], steps=100)
    lp = rw.limit_point(rw.sample_path(cfg, 0))
    assert not lp.converged
    assert lp.message.startswith("no convergence")


def test_g_walk_tracks_its_axis():
    path = rw.sample_path(g_walk(300), 0)
    tr = rw.tracking_statistic(path, rw.limit_geodesic(path), GOLDEN_LOG)
    # the rational estimate U_N(inf) departs from the axis only near n = N
    assert np.max(tr.unmasked[:280]) < 1e-9
    assert tr.unmasked[300] < 1e-2


def test_drift_estimate_and_half_split():
    d = rw.drift_from_finals([1.0, 3.0, 2.0, 2.0], 10)
    assert d.A_hat == pytest.approx(0.2)
    assert d.half_split == pytest.approx(abs(0.2 - 0.2) / 0.2)
    with pytest.raises(ValueError):
        rw.estimate_drift(rw.uniform_walk(10, paths=1))


def test_estimate_drift_threads_agree():
    cfg = rw.uniform_walk(300, seed=2, paths=4)
    a = rw.estimate_drift(cfg, threads=1)
    b = rw.estimate_drift(cfg, threads=2)
    assert a.A_hat == b.A_hat


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 0.95))
def test_detect_records_matches_brute_force(seed, frac):
    rng = np.random.default_rng(seed)
    x = np.concatenate([[0.0], np.cumsum(rng.normal(0.3, 1.0, 150))])
    table = rw.SyntheticTable.from_positions(x)
    A = 0.3
    D = np.abs(x[:, None] - x[None, :])
    got = [(r.n, r.N) for r in rw.detect_records(table, A, A * frac, chunk=17)]
    assert got == brute_records(table.a, D, A - A * frac)


def test_escape_index_bounds_record_scales():
    rng = np.random.default_rng(4)
    x = np.concatenate([[0.0], np.cumsum(rng.normal(0.3, 1.0, 400))])
    table = rw.SyntheticTable.from_positions(x)
    N0 = rw.escape_index(table, 0.3, 0.15)
    assert all(r.N >= min(N0, r.n) or r.n < N0 for r in rw.detect_records(table, 0.3, 0.15))


def test_records_reject_bad_delta():
    table = rw.SyntheticTable.from_positions(np.arange(5.0))
    with pytest.raises(ValueError):
        rw.detect_records(table, 1.0, 1.5)


def test_rays_gap_matches_mpmath():
    for theta, r in ((0.3, 1.0), (1e-5, 4.0), (2.5, 0.2)):
        with mpmath.workdps(40):
            p = mpmath.mpc(0, 1)
            z1 = tt.geodesic_point_mp(tt.TeichGeodesic(1j, tt.INF), r)
            u = mpmath.expj(theta)
            zeta = mpmath.tanh(r) * u
            z2 = (p - mpmath.conj(p) * zeta) / (1 - zeta)
            want = float(tt.TEICH.distance_mp(z1, z2))
        assert rw.rays_gap(math.log(theta), r) == pytest.approx(want, rel=1e-9)


def test_thin_frame_pairs_match_direct_construction():
    cfg = rw.uniform_walk(1500, seed=1)
    path = rw.sample_path(cfg, 0)
    table = rw.cocycle(path)
    pairs = rw.thin_frame_pairs(path, table, 0.054, 0.0135, grid=12, max_pairs=6)
    assert pairs
    space = mc.HyperbolicPlane(scale=0.5, dps=300, tag="teichmuller_torus")
    with mpmath.workdps(300):
        for p in pairs:
            pts = [path.point(0), path.point(p.n), path.point(p.m)]
            fr = mc.frame_triangle(*pts, space)
            assert p.frame.d == pytest.approx(float(fr.d), abs=1e-8)
            assert p.frame.defect == pytest.approx(float(fr.defect), abs=1e-8)
            assert p.defect_ratio <= p.bound
            w = fr.points[3]
            sys_w = tt.systole(w)
            if abs(sys_w - cfg.epsilon) > 1e-3:
                assert p.w_thick == (sys_w >= cfg.epsilon)


def test_analyse_path_rows_shape():
    cfg = rw.uniform_walk(1200, seed=0)
    rep = rw.analyse_path(cfg, 0, 0.054, pair_grid=10, max_pairs=10)
    rows = rep.rows()
    assert len(rows) == 1201
    assert rows[0][:2] == (0, 0.0)
    assert {r[4] for r in rows} <= {0, 1}
