"""Comparison-triangle frames in model geodesic spaces.

A frame of a triangle ``xyz`` is obtained by relabeling the vertices so that
``d(y, z)`` is the longest side and putting ``w`` on the geodesic from ``y``
to ``z`` with ``d(w, y) = d(x, y)``.  The four numbers are

    a = d(x, y) = d(w, y),  b = d(x, z),  c = d(y, z),  d = d(w, x)

and the defect ratio is ``rho = (a + b - c) / a``.  The "thin-framed
triangles are thin" test asks for ``d <= a * f(rho)`` with ``f(t) -> 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import mpmath
import numpy as np

FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class TriangleFrame:
    a: Any
    b: Any
    c: Any
    d: Any
    rho: Any
    space_tag: str
    points: tuple | None = None
    degenerate: bool = False

    @property
    def defect(self):
        return self.a + self.b - self.c

    def to_dict(self) -> dict:
        out = {k: _num(getattr(self, k)) for k in ("a", "b", "c", "d", "rho")}
        out["space"] = self.space_tag
        out["degenerate"] = self.degenerate
        return out


@dataclass
class StarBin:
    rho_lo: float
    rho_hi: float
    sup_d_over_a: float = 0.0
    count: int = 0


@dataclass
class StarReport:
    space: str
    bound: str
    samples: int
    bins: list[StarBin]
    violations: list[TriangleFrame] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "bound": self.bound,
            "samples": self.samples,
            "bins": [
                {"rho_lo": b.rho_lo, "rho_hi": b.rho_hi,
                 "sup_d_over_a": b.sup_d_over_a, "count": b.count}
                for b in self.bins
            ],
            "violations": [f.to_dict() for f in self.violations],
            **({"extras": self.extras} if self.extras else {}),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _num(v):
    if isinstance(v, Fraction):
        return float(v) if v.denominator != 1 else int(v)
    if isinstance(v, mpmath.mpf):
        return float(v)
    return v


# ---------------------------------------------------------------------------
# model spaces


class EuclideanPlane:
    tag = "euclidean"
    exact = False

    def check(self, p):
        if len(p) != 2 or not all(math.isfinite(float(c)) for c in p):
            raise ValueError(f"non-finite or malformed planar point {p!r}")
        return p

    def distance(self, p, q):
        dx, dy = q[0] - p[0], q[1] - p[1]
        if isinstance(dx, Fraction) and isinstance(dy, Fraction):
            sq = dx * dx + dy * dy
            r = _exact_sqrt(sq)
            return r if r is not None else math.sqrt(sq)
        return math.hypot(dx, dy)

    def toward(self, p, q, t):
        length = self.distance(p, q)
        if length == 0:
            return p
        s = t / length
        return (p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]))


def _exact_sqrt(q: Fraction) -> Fraction | None:
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


class HyperbolicPlane:
    """Upper half-plane of curvature -1, distances multiplied by ``scale``.

    ``scale=0.5`` gives the Teichmuller metric of the once-marked torus.
    Points are complex numbers (or ``mpmath.mpc``); internal arithmetic runs
    in mpmath at ``dps`` digits so points near the ideal boundary stay
    resolvable.
    """

    exact = False

    def __init__(self, scale: float = 1.0, dps: int = 30, tag: str | None = None):
        self.scale = scale
        self.dps = dps
        self.tag = tag or ("hyperbolic" if scale == 1.0 else f"hyperbolic*{scale:g}")

    def check(self, p):
        z = complex(p)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"non-finite point {p!r}")
        if not mpmath.im(p) > 0:
            raise ValueError("not in upper half-plane")
        return p

    def distance(self, p, q):
        with mpmath.workdps(self.dps):
            p, q = mpmath.mpc(p), mpmath.mpc(q)
            arg = 1 + abs(p - q) ** 2 / (2 * p.imag * q.imag)
            return float(self.scale * mpmath.acosh(arg))

    def distance_mp(self, p, q):
        p, q = mpmath.mpc(p), mpmath.mpc(q)
        arg = 1 + abs(p - q) ** 2 / (2 * p.imag * q.imag)
        return self.scale * mpmath.acosh(arg)

    def toward(self, p, q, t):
        """Point at distance ``t`` from ``p`` on the geodesic towards ``q``.

        The isometry ``z -> (z - p)/(z - conj p)`` sends ``p`` to the centre of
        the disk, where geodesics through ``p`` are radii.
        """
        # 1 - tanh(t / 2) ~ 2 e^-t must stay resolvable
        dps = max(self.dps, int(float(t) / self.scale / 2.3) + 25)
        with mpmath.workdps(dps):
            p, q = mpmath.mpc(p), mpmath.mpc(q)
            u = (q - p) / (q - mpmath.conj(p))
            if abs(u) == 0:
                return p
            r = mpmath.tanh(mpmath.mpf(t) / self.scale / 2)
            zeta = r * u / abs(u)
            return (p - mpmath.conj(p) * zeta) / (1 - zeta)


class Sphere:
    tag = "sphere"
    exact = False

    def check(self, p):
        v = np.asarray(p, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite or malformed sphere point {p!r}")
        return v / np.linalg.norm(v)

    def distance(self, p, q):
        p, q = np.asarray(p, float), np.asarray(q, float)
        return math.atan2(np.linalg.norm(np.cross(p, q)), float(np.dot(p, q)))

    def toward(self, p, q, t):
        p, q = np.asarray(p, float), np.asarray(q, float)
        perp = q - np.dot(p, q) * p
        n = np.linalg.norm(perp)
        if n < 1e-15:
            if np.dot(p, q) > 0:
                return p
            raise ValueError("antipodal points: geodesic not unique")
        perp /= n
        return math.cos(t) * p + math.sin(t) * perp


@dataclass(frozen=True)
class EdgePoint:
    """Point on the tree edge ``u -> v`` at distance ``s`` from ``u``."""

    u: Any
    v: Any
    s: Fraction


class TreeSpace:
    """Metric tree with exact rational edge lengths."""

    tag = "tree"
    exact = True

    def __init__(self, edges: Iterable[tuple[Any, Any, Any]]):
        self.adj: dict[Any, dict[Any, Fraction]] = {}
        for u, v, w in edges:
            w = Fraction(w)
            if w <= 0:
                raise ValueError("tree edge lengths must be positive")
            self.adj.setdefault(u, {})[v] = w
            self.adj.setdefault(v, {})[u] = w

    @classmethod
    def tripod(cls, r, s, t) -> "TreeSpace":
        if Fraction(s) == 0:
            # x sits at the centre
            return cls([("x", "y", r), ("x", "z", t)])
        return cls([("o", "y", r), ("o", "x", s), ("o", "z", t)])

    def check(self, p):
        if isinstance(p, EdgePoint) or p in self.adj:
            return p
        raise ValueError(f"unknown tree point {p!r}")

    def _vertex_path(self, u, v):
        prev = {u: None}
        stack = [u]
        while stack:
            a = stack.pop()
            for b in self.adj[a]:
                if b not in prev:
                    prev[b] = a
                    stack.append(b)
        path = [v]
        while path[-1] != u:
            path.append(prev[path[-1]])
        return path[::-1]

    def _vdist(self, u, v):
        path = self._vertex_path(u, v)
        return sum((self.adj[a][b] for a, b in zip(path, path[1:])), Fraction(0))

    def _anchors(self, p):
        if isinstance(p, EdgePoint):
            w = self.adj[p.u][p.v]
            return [(p.u, p.s), (p.v, w - p.s)]
        return [(p, Fraction(0))]

    def distance(self, p, q):
        if isinstance(p, EdgePoint) and isinstance(q, EdgePoint) and {p.u, p.v} == {q.u, q.v}:
            sq = q.s if q.u == p.u else self.adj[q.u][q.v] - q.s
            return abs(sq - p.s)
        return min(
            dp + self._vdist(u, v) + dq
            for u, dp in self._anchors(p)
            for v, dq in self._anchors(q)
        )

    def toward(self, p, q, t):
        t = Fraction(t)
        if isinstance(p, EdgePoint) or isinstance(q, EdgePoint):
            raise NotImplementedError("geodesics are traced between tree vertices only")
        path = self._vertex_path(p, q)
        for a, b in zip(path, path[1:]):
            w = self.adj[a][b]
            if t <= w:
                return b if t == w else (a if t == 0 else EdgePoint(a, b, t))
            t -= w
        return q


SPACES: dict[str, Callable[[], Any]] = {
    "euclidean": EuclideanPlane,
    "hyperbolic": HyperbolicPlane,
    "sphere": Sphere,
}


# ---------------------------------------------------------------------------
# frames


def frame_triangle(x, y, z, space) -> TriangleFrame:
    """Relabel ``(x, y, z)`` so the longest side is ``yz`` and measure the frame.

    The two endpoints of the longest side keep their input order.  When
    several sides tie for longest, the labeling with the smallest ``d`` wins.
    """
    pts = [space.check(p) for p in (x, y, z)]
    dist = {}
    for i in range(3):
        for j in range(i + 1, 3):
            dist[i, j] = dist[j, i] = space.distance(pts[i], pts[j])
    sides = {(i, j): dist[i, j] for i, j in ((0, 1), (0, 2), (1, 2))}
    longest = max(sides.values())
    if longest == 0:
        raise ValueError("zero triangle")
    tol = 0 if space.exact else FLOAT_SLACK * max(1.0, float(longest))
    best = None
    for (i, j), c in sorted(sides.items(), key=lambda kv: (kv[0][0] != 1, kv[0])):
        if longest - c > tol:
            continue
        k = 3 - i - j
        a, b = dist[k, i], dist[k, j]
        w = space.toward(pts[i], pts[j], a)
        d = space.distance(w, pts[k])
        if best is None or d < best[3] - tol:
            best = (a, b, c, d, (pts[k], pts[i], pts[j], w))
    a, b, c, d, points = best
    return _make_frame(a, b, c, d, space.tag, points)


def _make_frame(a, b, c, d, tag, points=None) -> TriangleFrame:
    if a == 0:
        return TriangleFrame(a, b, c, d, 0 if isinstance(a, (int, Fraction)) else 0.0,
                             tag, points, degenerate=True)
    return TriangleFrame(a, b, c, d, (a + b - c) / a, tag, points)


def euclid_d(a, b, c) -> float:
    """Comparison distance of a planar triangle from its side lengths alone."""
    a, b, c = (float(v) for v in (a, b, c))
    tol = FLOAT_SLACK * max(1.0, c)
    if a < 0 or b < 0 or a - c > tol or b - c > tol:
        raise ValueError("need 0 <= a, b <= c")
    if a + b < c - tol or a + c < b - tol or b + c < a - tol:
        raise ValueError("triangle inequality violated")
    if c == 0:
        return 0.0
    return math.sqrt(max(0.0, a * (a + b - c) * (c + b - a) / c))


def _log_sinh(x: float) -> float:
    if x > 20:
        return x - math.log(2.0) + math.log1p(-math.exp(-2 * x))
    return math.log(math.sinh(x))


def hyp_d(a, b, c, scale: float = 1.0) -> float:
    """Comparison distance of a hyperbolic triangle from its side lengths alone.

    Distances are ``scale`` times those of the curvature -1 plane.  Uses the
    identity ``2 sinh^2(D/2) = 2 sinh A sinh((B+C-A)/2) sinh((A+B-C)/2) / sinh C``
    (hyperbolic Stewart relation), which stays accurate for long sides and
    for nearly degenerate triangles.
    """
    A, B, C = (float(v) / scale for v in (a, b, c))
    tol = FLOAT_SLACK * max(1.0, C)
    if A < 0 or B < 0 or A - C > tol or B - C > tol:
        raise ValueError("need 0 <= a, b <= c")
    if A + B < C - tol or A + C < B - tol or B + C < A - tol:
        raise ValueError("triangle inequality violated")
    A = min(A, C)
    defect = max(0.0, A + B - C)
    if C == 0 or A == 0 or defect == 0:
        return 0.0
    other = max(0.0, B + C - A)
    if other == 0:
        return 0.0
    log_s = 0.5 * (_log_sinh(A) + _log_sinh(other / 2) + _log_sinh(defect / 2) - _log_sinh(C))
    return 2 * scale * math.asinh(math.exp(log_s))


def tripod_frame(r, s, t) -> TriangleFrame:
    """Exact frame of the tripod with legs ``r`` (to y), ``s`` (to x), ``t`` (to z).

    ``s = 0`` is allowed and puts x on the geodesic from y to z.
    """
    r, s, t = Fraction(r), Fraction(s), Fraction(t)
    if r <= 0 or t <= 0 or s < 0:
        raise ValueError("tripod legs must be positive (s may be zero)")
    if s > r or s > t:
        raise ValueError("leg to x must be the shortest so that d(y, z) is longest")
    a, b, c = r + s, s + t, r + t
    pts = ("x", "y", "z", EdgePoint("o", "z", s) if s else "o")
    return _make_frame(a, b, c, 2 * s, "tree", pts)


def hyp_distance(z1, z2) -> float:
    z1, z2 = complex(z1), complex(z2)
    if z1.imag <= 0 or z2.imag <= 0:
        raise ValueError("not in upper half-plane")
    return math.acosh(1 + abs(z1 - z2) ** 2 / (2 * z1.imag * z2.imag))


def sphere_counterexample(theta: float) -> TriangleFrame:
    """Triangle on the unit sphere with two distinct geodesics between poles.

    y and z are the poles, the frame uses the meridian at longitude 0 and x
    sits at colatitude ``theta`` on the opposite meridian, so ``c = a + b``
    while ``d = 2 * theta``.
    """
    if not 0 < theta <= math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2]")
    y = np.array([0.0, 0.0, 1.0])
    z = np.array([0.0, 0.0, -1.0])
    x = np.array([-math.sin(theta), 0.0, math.cos(theta)])
    w = np.array([math.sin(theta), 0.0, math.cos(theta)])
    sph = Sphere()
    a, b, c = theta, math.pi - theta, math.pi
    return TriangleFrame(a, b, c, sph.distance(w, x), 0.0, "sphere", (x, y, z, w))


# ---------------------------------------------------------------------------
# (star) testing


def make_bound(name: str, k: float = 1.0) -> Callable[[Any], float]:
    if name == "linear":
        return lambda t: t
    if name == "linear_k":
        return lambda t: k * t
    if name == "sqrt2t":
        return lambda t: math.sqrt(2 * float(t))
    raise ValueError(f"unknown bound {name!r}")


BOUNDS = ("linear", "linear_k", "sqrt2t")


def _empty_bins(nbins: int) -> list[StarBin]:
    edges = np.linspace(0.0, 1.0, nbins + 1)
    return [StarBin(float(lo), float(hi)) for lo, hi in zip(edges, edges[1:])]


def _bin_index(rho, nbins: int) -> int:
    return min(nbins - 1, max(0, int(float(rho) * nbins)))


def check_star(
    frames: Sequence[TriangleFrame],
    bound: str | Callable = "linear",
    bins: int = 10,
    k: float = 1.0,
    slack: float | None = None,
) -> StarReport:
    """Test ``d <= a * f(rho)`` frame by frame and tabulate sup d/a per rho-bin."""
    tags = {f.space_tag for f in frames}
    if len(tags) > 1:
        raise ValueError(f"mixed space tags: {sorted(tags)}")
    f = bound if callable(bound) else make_bound(bound, k)
    name = getattr(bound, "__name__", "custom") if callable(bound) else bound
    report = StarReport(tags.pop() if tags else "none", name, len(frames), _empty_bins(bins))
    for fr in frames:
        if fr.a == 0:
            continue
        exact = isinstance(fr.d, Fraction) and name == "linear"
        lhs, rhs = fr.d, fr.a * (f(fr.rho) if exact else f(float(fr.rho)))
        eps = 0 if exact else (FLOAT_SLACK * 1e3 if slack is None else slack)
        if lhs > rhs + eps:
            report.violations.append(fr)
        _accumulate(report, fr, bins)
    return report


def _accumulate(report: StarReport, fr: TriangleFrame, nbins: int) -> None:
    b = report.bins[_bin_index(fr.rho, nbins)]
    b.count += 1
    b.sup_d_over_a = max(b.sup_d_over_a, float(fr.d) / float(fr.a))


# ---------------------------------------------------------------------------
# samplers


def sample_frames(space: str, n: int, seed: int, min_side: float = 0.0,
                  radius: float | None = None) -> list[TriangleFrame]:
    """Draw ``n`` random frames; triangles with a side below ``min_side`` are redrawn."""
    rng = np.random.default_rng(seed)
    out: list[TriangleFrame] = []
    if space == "tripod":
        while len(out) < n:
            legs = sorted(Fraction(int(rng.integers(0, 1000)), int(rng.integers(1, 64)))
                          for _ in range(3))
            s, r, t = legs
            if rng.random() < 0.5:
                r, t = t, r
            if r == 0 or t == 0:
                continue
            fr = tripod_frame(r, s, t)
            if min(fr.a, fr.b, fr.c) >= min_side:
                out.append(fr)
        return out
    if space == "euclidean":
        sp = EuclideanPlane()
        R = radius or (4.0 * min_side if min_side > 0 else 1.0)
        draw = lambda: _disk_point(rng, R)
    elif space == "hyperbolic":
        sp = HyperbolicPlane()
        R = radius or 30.0
        draw = lambda: _hyperbolic_point(rng, R, sp.dps)
    elif space == "sphere":
        sp = Sphere()
        draw = lambda: _sphere_point(rng)
    else:
        raise ValueError(f"unknown space {space!r}")
    while len(out) < n:
        pts = [draw() for _ in range(3)]
        try:
            fr = frame_triangle(*pts, sp)
        except ValueError:
            continue
        if min(fr.a, fr.b, fr.c) >= min_side:
            out.append(fr)
    return out


def _disk_point(rng, R):
    r = R * math.sqrt(rng.random())
    th = 2 * math.pi * rng.random()
    return (r * math.cos(th), r * math.sin(th))


def _hyperbolic_point(rng, R, dps):
    """Point at hyperbolic distance uniform in [0, R] from i, uniform direction."""
    with mpmath.workdps(dps):
        rad = mpmath.mpf(R * rng.random())
        zeta = mpmath.tanh(rad / 2) * mpmath.expj(2 * mpmath.pi * rng.random())
        i = mpmath.mpc(0, 1)
        return (i + i * zeta) / (1 - zeta)


def _sphere_point(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def estimate_bounding_function(space: str, n: int, seed: int, bins: int = 10,
                               min_side: float = 0.0, bound: str | None = None,
                               **kw) -> StarReport:
    """Empirical sup of d/a per rho-bin plus sup of d - (a + b - c)."""
    if n <= 0:
        raise ValueError("empty sample")
    frames = sample_frames(space, n, seed, min_side=min_side, **kw)
    if bound is None:
        report = StarReport(frames[0].space_tag, "none", len(frames), _empty_bins(bins))
        for fr in frames:
            if fr.a != 0:
                _accumulate(report, fr, bins)
    else:
        report = check_star(frames, bound, bins)
    report.extras["sup_d_minus_defect"] = max(float(f.d - f.defect) for f in frames)
    report.extras["min_side"] = min_side
    return report


def sphere_family(thetas: Iterable[float]) -> list[TriangleFrame]:
    return [sphere_counterexample(t) for t in thetas]
