"""Flat surfaces glued from Euclidean polygons.

Polygons are counter-clockwise vertex lists; edge ``e`` of a polygon runs
from vertex ``e`` to vertex ``e + 1``.  A gluing ``(p, e, q, f, kind)``
identifies edge ``e`` of polygon ``p`` with edge ``f`` of polygon ``q`` by a
translation (the edge vectors are opposite) or a semi-translation
``z -> -z + c`` (the edge vectors are equal).  Coordinates may be
``Fraction`` (kept exact throughout) or floats.

Internally every polygon is ear-clipped into triangles; all geometric
algorithms run on the triangulation.  Every polygon vertex is treated as a
point of the singular set (regular unmarked vertices behave like marked
points for enumeration purposes).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import iet as iet_mod

TOL = 1e-9


# ---------------------------------------------------------------------------
# small vector helpers (work for Fractions and floats alike)


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def _neg(a):
    return (-a[0], -a[1])


def _norm2(a):
    return a[0] * a[0] + a[1] * a[1]


def _is_exact(v) -> bool:
    return isinstance(v, (Fraction, int)) and not isinstance(v, bool)


def _zero(v, exact):
    return v == 0 if exact else abs(v) <= TOL


def _num(v):
    """Parse a coordinate: ints/Fractions stay exact, "n/d" strings become
    Fractions, floats stay floats."""
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, Rational):
        return Fraction(v)
    return float(v)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Holonomy:
    h: float
    v: float

    @property
    def length(self) -> float:
        return math.hypot(float(self.h), float(self.v))

    def to_dict(self):
        return {"h": float(self.h), "v": float(self.v)}


@dataclass(frozen=True)
class Segment:
    """Straight piece of a curve inside triangle ``tri`` (chart coordinates).

    ``tri`` and the endpoints are optional for curves given only by their
    holonomy sequence."""

    h: object
    v: object
    tri: int | None = None
    start: tuple | None = None
    end: tuple | None = None

    @property
    def length(self) -> float:
        return math.hypot(float(self.h), float(self.v))


@dataclass
class FlatCurve:
    segments: list[Segment]
    closed: bool = True
    surface_id: int | None = None

    @classmethod
    def from_holonomies(cls, vecs, closed=False) -> "FlatCurve":
        return cls([Segment(h, v) for h, v in vecs], closed)

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def holonomy(self) -> Holonomy:
        return Holonomy(sum(s.h for s in self.segments), sum(s.v for s in self.segments))


@dataclass(frozen=True)
class SaddleConnection:
    h: object
    v: object
    start: int
    end: int

    @property
    def holonomy(self) -> Holonomy:
        return Holonomy(self.h, self.v)

    @property
    def length(self) -> float:
        return math.hypot(float(self.h), float(self.v))

    def to_dict(self):
        return {"h": float(self.h), "v": float(self.v), "length": self.length,
                "endpoints": [self.start, self.end]}


@dataclass
class Cylinder:
    circumference: Holonomy
    height: float
    boundary: tuple[list[SaddleConnection], list[SaddleConnection]] = ((), ())

    @property
    def area(self) -> float:
        return self.circumference.length * self.height

    @property
    def width(self) -> float:
        return self.height

    def to_dict(self):
        return {"circumference": self.circumference.to_dict(), "height": float(self.height),
                "area": self.area,
                "boundary": [[s.to_dict() for s in side] for side in self.boundary]}


@dataclass
class Singularity:
    id: int
    angle: float
    marked: bool
    corners: list

    @property
    def order(self) -> int:
        """Cone angle in units of pi, minus two."""
        return round(self.angle / math.pi) - 2


@dataclass
class _Tri:
    poly: int
    verts: tuple[int, int, int]  # polygon vertex indices
    pts: tuple  # chart coordinates
    glue: list = field(default_factory=lambda: [None, None, None])  # (t2, j2, sigma, c)
    point_ids: list = field(default_factory=lambda: [None, None, None])


class FlatSurface:
    """Validated flat surface.  Build with :func:`build_surface`."""

    _counter = 0

    def __init__(self, polygons, gluings, marked_points, tris, points, genus, area, translation, exact):
        self.polygons = polygons
        self.gluings = gluings
        self.marked_points = marked_points
        self.tris: list[_Tri] = tris
        self.singularities: list[Singularity] = points
        self.genus = genus
        self.area = area
        self.translation = translation
        self.exact = exact
        FlatSurface._counter += 1
        self.uid = FlatSurface._counter

    @property
    def cone_angles(self) -> dict[int, float]:
        return {s.id: s.angle for s in self.singularities}

    def to_dict(self) -> dict:
        enc = (lambda x: str(x) if isinstance(x, Fraction) else x)
        return {"polygons": [[[enc(x), enc(y)] for x, y in poly] for poly in self.polygons],
                "gluings": [[p, e, q, f, "translation" if k == "translation" else "semi"]
                            for p, e, q, f, k in self.gluings],
                "marked": [list(m) for m in self.marked_points]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def summary(self) -> dict:
        return {"genus": self.genus, "area": float(self.area), "translation": self.translation,
                "singularities": [{"id": s.id, "angle_over_pi": s.angle / math.pi, "marked": s.marked}
                                  for s in self.singularities]}


# ---------------------------------------------------------------------------
# construction


def _signed_area(pts):
    n = len(pts)
    return sum(_cross(pts[i], pts[(i + 1) % n]) for i in range(n)) / 2


def _in_triangle(p, a, b, c):
    """Inside or on the boundary of the ccw triangle abc."""
    return _cross(_sub(b, a), _sub(p, a)) >= 0 and _cross(_sub(c, b), _sub(p, b)) >= 0 \
        and _cross(_sub(a, c), _sub(p, c)) >= 0


def _ear_clip(pts):
    idx = list(range(len(pts)))
    tris = []
    while len(idx) > 3:
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = pts[i0], pts[i1], pts[i2]
            if _cross(_sub(b, a), _sub(c, b)) <= 0:
                continue
            if any(_in_triangle(pts[m], a, b, c) for m in idx
                   if m not in (i0, i1, i2) and pts[m] not in (a, b, c)):
                continue
            tris.append((i0, i1, i2))
            idx.pop(k)
            break
        else:
            raise ValueError("polygon is not simple")
    tris.append(tuple(idx))
    return tris


def _gluing_map(P0, P1, Q0, Q1, kind):
    """Chart map (sigma, c), z -> sigma z + c, carrying edge P0P1 onto Q1Q0."""
    if kind == "translation":
        return 1, _sub(Q1, P0)
    return -1, _add(Q1, P0)


def build_surface(polygons, gluings, marked_points=()) -> FlatSurface:
    polys = [[(_num(x), _num(y)) for x, y in poly] for poly in polygons]
    exact = all(_is_exact(c) for poly in polys for pt in poly for c in pt)
    if not exact:
        polys = [[(float(x), float(y)) for x, y in poly] for poly in polys]
    for poly in polys:
        if len(poly) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if not _signed_area(poly) > 0:
            raise ValueError("polygons must be counter-clockwise with positive area")
    glue = {}
    norm_gluings = []
    for g in gluings:
        p, e, q, f, kind = g
        kind = {"translation": "translation", "semi": "semi", "semi-translation": "semi"}.get(kind)
        if kind is None:
            raise ValueError(f"unknown gluing kind {g[4]!r}")
        for key in ((p, e), (q, f)):
            if not (0 <= key[0] < len(polys) and 0 <= key[1] < len(polys[key[0]])):
                raise ValueError(f"gluing refers to missing edge {key}")
        if (p, e) == (q, f):
            raise ValueError("gluing incomplete: an edge cannot be glued to itself")
        if (p, e) in glue or (q, f) in glue:
            raise ValueError("gluing incomplete: edge glued twice")
        glue[(p, e)] = (q, f, kind)
        glue[(q, f)] = (p, e, kind)
        norm_gluings.append((p, e, q, f, kind))
    for pi, poly in enumerate(polys):
        for e in range(len(poly)):
            if (pi, e) not in glue:
                raise ValueError("gluing incomplete: unglued edge")

    def edge(p, e):
        poly = polys[p]
        return poly[e], poly[(e + 1) % len(poly)]

    for p, e, q, f, kind in norm_gluings:
        P0, P1 = edge(p, e)
        Q0, Q1 = edge(q, f)
        vp, vq = _sub(P1, P0), _sub(Q1, Q0)
        if not _zero(_norm2(vp) - _norm2(vq), exact):
            raise ValueError("edge length mismatch")
        w = _add(vp, vq) if kind == "translation" else _sub(vp, vq)
        if not (_zero(w[0], exact) and _zero(w[1], exact)):
            raise ValueError("direction mismatch")

    # triangulate; polygon edge -> (triangle, local edge)
    tris: list[_Tri] = []
    poly_edge = {}
    for pi, poly in enumerate(polys):
        n = len(poly)
        diag = {}
        for tv in _ear_clip(poly):
            t = len(tris)
            tris.append(_Tri(pi, tv, tuple(poly[i] for i in tv)))
            for j in range(3):
                a, b = tv[j], tv[(j + 1) % 3]
                if b == (a + 1) % n:
                    poly_edge[(pi, a)] = (t, j)
                else:
                    diag[(a, b)] = (t, j)
        for (a, b), (t, j) in diag.items():
            t2, j2 = diag[(b, a)]
            tris[t].glue[j] = (t2, j2, 1, (0 * poly[0][0], 0 * poly[0][0]))
    for p, e, q, f, kind in norm_gluings:
        P0, P1 = edge(p, e)
        Q0, Q1 = edge(q, f)
        t, j = poly_edge[(p, e)]
        t2, j2 = poly_edge[(q, f)]
        s1, c1 = _gluing_map(P0, P1, Q0, Q1, kind)
        s2, c2 = _gluing_map(Q0, Q1, P0, P1, kind)
        tris[t].glue[j] = (t2, j2, s1, c1)
        tris[t2].glue[j2] = (t, j, s2, c2)

    # corner cycles
    seen = set()
    points: list[Singularity] = []
    corner_point = {}
    for t in range(len(tris)):
        for j in range(3):
            if (t, j) in seen:
                continue
            cyc, angle = [], 0.0
            cur = (t, j)
            while cur not in seen:
                seen.add(cur)
                cyc.append(cur)
                tt, jj = cur
                P = tris[tt].pts
                a, b = _sub(P[(jj + 1) % 3], P[jj]), _sub(P[(jj + 2) % 3], P[jj])
                angle += math.atan2(float(_cross(a, b)), float(_dot(a, b)))
                t2, j2, _, _ = tris[tt].glue[jj]
                cur = (t2, (j2 + 1) % 3)
            pid = len(points)
            for c in cyc:
                corner_point[c] = pid
                tris[c[0]].point_ids[c[1]] = pid
            points.append(Singularity(pid, angle, False, cyc))
    marked = []
    for p, v in marked_points:
        hit = [c for c, pid in corner_point.items() if tris[c[0]].poly == p and tris[c[0]].verts[c[1]] == v]
        if not hit:
            raise ValueError(f"marked point ({p}, {v}) is not a polygon vertex")
        points[corner_point[hit[0]]].marked = True
        marked.append((p, v))
    total = 0
    for s in points:
        k = s.angle / math.pi
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ValueError("invalid cone angle")
        total += round(k) - 2
    if (total + 4) % 4:
        raise ValueError("Gauss-Bonnet violated")
    _check_connected(tris)
    genus = (total + 4) // 4
    area = sum(_signed_area(poly) for poly in polys)
    translation = all(k == "translation" for *_, k in norm_gluings)
    return FlatSurface(polys, norm_gluings, marked, tris, points, genus, area, translation, exact)


def _check_connected(tris):
    seen, stack = {0}, [0]
    while stack:
        t = stack.pop()
        for g in tris[t].glue:
            if g[0] not in seen:
                seen.add(g[0])
                stack.append(g[0])
    if len(seen) != len(tris):
        raise ValueError("surface is not connected")


def surface_from_dict(d: dict) -> FlatSurface:
    return build_surface(d["polygons"], [tuple(g) for g in d["gluings"]],
                         [tuple(m) for m in d.get("marked", [])])


def surface_from_json(text: str) -> FlatSurface:
    return surface_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# standard examples


def parallelogram_torus(v1=(1, 0), v2=(0, 1), marked=True) -> FlatSurface:
    """Torus glued from the parallelogram spanned by ``v1`` and ``v2``."""
    v1, v2 = tuple(map(_num, v1)), tuple(map(_num, v2))
    o = (0 * v1[0], 0 * v1[0])
    pts = [o, v1, _add(v1, v2), v2]
    return build_surface([pts], [(0, 0, 0, 2, "translation"), (0, 1, 0, 3, "translation")],
                         [(0, 0)] if marked else [])


def square_torus() -> FlatSurface:
    return parallelogram_torus((1, 0), (0, 1))


def golden_sheared_torus() -> FlatSurface:
    """Unit-area torus whose vertical flow induces the golden rotation."""
    g = (math.sqrt(5) - 1) / 2
    return parallelogram_torus((1.0, 0.0), (-g, 1.0))


def l_shaped_surface() -> FlatSurface:
    """Three unit squares in an L; genus two with a single 6 pi point."""
    pts = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2), (0, 1)]
    glue = [(0, 0, 0, 5, "translation"), (0, 1, 0, 3, "translation"),
            (0, 2, 0, 7, "translation"), (0, 4, 0, 6, "translation")]
    return build_surface([pts], glue, [])


def pillowcase() -> FlatSurface:
    """2 x 1 rectangle with the top and bottom edges folded at their
    midpoints: a sphere with four cone points of angle pi."""
    pts = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1)]
    glue = [(0, 0, 0, 1, "semi"), (0, 3, 0, 4, "semi"), (0, 2, 0, 5, "translation")]
    return build_surface([pts], glue, [])


def orientation_double_cover(surface: FlatSurface) -> FlatSurface:
    """Translation surface double covering a half-translation surface.

    Polygon ``p`` lifts to ``2p`` (same chart) and ``2p + 1`` (chart rotated
    by pi); translation gluings stay on a sheet, semi-translations swap sheets.
    """
    polys = []
    for poly in surface.polygons:
        polys.append(list(poly))
        polys.append([_neg(pt) for pt in poly])
    glue = []
    for p, e, q, f, kind in surface.gluings:
        for s in (0, 1):
            s2 = s if kind == "translation" else 1 - s
            glue.append((2 * p + s, e, 2 * q + s2, f, "translation"))
    marked = [(2 * p + s, v) for p, v in surface.marked_points for s in (0, 1)]
    return build_surface(polys, glue, marked)


# ---------------------------------------------------------------------------
# Teichmuller flow


def apply_flow(obj, t: float):
    """Diagonal flow: horizontal coordinates times e^t, vertical times e^-t."""
    if t == 0:
        return obj
    a, b = math.exp(t), math.exp(-t)
    if isinstance(obj, Holonomy):
        return Holonomy(float(obj.h) * a, float(obj.v) * b)
    if isinstance(obj, tuple) and len(obj) == 2:
        return (float(obj[0]) * a, float(obj[1]) * b)
    if isinstance(obj, Segment):
        sc = (lambda p: None if p is None else (float(p[0]) * a, float(p[1]) * b))
        return Segment(float(obj.h) * a, float(obj.v) * b, obj.tri, sc(obj.start), sc(obj.end))
    if isinstance(obj, FlatCurve):
        return FlatCurve([apply_flow(s, t) for s in obj.segments], obj.closed, None)
    if isinstance(obj, FlatSurface):
        polys = [[(float(x) * a, float(y) * b) for x, y in poly] for poly in obj.polygons]
        return build_surface(polys, obj.gluings, obj.marked_points)
    raise TypeError(f"cannot flow {type(obj).__name__}")


def unsigned_holonomy(curve: FlatCurve) -> tuple[float, float]:
    return (sum(abs(s.h) for s in curve.segments), sum(abs(s.v) for s in curve.segments))


# ---------------------------------------------------------------------------
# saddle connections by wedge unfolding


def _L2(surface, L):
    if not L > 0:
        raise ValueError("L must be positive")
    if surface.exact and _is_exact(L):
        return Fraction(L) ** 2
    return float(L) ** 2 * (1 + 1e-12)


def _seg_dist2(U, W):
    d = _sub(W, U)
    if _dot(U, d) >= 0:
        return _norm2(U)
    if _dot(W, d) <= 0:
        return _norm2(W)
    c = _cross(U, W)
    return c * c / _norm2(d)


def enumerate_saddle_connections(surface: FlatSurface, L) -> list[SaddleConnection]:
    """All oriented saddle connections of length <= L.

    From every triangle corner the visible sector is unfolded across
    triangle edges, keeping the wedge of directions that still passes
    through the chain; a developed vertex strictly inside the wedge is the
    far end of a saddle connection.  Each direction at a singular point is
    owned by exactly one corner (closed on the outgoing edge, open on the
    incoming one), so every saddle connection is reported once.
    """
    L2 = _L2(surface, L)
    out = []
    T = surface.tris
    for t0, tri in enumerate(T):
        for j in range(3):
            P = tri.pts
            origin = P[j]
            sigma, a = 1, _neg(origin)
            dev = lambda z, s=sigma, a=a: _add((s * z[0], s * z[1]), a)
            B, C = dev(P[(j + 1) % 3]), dev(P[(j + 2) % 3])
            start = tri.point_ids[j]
            if _norm2(B) <= L2:
                out.append(SaddleConnection(B[0], B[1], start, tri.point_ids[(j + 1) % 3]))
            stack = [(t0, (j + 1) % 3, sigma, a, B, C)]
            while stack:
                t, k, s, a, lo, hi = stack.pop()
                tr = T[t]
                U, W = _add((s * tr.pts[k][0], s * tr.pts[k][1]), a), \
                    _add((s * tr.pts[(k + 1) % 3][0], s * tr.pts[(k + 1) % 3][1]), a)
                if _seg_dist2(U, W) > L2:
                    continue
                t2, k2, sm, cm = tr.glue[k]
                # developing map of t2: w -> s*sm*w + (a - s*sm*cm)
                s2 = s * sm
                a2 = _sub(a, (s2 * cm[0], s2 * cm[1]))
                tr2 = T[t2]
                dv = [_add((s2 * p[0], s2 * p[1]), a2) for p in tr2.pts]
                vi = (k2 + 2) % 3
                V = dv[vi]
                if _cross(lo, V) > 0 and _cross(V, hi) > 0:
                    if _norm2(V) <= L2:
                        out.append(SaddleConnection(V[0], V[1], start, tr2.point_ids[vi]))
                    split = V
                else:
                    split = None
                for kk in ((k2 + 1) % 3, (k2 + 2) % 3):
                    E0, E1 = dv[kk], dv[(kk + 1) % 3]
                    if _cross(E0, E1) < 0:
                        E0, E1 = E1, E0
                    nlo = E0 if _cross(lo, E0) > 0 else lo
                    nhi = E1 if _cross(E1, hi) > 0 else hi
                    if split is not None:
                        # the vertex ray itself ends at V
                        if _cross(nlo, split) > 0 and _cross(split, nhi) > 0:
                            continue
                    if _cross(nlo, nhi) > 0:
                        stack.append((t2, kk, s2, a2, nlo, nhi))
    out.sort(key=lambda c: (float(_norm2((c.h, c.v))), float(math.atan2(c.v, c.h))))
    return out


def systole(surface: FlatSurface) -> float:
    """Length of the shortest saddle connection (closed geodesics are never
    shorter than the saddle connections bounding their cylinder)."""
    L = math.sqrt(float(surface.area))
    while True:
        sc = enumerate_saddle_connections(surface, L)
        if sc:
            return min(c.length for c in sc)
        L *= 2


# ---------------------------------------------------------------------------
# directional decomposition


@dataclass
class MinimalComponent:
    area: float
    section_edge: tuple[int, int]
    section: tuple[float, float]
    suspension: iet_mod.Suspension
    pieces: list = field(default_factory=list)

    def to_dict(self):
        return {"area": self.area, "section_edge": list(self.section_edge),
                "section": [float(x) for x in self.section],
                "iet": self.suspension.iet.to_dict(),
                "heights": [float(h) for h in self.suspension.heights]}


@dataclass
class Decomposition:
    direction: tuple
    cylinders: list[Cylinder]
    minimal_components: list[MinimalComponent]
    surface_area: float
    _locator: object = None

    @property
    def parts_area(self) -> float:
        return sum(c.area for c in self.cylinders) + sum(m.area for m in self.minimal_components)

    def locate(self, tri: int, point) -> tuple[str, int]:
        """Which part contains ``point`` of triangle ``tri``: ("cylinder", i)
        or ("minimal", i)."""
        return self._locator(tri, point)

    def to_dict(self):
        return {"direction": [float(x) for x in self.direction],
                "cylinders": [c.to_dict() for c in self.cylinders],
                "minimal_components": [m.to_dict() for m in self.minimal_components],
                "area": float(self.surface_area), "parts_area": self.parts_area}


class _DirectionalFlow:
    """Flow in direction ``d`` as a piecewise translation of triangle edges.

    Transverse coordinate ``x(P) = d_y P_x - d_x P_y`` and time coordinate
    ``y(P) = d . P``, both scaled by ``|d|``.  The transversal is the union
    of edges not parallel to ``d``; each is stored once, keyed by the
    triangle it enters, as the interval of x-values it spans.
    """

    def __init__(self, surface: FlatSurface, d):
        if not surface.translation:
            raise ValueError("directional flow needs a translation surface")
        self.S = surface
        self.exact = surface.exact and all(_is_exact(c) for c in d)
        if self.exact:
            d = (Fraction(d[0]), Fraction(d[1]))
        else:
            d = (float(d[0]), float(d[1]))
        self.d = d
        self.dn = math.hypot(float(d[0]), float(d[1]))
        self.entries = {}
        for t, tr in enumerate(surface.tris):
            for j in range(3):
                e = _sub(tr.pts[(j + 1) % 3], tr.pts[j])
                if self.X(e) > (0 if self.exact else TOL):
                    self.entries[(t, j)] = (self.X(tr.pts[j]), self.X(tr.pts[(j + 1) % 3]))

    def X(self, P):
        return self.d[1] * P[0] - self.d[0] * P[1]

    def Y(self, P):
        return self.d[0] * P[0] + self.d[1] * P[1]

    def _eq(self, a, b):
        return a == b if self.exact else abs(a - b) <= TOL

    def _lt(self, a, b):
        return a < b if self.exact else a < b - TOL

    def point_on_edge(self, t, j, x):
        P0, P1 = self.S.tris[t].pts[j], self.S.tris[t].pts[(j + 1) % 3]
        x0, x1 = self.X(P0), self.X(P1)
        s = (x - x0) / (x1 - x0)
        return (P0[0] + s * (P1[0] - P0[0]), P0[1] + s * (P1[1] - P0[1]))

    def breakpoints(self, key):
        """Interior x-values of an entry edge where the exit edge changes."""
        t, j = key
        lo, hi = self.entries[key]
        xv = self.X(self.S.tris[t].pts[(j + 2) % 3])
        return [xv] if self._lt(lo, xv) and self._lt(xv, hi) else []

    def exit_edge(self, t, x, left=False):
        """Exit edge of triangle t for the leaf at x (right-continuous, or
        left-continuous if ``left``)."""
        tr = self.S.tris[t]
        for k in range(3):
            e = _sub(tr.pts[(k + 1) % 3], tr.pts[k])
            if not self.X(e) < (0 if self.exact else -TOL):
                continue
            a, b = self.X(tr.pts[(k + 1) % 3]), self.X(tr.pts[k])
            inside = (self._lt(a, x) or self._eq(a, x)) and self._lt(x, b) if not left else \
                self._lt(a, x) and (self._lt(x, b) or self._eq(x, b))
            if inside:
                return k
        raise ValueError("leaf leaves the triangle through no edge")

    def step(self, key, x, left=False):
        """F: (entry edge, x) -> (next entry edge, x', flight time)."""
        t, j = key
        tr = self.S.tris[t]
        k = self.exit_edge(t, x, left)
        P_in = self.point_on_edge(t, j, x)
        # exit point on edge k: parametrise along k
        P0, P1 = tr.pts[k], tr.pts[(k + 1) % 3]
        x0, x1 = self.X(P0), self.X(P1)
        s = (x - x0) / (x1 - x0)
        P_out = (P0[0] + s * (P1[0] - P0[0]), P0[1] + s * (P1[1] - P0[1]))
        flight = self.Y(P_out) - self.Y(P_in)
        t2, k2, sm, cm = tr.glue[k]
        return (t2, k2), x + self.X(cm), flight

    def is_singular(self, key, x):
        lo, hi = self.entries[key]
        return self._eq(x, lo) or self._eq(x, hi) or any(self._eq(x, b) for b in self.breakpoints(key))


def direction_decomposition(surface: FlatSurface, direction=(0, 1), depth: int = 400) -> Decomposition:
    """Cylinders and minimal components of the straight flow in ``direction``.

    Half-translation surfaces are decomposed on their orientation double
    cover and projected back (parts are paired by the deck involution).
    """
    if not surface.translation:
        return _decompose_half_translation(surface, direction, depth)
    F = _DirectionalFlow(surface, direction)
    # refinement points: forward orbits of all breakpoints and edge ends
    cuts = defaultdict(list)
    for key, (lo, hi) in F.entries.items():
        cuts[key] += [lo, hi] + F.breakpoints(key)
    for key, (lo, hi) in list(F.entries.items()):
        for x0 in [lo] + F.breakpoints(key):
            cur, x, seen = key, x0, set()
            for _ in range(depth):
                cur, x, _ = F.step(cur, x)
                if F.is_singular(cur, x):
                    break
                tag = (cur, x if F.exact else round(float(x), 9))
                if tag in seen:
                    break
                seen.add(tag)
                cuts[cur].append(x)
    pieces = []  # (key, lo, hi)
    for key, xs in cuts.items():
        xs = sorted(xs)
        uniq = [xs[0]]
        for x in xs[1:]:
            if not F._eq(x, uniq[-1]):
                uniq.append(x)
        pieces += [(key, uniq[i], uniq[i + 1]) for i in range(len(uniq) - 1)]
    index = {}
    by_key = defaultdict(list)
    for i, (key, lo, hi) in enumerate(pieces):
        by_key[key].append(i)

    def find(key, x):
        for i in by_key[key]:
            _, lo, hi = pieces[i]
            if (F._lt(lo, x) or F._eq(lo, x)) and F._lt(x, hi):
                return i
        return None

    nxt, flight = {}, {}
    for i, (key, lo, hi) in enumerate(pieces):
        mid = (lo + hi) / 2
        k2, xm, fl = F.step(key, mid)
        flight[i] = fl
        k2b, xlo, _ = F.step(key, lo)
        j = find(k2b, xlo)
        if j is not None and k2b == k2 and F._eq(pieces[j][1], xlo) and F._eq(pieces[j][2] - pieces[j][1], hi - lo):
            nxt[i] = j
        else:
            nxt[i] = None
    # cylinders: cycles of the exact piece map
    in_cyl = {}
    cylinders = []
    for i in range(len(pieces)):
        if i in in_cyl:
            continue
        path, cur = [], i
        while cur is not None and cur not in path and cur not in in_cyl and len(path) <= len(pieces):
            path.append(cur)
            cur = nxt[cur]
        if cur is not None and cur in path:
            cyc = path[path.index(cur):]
            cid = len(cylinders)
            for c in cyc:
                in_cyl[c] = cid
            cylinders.append(_make_cylinder(F, [pieces[c] for c in cyc], [flight[c] for c in cyc]))
    # the rest: minimal components, grouped by overlap of images
    rest = [i for i in range(len(pieces)) if i not in in_cyl]
    parent = {i: i for i in rest}

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in rest:
        key, lo, hi = pieces[i]
        k2, x2, _ = F.step(key, lo)
        span = hi - lo
        for j in by_key[k2]:
            if j in parent:
                _, a, b = pieces[j]
                if F._lt(a, x2 + span) and F._lt(x2, b):
                    parent[root(j)] = root(i)
    groups = defaultdict(list)
    for i in rest:
        groups[root(i)].append(i)
    comp_of = {}
    minimal = []
    for g in groups.values():
        cid = len(minimal)
        for i in g:
            comp_of[i] = cid
        minimal.append(_make_minimal(F, [pieces[i] for i in g]))

    def locator(tri, P):
        # flow backwards to the entry edge of ``tri``
        x = F.X(P)
        for (t, j), (lo, hi) in F.entries.items():
            if t == tri and (F._lt(lo, x) or F._eq(lo, x)) and F._lt(x, hi):
                i = find((t, j), x)
                if i in in_cyl:
                    return ("cylinder", in_cyl[i])
                return ("minimal", comp_of[i])
        raise ValueError("point not located")

    return Decomposition(F.d, cylinders, minimal, float(surface.area), locator)


def _make_cylinder(F: _DirectionalFlow, pieces, flights) -> Cylinder:
    width = float(pieces[0][2] - pieces[0][1]) / F.dn
    circ = sum(float(f) for f in flights) / F.dn
    hol = Holonomy(float(F.d[0]) * circ / F.dn, float(F.d[1]) * circ / F.dn)
    sides = []
    for side in ("lo", "hi"):
        left = side == "hi"
        key, x = pieces[0][0], pieces[0][1] if side == "lo" else pieces[0][2]
        hits, acc = [], 0.0
        for _ in pieces:
            t, j = key
            tr = F.S.tris[t]
            P_in = F.point_on_edge(t, j, x)
            for v in range(3):
                if F._eq(F.X(tr.pts[v]), x):
                    hits.append((acc + float(F.Y(tr.pts[v]) - F.Y(P_in)) / F.dn, tr.point_ids[v]))
            key, x, fl = F.step(key, x, left=left)
            acc += float(fl) / F.dn
        uniq = []
        for y, p in sorted((y % circ, p) for y, p in hits):
            if not uniq or y - uniq[-1][0] > 1e-9:
                uniq.append((y, p))
        if len(uniq) > 1 and uniq[0][0] + circ - uniq[-1][0] <= 1e-9:
            uniq.pop()
        conns = []
        for n, (y, p) in enumerate(uniq):
            y2, p2 = uniq[(n + 1) % len(uniq)]
            gap = (y2 - y) % circ if len(uniq) > 1 else circ
            conns.append(SaddleConnection(float(F.d[0]) * gap / F.dn, float(F.d[1]) * gap / F.dn, p, p2))
        sides.append(conns)
    return Cylinder(_canonical(hol), width, (sides[0], sides[1]))


def _canonical(h: Holonomy) -> Holonomy:
    if h.h < -TOL or (abs(h.h) <= TOL and h.v < 0):
        return Holonomy(-h.h, -h.v)
    return h


def _first_return_to(F: _DirectionalFlow, key, a, b):
    """First return of the directional flow to the interval [a, b) of the
    entry edge ``key``: list of (left, width, height, landing) with the
    height in units of |d|."""
    done, active = [], [(a, b - a, key, a)]
    guard = 0
    while active:
        guard += 1
        if guard > 10**6:
            raise ValueError("first return did not terminate")
        o, w, k, c = active.pop()
        cut = None
        for bp in F.breakpoints(k):
            if F._lt(c, bp) and F._lt(bp, c + w):
                cut = bp
                break
        if cut is not None:
            active.append((o + (cut - c), w - (cut - c), k, cut))
            w = cut - c
        k2, c2, _ = F.step(k, c)
        if k2 == key and F._lt(c2, b) and F._lt(a, c2 + w):
            lo_in = c2 if F._lt(a, c2) or F._eq(a, c2) else a
            hi_in = c2 + w if F._lt(c2 + w, b) or F._eq(c2 + w, b) else b
            if F._lt(c2, lo_in):
                active.append((o, lo_in - c2, k2, c2))
            done.append((o + (lo_in - c2), hi_in - lo_in, lo_in))
            if F._lt(hi_in, c2 + w):
                active.append((o + (hi_in - c2), c2 + w - hi_in, k2, hi_in))
        else:
            active.append((o, w, k2, c2))
    out = []
    for o, w, land in sorted(done, key=lambda r: r[0]):
        # the return time is constant on each piece; measure it at the middle
        k, x, h = key, o + w / 2, 0
        while True:
            k, x, fl = F.step(k, x)
            h += fl
            if k == key and (F._lt(a, x) or F._eq(a, x)) and F._lt(x, b):
                break
        out.append((o, w, h, land))
    return out


def _suspension_from(F, key, a, b):
    done = _first_return_to(F, key, a, b)
    widths = [r[1] for r in done]
    heights = [float(r[2]) / F.dn for r in done]
    order = sorted(range(len(done)), key=lambda i: done[i][3])
    perm = [0] * len(done)
    for pos, i in enumerate(order):
        perm[i] = pos + 1
    T = iet_mod.build_iet(widths if F.exact else [float(w) for w in widths], perm)
    area = sum(float(w) / F.dn * h for w, h in zip(widths, heights))
    return iet_mod.Suspension(T, heights), area


def _make_minimal(F: _DirectionalFlow, pieces) -> MinimalComponent:
    # longest run of adjacent pieces on one edge
    runs = []
    for key, lo, hi in sorted(pieces, key=lambda p: (p[0], p[1])):
        if runs and runs[-1][0] == key and F._eq(runs[-1][2], lo):
            runs[-1][2] = hi
        else:
            runs.append([key, lo, hi])
    key, a, b = max(runs, key=lambda r: float(r[2] - r[1]))
    susp, area = _suspension_from(F, key, a, b)
    return MinimalComponent(area, key, (a, b), susp, pieces)


def polygon_edge_key(surface: FlatSurface, p: int, e: int) -> tuple[int, int]:
    """Triangle edge carrying edge ``e`` of polygon ``p``."""
    poly = surface.polygons[p]
    for t, tr in enumerate(surface.tris):
        if tr.poly != p:
            continue
        for j in range(3):
            if tr.verts[j] == e and tr.verts[(j + 1) % 3] == (e + 1) % len(poly):
                return (t, j)
    raise ValueError("no such edge")


def edge_suspension(surface: FlatSurface, direction=(0, 1), edge=None):
    """First return of the directional flow to a whole triangle edge.

    ``edge`` is a (triangle, local edge) pair crossed by the flow; by default
    the longest such edge.  Every leaf must meet it (true on tori); the
    result feeds :func:`thinframe.iet.first_return`.
    """
    F = _DirectionalFlow(surface, direction)
    if edge is None:
        edge = max(F.entries, key=lambda k: float(F.entries[k][1] - F.entries[k][0]))
    lo, hi = F.entries[edge]
    susp, area = _suspension_from(F, edge, lo, hi)
    if abs(area - float(surface.area)) > 1e-9 * max(1.0, float(surface.area)):
        raise ValueError("edge is not a global section")
    return susp


def _decompose_half_translation(surface, direction, depth):
    cover = orientation_double_cover(surface)
    dec = direction_decomposition(cover, direction, depth)
    # deck involution: triangle t of sheet-0 polygon 2p <-> same local triangle of 2p + 1
    twin = {}
    by_poly = defaultdict(list)
    for t, tr in enumerate(cover.tris):
        by_poly[tr.poly].append(t)
    for p in range(0, len(cover.polygons), 2):
        for a, b in zip(by_poly[p], by_poly[p + 1]):
            twin[a], twin[b] = b, a

    def sample(kind, i):
        if kind == "cylinder":
            return None
        return dec.minimal_components[i]

    # pair parts by locating the image of an interior point
    F = _DirectionalFlow(cover, direction)

    def part_point(kind, i):
        if kind == "cylinder":
            for (t, j) in F.entries:
                for x in _probe_xs(F, (t, j)):
                    P = F.point_on_edge(t, j, x)
                    c = _centroid_shift(cover, t, P)
                    if dec.locate(t, c) == (kind, i):
                        return t, c
        else:
            key = dec.minimal_components[i].section_edge
            lo, hi = dec.minimal_components[i].section
            x = (lo + hi) / 2
            return key[0], _centroid_shift(cover, key[0], F.point_on_edge(key[0], key[1], x))
        raise ValueError("part has no sample point")

    cyl, mins = [], []
    done = set()
    for kind, parts, out in (("cylinder", dec.cylinders, cyl), ("minimal", dec.minimal_components, mins)):
        for i, part in enumerate(parts):
            if (kind, i) in done:
                continue
            t, P = part_point(kind, i)
            img = dec.locate(twin[t], _neg(P))
            done.add((kind, i))
            done.add(img)
            if kind == "cylinder":
                if img == (kind, i):
                    c = part.circumference
                    out.append(Cylinder(Holonomy(c.h / 2, c.v / 2), part.height, part.boundary))
                else:
                    out.append(part)
            else:
                if img == (kind, i):
                    part = MinimalComponent(part.area / 2, part.section_edge, part.section,
                                            part.suspension, part.pieces)
                out.append(part)
    return Decomposition(dec.direction, cyl, mins, float(surface.area), None)


def _probe_xs(F, key):
    lo, hi = F.entries[key]
    return [lo + (hi - lo) * Fraction(n, 7) if F.exact else lo + (hi - lo) * n / 7 for n in (1, 3, 5)]


def _centroid_shift(surface, t, P):
    """Nudge an edge point towards the triangle centroid (stays on its leaf
    only approximately, but inside the same part for interior probes)."""
    pts = surface.tris[t].pts
    c = ((pts[0][0] + pts[1][0] + pts[2][0]) / 3, (pts[0][1] + pts[1][1] + pts[2][1]) / 3)
    eps = Fraction(1, 10**6) if surface.exact else 1e-6
    return (P[0] + eps * (c[0] - P[0]), P[1] + eps * (c[1] - P[1]))


def vertical_decomposition(surface: FlatSurface, depth: int = 400) -> Decomposition:
    return direction_decomposition(surface, (0, 1), depth)


def enumerate_cylinders(surface: FlatSurface, L) -> list[Cylinder]:
    """Maximal cylinders with circumference <= L.

    Every cylinder boundary contains a saddle connection parallel to the
    core and no longer than it, so only directions of saddle connections of
    length <= L need decomposing.
    """
    L2 = _L2(surface, L)
    dirs = {}
    for sc in enumerate_saddle_connections(surface, L):
        h, v = sc.h, sc.v
        if surface.exact:
            g = math.gcd(h.numerator * v.denominator, v.numerator * h.denominator) if h and v else 0
            key = _dir_key_exact(h, v)
        else:
            key = _dir_key_float(h, v)
        dirs.setdefault(key, (h, v))
    out = []
    for key, d in sorted(dirs.items(), key=lambda kv: (float(_norm2(kv[1])), str(kv[0]))):
        for c in direction_decomposition(surface, d).cylinders:
            if c.circumference.length ** 2 <= float(L2) * (1 + 1e-12):
                out.append(c)
    return out


def _dir_key_exact(h, v):
    h, v = Fraction(h), Fraction(v)
    if h < 0 or (h == 0 and v < 0):
        h, v = -h, -v
    return ("h", v / h) if h else ("v",)


def _dir_key_float(h, v):
    a = math.atan2(float(v), float(h)) % math.pi
    return round(a, 9) % round(math.pi, 9)


# ---------------------------------------------------------------------------
# curves and intersections


def _trace(surface: FlatSurface, tri: int, start, vec, max_steps=10**6) -> list[Segment]:
    """Straight segment from ``start`` (chart of ``tri``) with holonomy ``vec``."""
    segs = []
    t, P, V = tri, start, vec
    remaining = 1 if surface.exact else 1.0
    for _ in range(max_steps):
        tr = surface.tris[t]
        best, kbest = None, None
        for k in range(3):
            A, B = tr.pts[k], tr.pts[(k + 1) % 3]
            e = _sub(B, A)
            den = _cross(V, e)
            if den == 0:
                continue
            s = _cross(_sub(A, P), e) / den  # P + sV on line AB
            u = _cross(_sub(A, P), V) / den
            if s > (0 if surface.exact else 1e-14) and -1e-15 <= u <= 1 + 1e-15:
                if best is None or s < best:
                    best, kbest, ubest = s, k, u
        if best is None:
            raise ValueError("trace left the triangle")
        if best >= remaining:
            end = (P[0] + remaining * V[0], P[1] + remaining * V[1])
            segs.append(Segment(end[0] - P[0], end[1] - P[1], t, P, end))
            return segs
        if ubest == 0 or ubest == 1 or (not surface.exact and (ubest < 1e-12 or ubest > 1 - 1e-12)):
            raise ValueError("curve hits a singularity")
        Q = (P[0] + best * V[0], P[1] + best * V[1])
        segs.append(Segment(Q[0] - P[0], Q[1] - P[1], t, P, Q))
        remaining -= best
        V = (V[0] * 1, V[1] * 1)
        t2, k2, sm, cm = tr.glue[kbest]
        P = _add((sm * Q[0], sm * Q[1]), cm)
        V = (sm * V[0], sm * V[1])
        # remaining is measured in units of the original vector
        t = t2
    raise ValueError("trace did not finish")


def straight_curve(surface: FlatSurface, tri: int, start, vec) -> FlatCurve:
    segs = _trace(surface, tri, start, vec)
    return FlatCurve(segs, True, surface.uid)


def _torus_basis(surface):
    if len(surface.polygons) != 1 or len(surface.polygons[0]) != 4 or surface.genus != 1:
        raise ValueError("torus lines need a parallelogram torus")
    P = surface.polygons[0]
    return _sub(P[1], P[0]), _sub(P[3], P[0])


def torus_line(surface: FlatSurface, p: int, q: int, base=None) -> FlatCurve:
    """Closed geodesic of class (p, q) through ``base`` (a point of the
    parallelogram given by its coordinates in the basis of the two sides)."""
    if math.gcd(p, q) != 1:
        raise ValueError("(p, q) must be primitive")
    v1, v2 = _torus_basis(surface)
    if base is None:
        base = (Fraction(1, 2) + Fraction(1, 1009), Fraction(1, 2) + Fraction(1, 9973))
    base = tuple(Fraction(c) if surface.exact else float(c) for c in base)
    P0 = surface.polygons[0][0]
    pt = (P0[0] + base[0] * v1[0] + base[1] * v2[0], P0[1] + base[0] * v1[1] + base[1] * v2[1])
    vec = (p * v1[0] + q * v2[0], p * v1[1] + q * v2[1])
    for t, tr in enumerate(surface.tris):
        if _in_triangle(pt, *tr.pts):
            return straight_curve(surface, t, pt, vec)
    raise ValueError("base point outside the polygon")


def _crossings(alpha: FlatCurve, beta: FlatCurve):
    """List of (alpha segment index, beta segment index) transversal crossings."""
    by_tri = defaultdict(lambda: ([], []))
    for w, curve in enumerate((alpha, beta)):
        for i, s in enumerate(curve.segments):
            if s.tri is None:
                raise ValueError("curve segments carry no location")
            by_tri[s.tri][w].append(i)
    hits = []
    for t, (ia, ib) in by_tri.items():
        if not ia or not ib:
            continue
        A = np.array([[float(c) for c in (*alpha.segments[i].start, *alpha.segments[i].end)] for i in ia])
        B = np.array([[float(c) for c in (*beta.segments[i].start, *beta.segments[i].end)] for i in ib])
        a0, a1 = A[:, None, 0:2], A[:, None, 2:4]
        b0, b1 = B[None, :, 0:2], B[None, :, 2:4]

        def orient(p, q, r):
            return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

        o1, o2 = orient(a0, a1, b0), orient(a0, a1, b1)
        o3, o4 = orient(b0, b1, a0), orient(b0, b1, a1)
        near = (np.abs(o1) < 1e-9) | (np.abs(o2) < 1e-9) | (np.abs(o3) < 1e-9) | (np.abs(o4) < 1e-9)
        cross = (o1 * o2 < 0) & (o3 * o4 < 0) & ~near
        for r, c in zip(*np.nonzero(cross)):
            hits.append((ia[r], ib[c]))
        for r, c in zip(*np.nonzero(near)):
            sa, sb = alpha.segments[ia[r]], beta.segments[ib[c]]
            e = [_cross(_sub(sa.end, sa.start), _sub(pt, sa.start)) for pt in (sb.start, sb.end)] + \
                [_cross(_sub(sb.end, sb.start), _sub(pt, sb.start)) for pt in (sa.start, sa.end)]
            if any(v == 0 for v in e):
                if (e[0] == 0 and e[1] == 0):
                    continue  # collinear pieces never cross transversally
                raise ValueError("curves not in general position")
            if e[0] * e[1] < 0 and e[2] * e[3] < 0:
                hits.append((ia[r], ib[c]))
    return hits


def intersection_number(alpha: FlatCurve, beta: FlatCurve) -> int:
    """Transversal crossings of two closed straight-segment curves."""
    if alpha.surface_id is not None and beta.surface_id is not None and alpha.surface_id != beta.surface_id:
        raise ValueError("curves lie on different surfaces")
    return len(_crossings(alpha, beta))


@dataclass
class BoundReport:
    i: int
    bound: float
    passed: bool
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {"i": self.i, "bound": self.bound, "pass": self.passed, **self.extras}


def check_thick_intersection_bound(surface, epsilon, alpha: FlatCurve, beta: FlatCurve,
                                   surface_systole=None) -> BoundReport:
    """Check i <= (4 / eps^2) l(alpha) l(beta) on a surface of systole >= eps."""
    sys_ = systole(surface) if surface_systole is None else surface_systole
    if sys_ < epsilon - 1e-12:
        raise ValueError("not in thick part")
    i = intersection_number(alpha, beta)
    bound = 4 / epsilon ** 2 * alpha.length * beta.length
    return BoundReport(i, bound, i <= bound, {"systole": sys_, "epsilon": epsilon})


def k9(epsilon: float) -> float:
    return 2 / epsilon + 9 + 4 / epsilon ** 2


def slope_intersection_bound(surface: FlatSurface, alpha: FlatCurve, beta: FlatCurve, H: float,
                             M: float | None = None, epsilon: float = 1.0,
                             decomposition: Decomposition | None = None) -> BoundReport:
    """Crossings of two high-slope curves split over the vertical decomposition.

    ``w0`` is the smallest cylinder width or tall-section rectangle width,
    ``M1 = H / w0`` and the slope threshold must satisfy ``M >= H (M1 + 1)``
    (``M`` defaults to that value).  Crossings are attributed to the
    cylinder or minimal component containing them; crossings on segments of
    slope below ``M`` form the low-slope contribution.
    """
    if not H > 0:
        raise ValueError("H must be positive")
    dec = decomposition or vertical_decomposition(surface)
    widths = [c.height for c in dec.cylinders]
    tall = []
    for comp in dec.minimal_components:
        cert = iet_mod.tall_section(comp.suspension, H, samples=100)
        sec_len = float(comp.section[1] - comp.section[0])
        zr = iet_mod.first_return(comp.suspension, cert.l2)
        widths += [float(w) * sec_len for w in zr.widths]
        tall.append(cert.to_dict())
    w0 = min(widths)
    M1 = H / w0
    Mmin = H * (M1 + 1)
    if M is None:
        M = Mmin
    elif M < Mmin * (1 - 1e-12):
        raise ValueError("M below H (M1 + 1)")
    slopes = []
    for c in (alpha, beta):
        h, v = unsigned_holonomy(c)
        slopes.append(math.inf if h == 0 else float(v) / float(h))
    if min(slopes) < M * (1 - 1e-12):
        raise ValueError("slope below M")
    hits = _crossings(alpha, beta)
    iC = iZ = low = 0
    for ia, ib in hits:
        sa, sb = alpha.segments[ia], beta.segments[ib]
        if min(_seg_slope(sa), _seg_slope(sb)) < M:
            low += 1
            continue
        P = _intersection_point(sa, sb)
        kind, _ = dec.locate(sa.tri, P) if dec._locator else ("cylinder", 0)
        if kind == "cylinder":
            iC += 1
        else:
            iZ += 1
    i = len(hits)
    kk = k9(epsilon)
    bound = kk * alpha.length * beta.length / H
    extras = {"i_C": iC, "i_Z": iZ, "low_slope": low, "k9": kk, "H": H, "M": M, "M1": M1,
              "w0": w0, "slopes": slopes, "lengths": [alpha.length, beta.length],
              "sojourns": [_sojourns(dec, c) for c in (alpha, beta)], "tall_sections": tall}
    return BoundReport(i, bound, i <= bound, extras)


def _seg_slope(s: Segment):
    if s.h == 0:
        return math.inf
    if _is_exact(s.h) and _is_exact(s.v):
        return abs(Fraction(s.v) / Fraction(s.h))
    return abs(float(s.v)) / abs(float(s.h))


def _intersection_point(sa: Segment, sb: Segment):
    P, r = sa.start, _sub(sa.end, sa.start)
    Q, s = sb.start, _sub(sb.end, sb.start)
    u = _cross(_sub(Q, P), s) / _cross(r, s)
    return (P[0] + u * r[0], P[1] + u * r[1])


def _sojourns(dec: Decomposition, curve: FlatCurve) -> list[dict]:
    """Maximal runs of consecutive segments inside the same part."""
    runs = []
    for s in curve.segments:
        mid = ((s.start[0] + s.end[0]) / 2, (s.start[1] + s.end[1]) / 2)
        part = dec.locate(s.tri, mid) if dec._locator else ("cylinder", 0)
        if runs and runs[-1]["part"] == list(part):
            runs[-1]["segments"] += 1
            runs[-1]["length"] += s.length
        else:
            runs.append({"part": list(part), "segments": 1, "length": s.length})
    return runs
