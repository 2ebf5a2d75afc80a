"""Teichmuller space of the once-marked torus as the upper half-plane.

A point ``tau`` is the marked flat torus ``C / (Z + tau Z)`` rescaled to unit
area.  The curve class ``(p, q)`` is the closed geodesic with holonomy
``p + q * tau``; its extremal length is ``|p + q tau|^2 / Im tau``.  All
public distances are Teichmuller distances, i.e. half the curvature -1
distance of the half-plane.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
import warnings
from dataclasses import dataclass, field
from math import gcd

import mpmath
import numpy as np

from .metric_core import HyperbolicPlane, TriangleFrame, frame_triangle

INF = math.inf

# Teichmuller metric on the genus-one Teichmuller space
TEICH = HyperbolicPlane(scale=0.5, dps=30, tag="teichmuller_torus")


@dataclass(frozen=True)
class CurveClass:
    p: int
    q: int

    def __post_init__(self):
        if self.p == 0 and self.q == 0:
            raise ValueError("(0, 0) is not a curve")
        if gcd(self.p, self.q) != 1:
            raise ValueError(f"({self.p}, {self.q}) is not primitive")

    @classmethod
    def canonical(cls, p: int, q: int) -> "CurveClass":
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return cls(p, q)


@dataclass(frozen=True)
class MappingClass:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("mapping class must have determinant 1")

    def __matmul__(self, other: "MappingClass") -> "MappingClass":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return MappingClass(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "MappingClass":
        return MappingClass(self.d, -self.b, -self.c, self.a)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d


S = MappingClass(0, -1, 1, 0)
T = MappingClass(1, 1, 0, 1)
T_INV = T.inverse()


def _check(tau):
    if not mpmath.im(tau) > 0:
        raise ValueError("not in upper half-plane")
    return tau


def ext_length(tau, curve) -> float:
    p, q = (curve.p, curve.q) if isinstance(curve, CurveClass) else curve
    tau = complex(_check(tau))
    return abs(p + q * tau) ** 2 / tau.imag


def flat_vector(tau, curve) -> complex:
    """Holonomy of ``curve`` on the unit-area flat torus at ``tau``."""
    p, q = (curve.p, curve.q) if isinstance(curve, CurveClass) else curve
    tau = complex(tau)
    return (p + q * tau) / math.sqrt(tau.imag)


def teich_distance(tau1, tau2) -> float:
    _check(tau1), _check(tau2)
    return TEICH.distance(tau1, tau2)


def primitive_vectors(bound: int) -> np.ndarray:
    """Primitive ``(p, q)`` with ``|p|, |q| <= bound``, one of each +/- pair."""
    p, q = np.meshgrid(np.arange(-bound, bound + 1), np.arange(0, bound + 1))
    p, q = p.ravel(), q.ravel()
    keep = (np.gcd(p, q) == 1) & ((q > 0) | (p > 0))
    return np.stack([p[keep], q[keep]], axis=1)


_PRIM_CACHE: dict[int, np.ndarray] = {}


def _prims(bound):
    if bound not in _PRIM_CACHE:
        _PRIM_CACHE[bound] = primitive_vectors(bound)
    return _PRIM_CACHE[bound]


@dataclass
class KerckhoffResult:
    tau1: complex
    tau2: complex
    bound: int
    distance: float
    argmax_pq: tuple[int, int]

    def to_dict(self):
        return {"tau1": [self.tau1.real, self.tau1.imag], "tau2": [self.tau2.real, self.tau2.imag],
                "bound": self.bound, "distance": self.distance, "argmax_pq": list(self.argmax_pq)}


def kerckhoff_scan(tau1, tau2, bound: int = 50) -> KerckhoffResult:
    """Half the log of the largest ratio ``ext_tau2 / ext_tau1`` over the
    primitive curves in the box ``|p|, |q| <= bound``."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    t1, t2 = complex(_check(tau1)), complex(_check(tau2))
    pq = _prims(bound)
    z1 = pq[:, 0] + pq[:, 1] * t1
    z2 = pq[:, 0] + pq[:, 1] * t2
    ratio = (np.abs(z2) ** 2 / t2.imag) / (np.abs(z1) ** 2 / t1.imag)
    k = int(np.argmax(ratio))
    p, q = int(pq[k, 0]), int(pq[k, 1])
    if max(abs(p), abs(q)) > bound / 2:
        warnings.warn(f"Kerckhoff sup attained near the scan boundary at ({p}, {q})")
    return KerckhoffResult(t1, t2, bound, 0.5 * math.log(max(float(ratio[k]), 1.0)), (p, q))


def kerckhoff_distance(tau1, tau2, bound: int = 50) -> float:
    return kerckhoff_scan(tau1, tau2, bound).distance


def reduce_point(tau):
    """Move ``tau`` into the standard fundamental domain of SL(2, Z).

    Works for floats and for mpmath numbers at the ambient precision.
    """
    tau = _check(tau)
    for _ in range(100000):
        tau = tau - mpmath.nint(mpmath.re(tau)) if isinstance(tau, mpmath.mpc) else tau - round(tau.real)
        if abs(tau) < 1 - 1e-15:
            tau = -1 / tau
        else:
            return tau
    raise RuntimeError("reduction did not terminate")


def systole(tau) -> float:
    """Length of the shortest closed geodesic on the unit-area torus."""
    r = reduce_point(tau if isinstance(tau, mpmath.mpc) else complex(tau))
    return float(1 / mpmath.sqrt(mpmath.im(r)))


def in_thick(tau, epsilon: float) -> bool:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return systole(tau) >= epsilon


def _continued_fraction(p: int, q: int) -> list[int]:
    out = []
    while q:
        a, r = divmod(p, q)
        out.append(a)
        p, q = q, r
    return out


def _ray_candidates(p: int, q: int, run_cap: int):
    """Vertices of the Farey triangles crossed by the ray from ``i`` to ``p/q`` (``p >= 0``).

    These are ``1/0``, ``0/1`` and the convergents and intermediate fractions
    of ``p/q``.  Inside a long run of intermediate fractions only the first
    and last ``run_cap`` are produced; the middle ones sit deep inside the
    cusp excursion of the run's convergent and cannot be reached.
    """
    yield 1, 0
    yield 0, 1
    h2, k2, h1, k1 = 0, 1, 1, 0
    for an in _continued_fraction(p, q):
        if an > 2 * run_cap:
            js = list(range(1, run_cap + 1)) + list(range(an - run_cap, an + 1))
        else:
            js = range(1, an + 1)
        for j in js:
            yield h2 + j * h1, k2 + j * k1
        h2, k2, h1, k1 = h1, k1, h2 + an * h1, k2 + an * k1


def thin_times(xi, epsilon: float, t_max: float = INF, run_cap: int = 40) -> list[tuple[float, float]]:
    """Times ``t`` at which the unit-speed ray from ``i`` toward the rational
    (or infinite) boundary point ``xi`` has systole below ``epsilon``.

    Returns sorted disjoint intervals.  The ray only meets the horoball of a
    cusp ``a/c`` when ``a/c`` is a vertex of a Farey triangle it crosses, and
    the crossing times have a closed form in the integers ``aq - cp`` and
    ``ap + cq``, so no high-precision points are ever formed.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    lnY = -2 * math.log(epsilon)
    if xi == INF:
        return [(max(0.0, lnY / 2), INF)]
    xi = Fraction(xi)
    p, q = abs(xi.numerator), xi.denominator
    ln_r2 = math.log(p * p + q * q)
    out = []
    for a, c in _ray_candidates(p, q, run_cap):
        d1 = a * q - c * p
        d0 = a * p + c * q
        if d0 == 0:
            continue
        if d1 == 0:
            lo = 0.5 * (lnY + math.log(a * a + c * c))
            out.append((max(0.0, lo), INF))
            break
        ln0, ln1 = math.log(abs(d0)), math.log(abs(d1))
        s_b = ln1 - ln0
        if -s_b / 2 > t_max + 10:
            break
        lnR = ln_r2 - math.log(2.0) - ln0 - ln1
        if lnR <= lnY:
            continue
        if lnR < 300:
            R, Y = math.exp(lnR), math.exp(lnY)
            small = 2 * R * Y * Y / (R + math.sqrt((R - Y) * (R + Y)))
            sigma = 0.5 * math.log((4 * R * R - small) / small)
        else:
            sigma = lnR + math.log(2.0) - lnY
        lo, hi = (-sigma - s_b) / 2, (sigma - s_b) / 2
        if hi > 0:
            out.append((max(0.0, lo), hi))
    out.sort()
    merged = []
    for lo, hi in out:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def apply_mapping_class(m: MappingClass, tau):
    tau = _check(tau)
    return (m.a * tau + m.b) / (m.c * tau + m.d)


# ---------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class TeichGeodesic:
    """Unit-speed Teichmuller ray from ``basepoint``.

    ``direction`` is either a boundary point (a real number or ``inf``) or a
    target point in the upper half-plane.
    """

    basepoint: complex
    direction: object

    def boundary_point(self):
        d = resolve_direction(self.basepoint, self.direction)
        if isinstance(d, (complex, mpmath.mpc)) and mpmath.im(d) > 0:
            return boundary_through(self.basepoint, d)
        return d

    def unit(self):
        """Direction at the basepoint as a unit complex number in the disk model."""
        p = mpmath.mpc(self.basepoint)
        d = resolve_direction(self.basepoint, self.direction)
        if isinstance(d, (complex, mpmath.mpc)) and mpmath.im(d) > 0:
            u = (mpmath.mpc(d) - p) / (mpmath.mpc(d) - mpmath.conj(p))
        elif d == INF:
            return mpmath.mpc(1)
        else:
            x = mpmath.mpf(d.numerator) / d.denominator if isinstance(d, Fraction) else mpmath.mpf(d)
            u = (x - p) / (x - mpmath.conj(p))
        return u / abs(u)


def resolve_direction(tau, direction):
    """Named directions: ``"horizontal"`` is the flow stretching the lattice
    direction of ``1`` (ideal endpoint ``Re tau``), ``"vertical"`` the one
    stretching ``tau`` (endpoint ``inf``).  Anything else passes through."""
    if isinstance(direction, str):
        if direction == "horizontal":
            return float(complex(tau).real)
        if direction in ("vertical", "inf"):
            return INF
        raise ValueError(f"unknown direction {direction!r}")
    return direction


def boundary_through(tau0, tau1):
    """Ideal endpoint of the ray from ``tau0`` through ``tau1``."""
    p = mpmath.mpc(tau0)
    u = (mpmath.mpc(tau1) - p) / (mpmath.mpc(tau1) - mpmath.conj(p))
    u = u / abs(u)
    if abs(1 - u) < mpmath.mpf(10) ** (-mpmath.mp.dps + 3):
        return INF
    return float(mpmath.re((p - mpmath.conj(p) * u) / (1 - u)))


def geodesic_point_mp(geodesic: TeichGeodesic, t) -> mpmath.mpc:
    if t < 0:
        raise ValueError("t must be non-negative")
    p = mpmath.mpc(geodesic.basepoint)
    zeta = mpmath.tanh(mpmath.mpf(t)) * geodesic.unit()
    return (p - mpmath.conj(p) * zeta) / (1 - zeta)


def geodesic_point(geodesic: TeichGeodesic, t: float) -> complex:
    return complex(geodesic_point_mp(geodesic, t))


# ---------------------------------------------------------------------------
# flat structures along a direction and the curve families


def holonomy_in_direction(tau, direction, curve) -> tuple[float, float]:
    """Signed (h, v) of ``curve`` in the flat structure at ``tau`` whose
    vertical foliation is the one contracted along the ray towards ``direction``.

    The contracted curve is the one that becomes short at the ideal endpoint,
    so the vertical direction is that of ``tau - xi`` (of ``1`` when xi = inf).
    """
    xi = TeichGeodesic(tau, direction).boundary_point()
    p, q = (curve.p, curve.q) if isinstance(curve, CurveClass) else curve
    with mpmath.workdps(30):
        tau = mpmath.mpc(tau)
        u = mpmath.mpc(1) if xi == INF else (tau - xi) / abs(tau - xi)
        z = (p + q * tau) / mpmath.sqrt(tau.imag) * (1j / u)  # rotate u onto +i
        return float(z.real), float(z.imag)


def flowed_point(tau, direction, t) -> mpmath.mpc:
    with mpmath.workdps(30):
        return geodesic_point_mp(TeichGeodesic(complex(tau), direction), t)


@dataclass
class CurveFamilyReport:
    R: float
    C1: list[dict]
    C2: list[dict]
    ratio_table: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {"R": self.R, "C1": self.C1, "C2": self.C2,
                "ratio_table": self.ratio_table, **self.extras}


def _family(tau, direction, R, want):
    """Primitive classes of flat length < R with the requested slope ratio < R."""
    t = complex(tau)
    qmax = int(R / math.sqrt(t.imag)) + 1
    pmax = int(R * math.sqrt(t.imag) + qmax * abs(t.real)) + 1
    p, q = np.meshgrid(np.arange(-pmax, pmax + 1), np.arange(0, qmax + 1))
    p, q = p.ravel(), q.ravel()
    keep = (np.gcd(p, q) == 1) & ((q > 0) | (p > 0))
    keep &= np.abs(p + q * t) / math.sqrt(t.imag) < R * (1 + 1e-9)
    out = []
    for pi, qi in zip(p[keep].tolist(), q[keep].tolist()):
        h, v = holonomy_in_direction(tau, direction, (pi, qi))
        h, v = abs(h), abs(v)
        length = math.hypot(h, v)
        if length >= R:
            continue
        ratio = (v / h if h > 0 else INF) if want == "v/h" else (h / v if v > 0 else INF)
        if ratio < R:
            out.append({"p": pi, "q": qi, "h": h, "v": v, "length": length, "slope_ratio": ratio})
    out.sort(key=lambda r: (r["length"], r["p"], r["q"]))
    return out


def curve_families(tau, direction, R: float, c: float | None = None) -> CurveFamilyReport:
    """C1 at ``(tau, phi)`` and C2 at ``(g_c tau, g_c phi)`` along the ray.

    ``direction`` is a boundary point or a target; for a target the default
    ``c`` is the distance to it.  With ``c = 0`` both families live at ``tau``.
    """
    geo = TeichGeodesic(complex(tau), direction)
    if c is None:
        d = direction
        c = teich_distance(tau, d) if isinstance(d, complex) and d.imag > 0 else 0.0
    xi = geo.boundary_point()
    C1 = _family(tau, xi, R, "v/h")
    z = flowed_point(tau, xi, c)
    C2 = _family(z, xi, R, "h/v")
    z = complex(z)
    if not C1 or not C2:
        raise ValueError("empty family")
    return CurveFamilyReport(R, C1, C2, extras={"c": c, "xi": xi if xi != INF else "inf",
                                                "z": [z.real, z.imag]})


def unsigned_holonomy_along(tau, direction, curve, t) -> tuple[float, float]:
    """|hol| of ``curve`` after flowing time ``t`` towards ``direction``."""
    z = flowed_point(tau, direction, t)
    xi = TeichGeodesic(complex(tau), direction).boundary_point()
    h, v = holonomy_in_direction(z, xi, curve)
    return abs(h), abs(v)


def curve_family_replay(x, y, z, R: float, epsilon: float, M: float = 0.0) -> dict:
    """Extremal-length distortion between ``w`` and ``x`` for the curve families.

    The triangle is framed with the Teichmuller metric; C1 lives at ``y``
    with the direction towards ``z``, C2 at ``z`` with the flowed structure.
    Reports the smallest constant ``k5`` placing every ratio
    ``ext_w / ext_x`` in ``(e^{-a rho}/k5, k5 e^{a rho})`` and the slope
    diagnostic at ``w`` in both conventions.
    """
    fr = frame_triangle(x, y, z, TEICH)
    xx, yy, zz, w = (complex(p) for p in fr.points)
    for name, pt in (("x", xx), ("y", yy), ("z", zz), ("w", w)):
        if not in_thick(pt, epsilon):
            raise ValueError(f"thick-part violation at {name}")
    if min(fr.a, fr.b, fr.c) < M:
        raise ValueError(f"side length below M={M}")
    fam = curve_families(yy, zz, R, c=fr.c)
    arho = fr.a * float(fr.rho)
    rows, k5 = [], 1.0
    for label, members in (("C1", fam.C1), ("C2", fam.C2)):
        for m in members:
            cv = (m["p"], m["q"])
            r = ext_length(w, cv) / ext_length(xx, cv)
            k5 = max(k5, r * math.exp(-arho), math.exp(-arho) / r)
            row = {"family": label, "p": m["p"], "q": m["q"], "ext_ratio": r}
            if fr.d > 1e-12:
                h, v = holonomy_in_direction(w, xx, cv)
                h, v = abs(h), abs(v)
                row["v_over_h"] = v / h if h > 0 else INF
                row["h_over_v"] = h / v if v > 0 else INF
            rows.append(row)
    fam.ratio_table = rows
    return {
        "frame": fr.to_dict(),
        "a_rho": arho,
        "k5_empirical": k5,
        "window_ok": all(math.exp(-arho) / k5 <= r["ext_ratio"] <= k5 * math.exp(arho) for r in rows),
        "e_d": math.exp(fr.d),
        "families": fam.to_dict(),
    }


def to_json(obj) -> str:
    return json.dumps(obj.to_dict() if hasattr(obj, "to_dict") else obj)
