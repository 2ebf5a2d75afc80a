"""Interval exchanges, first returns of vertical flows and tall sections.

Arithmetic is exact (``Fraction``) when every input is rational and uses
30-digit mpmath floats otherwise; discontinuity hits are then detected with
tolerance ``HIT_TOL``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np

HIT_TOL = 1e-12
DPS = 30
GOLDEN = "golden"


def _coerce(values):
    """Common number type: Fractions if all rational, else mpf."""
    if all(isinstance(v, (Rational, int)) and not isinstance(v, bool) for v in values):
        return [Fraction(v) for v in values], True
    with mpmath.workdps(DPS):
        return [mpmath.mpf(v) if not isinstance(v, Fraction)
                else mpmath.mpf(v.numerator) / v.denominator for v in values], False


def golden_gamma():
    with mpmath.workdps(DPS):
        return (mpmath.sqrt(5) - 1) / 2


@dataclass
class IntervalExchange:
    """``lengths[i]`` is the length of the i-th interval (left to right);
    ``permutation[i]`` is its 0-based position after the exchange."""

    lengths: list
    permutation: tuple[int, ...]
    exact: bool = True
    scale: object = 1

    def __post_init__(self):
        k = len(self.lengths)
        self.starts = [sum(self.lengths[:i], self.lengths[0] * 0) for i in range(k)]
        order = sorted(range(k), key=lambda i: self.permutation[i])
        self.image_starts = [None] * k
        acc = self.lengths[0] * 0
        for i in order:
            self.image_starts[i] = acc
            acc += self.lengths[i]
        self.offsets = [self.image_starts[i] - self.starts[i] for i in range(k)]

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def total(self):
        return sum(self.lengths, self.lengths[0] * 0)

    def discontinuities(self) -> list:
        """Interior break points of T (left endpoints of intervals 2..k)."""
        return self.starts[1:]

    def index(self, x) -> int:
        i = 0
        for j in range(1, self.k):
            if x >= self.starts[j]:
                i = j
        return i

    def __call__(self, x):
        return x + self.offsets[self.index(x)]

    def to_dict(self) -> dict:
        return {"lengths": [_out(v) for v in self.lengths],
                "permutation": [p + 1 for p in self.permutation]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _out(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def build_iet(lengths, permutation) -> IntervalExchange:
    """Normalise to total length 1.  ``permutation`` is 1-based (or 0-based
    if it contains 0): entry i is the position of interval i after exchange."""
    if isinstance(lengths, str) and lengths == GOLDEN:
        g = golden_gamma()
        lengths = [1 - g, g]
    lengths = list(lengths)
    if not lengths:
        raise ValueError("empty IET")
    perm = [int(p) for p in permutation]
    if len(perm) != len(lengths):
        raise ValueError("permutation length mismatch")
    base = 0 if 0 in perm else 1
    perm = [p - base for p in perm]
    if sorted(perm) != list(range(len(lengths))):
        raise ValueError("invalid permutation")
    vals, exact = _coerce(lengths)
    if any(not v > 0 for v in vals):
        raise ValueError("lengths must be positive")
    total = sum(vals, vals[0] * 0)
    return IntervalExchange([v / total for v in vals], tuple(perm), exact, scale=total)


def rotation(alpha) -> IntervalExchange:
    """Rotation ``x -> x + alpha mod 1`` as a 2-IET."""
    if alpha == GOLDEN:
        alpha = golden_gamma()
    vals, _ = _coerce([alpha])
    a = vals[0] % 1
    if a == 0:
        raise ValueError("rotation by an integer is the identity")
    return build_iet([1 - a, a], (2, 1))


def _close(x, y, exact) -> bool:
    return x == y if exact else abs(x - y) < HIT_TOL


@dataclass
class Orbit:
    points: list
    discontinuity_hits: list[int]
    periodic: bool
    period: int | None

    def to_dict(self):
        return {"points": [_out(p) for p in self.points], "discontinuity_hits": self.discontinuity_hits,
                "periodic": self.periodic, "period": self.period}


def orbit(iet: IntervalExchange, x, n: int) -> Orbit:
    if n < 0:
        raise ValueError("n must be >= 0")
    x = _coerce([x])[0][0] if iet.exact else mpmath.mpf(x)
    if not 0 <= x < 1:
        raise ValueError("x outside [0, 1)")
    disc = iet.discontinuities()
    pts, hits, period = [x], [], None
    with mpmath.workdps(DPS):
        cur = x
        for step in range(1, n + 1):
            cur = iet(cur)
            if not iet.exact and abs(cur - 1) < HIT_TOL:
                cur = cur * 0
            pts.append(cur)
            if any(_close(cur, b, iet.exact) for b in disc):
                hits.append(step)
            if period is None and _close(cur, x, iet.exact):
                period = step
    return Orbit(pts, hits, period is not None, period)


@dataclass
class KeaneResult:
    status: str
    period: int | None = None
    depth: int = 0
    connections: list = field(default_factory=list)

    def to_dict(self):
        return {"status": self.status, "period": self.period, "depth": self.depth,
                "connections": self.connections}


def keane_check(iet: IntervalExchange, depth: int = 10_000) -> KeaneResult:
    """Follow every discontinuity for ``depth`` steps.

    ``periodic`` if some discontinuity orbit closes up, ``minimal_up_to_depth``
    if no discontinuity orbit meets a discontinuity, ``inconclusive`` if
    connections were found but no orbit closed.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    disc = iet.discontinuities()
    best, conns = None, []
    with mpmath.workdps(DPS):
        for i, b in enumerate(disc):
            cur = b
            for step in range(1, depth + 1):
                cur = iet(cur)
                if not iet.exact and abs(cur - 1) < HIT_TOL:
                    cur = cur * 0
                if _close(cur, b, iet.exact):
                    best = step if best is None else min(best, step)
                    break
                for j, bj in enumerate(disc):
                    if j != i and _close(cur, bj, iet.exact):
                        conns.append((i + 1, j + 1, step))
    if best is not None:
        return KeaneResult("periodic", best, depth, conns)
    if conns:
        return KeaneResult("inconclusive", None, depth, conns)
    return KeaneResult("minimal_up_to_depth", None, depth, conns)


# ---------------------------------------------------------------------------
# suspensions and first return


@dataclass
class Suspension:
    """Vertical flow over a base section: a point of interval i flows up for
    ``heights[i]`` and re-enters the base at ``T(x)``.

    This is the roof-function model of zippered rectangles; singular leaves
    are those through the discontinuities of ``T`` and the section ends.
    """

    iet: IntervalExchange
    heights: list
    cylinder: bool = False

    def __post_init__(self):
        hs, _ = _coerce(list(self.heights))
        if len(hs) != self.iet.k or any(not h > 0 for h in hs):
            raise ValueError("need one positive height per interval")
        if self.iet.exact and not all(isinstance(h, Fraction) for h in hs):
            hs = [mpmath.mpf(h) for h in hs]
        self.heights = hs

    @property
    def area(self):
        return sum(w * h for w, h in zip(self.iet.lengths, self.heights))

    def height_at(self, x):
        return self.heights[self.iet.index(x)]


@dataclass
class ZipperedRectangles:
    section: object
    widths: list
    heights: list
    lefts: list
    induced: IntervalExchange
    steps: list[int]

    @property
    def area(self):
        return sum(w * h for w, h in zip(self.widths, self.heights))

    def to_dict(self):
        return {"section": _out(self.section), "widths": [_out(w) for w in self.widths],
                "heights": [_out(h) for h in self.heights], "steps": self.steps,
                "induced": self.induced.to_dict()}


def first_return(susp: Suspension, section=None) -> ZipperedRectangles:
    """Rectangles over the subsection ``[0, section)`` of the base.

    Pieces of ``[0, l)`` are pushed forward, split at discontinuities and at
    ``l``, until each lands back in ``[0, l)``; the pieces are the rectangle
    bases and the accumulated roof heights their heights.
    """
    if susp.cylinder:
        raise ValueError("section lies in a cylinder: use cylinder data directly")
    T = susp.iet
    zero = T.lengths[0] * 0
    l = zero + 1 if section is None else _coerce([section])[0][0] if T.exact else mpmath.mpf(section)
    if not 0 < l <= 1:
        raise ValueError("section length must lie in (0, 1]")
    # a singularity in the interior of the section would mean the section
    # crosses a discontinuity leaf at height zero; the base itself is chosen
    # through regular points so only the endpoints are singular.
    tol = zero if T.exact else mpmath.mpf(HIT_TOL)
    done = []  # (orig_left, width, height, steps, landing)
    active = [(zero, l, zero, zero, 0)]  # (orig_left, width, cur_left, height, steps)
    guard = 0
    with mpmath.workdps(DPS):
        while active:
            guard += 1
            if guard > 10**6:
                raise ValueError("first return did not terminate (not minimal?)")
            o, w, c, h, s = active.pop()
            # split at the next discontinuity inside (c, c + w)
            cut = None
            for b in T.starts[1:]:
                if c + tol < b < c + w - tol:
                    cut = b
                    break
            if cut is not None:
                active.append((o + (cut - c), w - (cut - c), cut, h, s))
                w = cut - c
            h2 = h + susp.heights[T.index(c)]
            c2 = T(c)
            if not T.exact and abs(c2 - 1) < tol:
                c2 = zero
            # split at l
            if c2 + tol < l < c2 + w - tol:
                done.append((o, l - c2, h2, s + 1, c2))
                active.append((o + (l - c2), w - (l - c2), l, h2, s + 1))
            elif c2 < l - tol or (T.exact and c2 < l):
                done.append((o, w, h2, s + 1, c2))
            else:
                active.append((o, w, c2, h2, s + 1))
    done.sort(key=lambda r: r[0])
    widths = [r[1] for r in done]
    landing = sorted(range(len(done)), key=lambda i: done[i][4])
    perm = [0] * len(done)
    for pos, i in enumerate(landing):
        perm[i] = pos
    induced = IntervalExchange([w / l for w in widths], tuple(perm), T.exact, scale=l)
    return ZipperedRectangles(l, widths, [r[2] for r in done], [r[0] for r in done], induced,
                              [r[3] for r in done])


def flow_until(susp: Suspension, x, section, cap=None):
    """Direct flow simulation of the leaf through ``x``.

    Flows up until the leaf returns to ``[0, section)``, passes through a
    singularity (a discontinuity of the base map or the section end ``0``),
    or its height reaches ``cap``.  Returns ``(height, event)`` with event
    one of ``"return"``, ``"singularity"``, ``"cap"``.
    """
    T = susp.iet
    sing = T.discontinuities()
    cur, h = x, 0
    with mpmath.workdps(DPS):
        for _ in range(10**7):
            h += susp.heights[T.index(cur)]
            cur = T(cur)
            if not T.exact and abs(cur - 1) < HIT_TOL:
                cur = cur * 0
            if any(_close(cur, b, T.exact) for b in sing) or _close(cur, 0 * cur, T.exact):
                return h, "singularity"
            if cur < section:
                return h, "return"
            if cap is not None and h >= cap:
                return h, "cap"
    raise RuntimeError("no return")


@dataclass
class TallSectionCertificate:
    H: float
    l0: object
    l1: object
    l2: object
    K: int
    verified_min_height: float
    samples: int = 0
    cap: float | None = None

    def to_dict(self):
        return {"H": float(self.H), "l0": float(self.l0), "l1": float(self.l1), "l2": float(self.l2),
                "K": self.K, "verified_min_height": float(self.verified_min_height),
                "samples": self.samples, "cap": self.cap}

    def to_json(self):
        return json.dumps(self.to_dict())


def tall_section(susp: Suspension, H, samples: int = 1000, seed: int = 0,
                 margin: float = 0.9, cap_factor: float = 2.0) -> TallSectionCertificate:
    """Shrink the section until every first-return rectangle is taller than H.

    With ``h1`` the minimal rectangle height over the full section and
    ``K = ceil(H / h1)``: ``l0`` is a margin below the smallest positive
    point among ``T(0), ..., T^K(0)``, ``l1`` a margin below the smallest
    rectangle width over ``[0, l0)`` and ``l2`` a margin below the smallest
    width over ``[0, l1)``.  The certificate records the minimum return
    height found by flowing the midpoint of every rectangle over ``[0, l1)``
    that lies in ``[0, l2)`` plus ``samples`` random base points of
    ``[0, l2)``; the simulation stops at ``cap_factor * H``, so the recorded
    value is a lower bound on the true minimum whenever it equals the cap.
    """
    if not H > 0:
        raise ValueError("H must be positive")
    if susp.cylinder or keane_check(susp.iet).status == "periodic":
        raise ValueError("not minimal")
    T = susp.iet
    zero = T.lengths[0] * 0
    h1 = min(susp.heights)
    if H <= h1:
        full = zero + 1
        return TallSectionCertificate(H, full, full, full, 1, float(h1), 0)
    K = math.ceil(H / h1)
    with mpmath.workdps(DPS):
        cur, pts = zero, []
        for _ in range(K):
            cur = T(cur)
            if _close(cur, zero, T.exact) or (not T.exact and abs(cur - 1) < HIT_TOL):
                raise ValueError("not minimal")
            pts.append(cur)
        m = _coerce([margin])[0][0] if T.exact else mpmath.mpf(margin)
        l0 = m * min(pts)
        l1 = m * min(first_return(susp, l0).widths)
        zr = first_return(susp, l1)
        l2 = m * min(zr.widths)
        rng = np.random.default_rng(seed)
        probes = [left + w / 2 for left, w in zip(zr.lefts, zr.widths) if left + w / 2 < l2]
        probes += [l2 * (_coerce([u])[0][0] if T.exact else mpmath.mpf(u))
                   for u in rng.random(samples)]
        cap = float(H) * cap_factor
        heights = []
        for x in probes:
            h, event = flow_until(susp, x, l2, cap)
            heights.append(min(float(h), cap) if event == "cap" else float(h))
    return TallSectionCertificate(H, l0, l1, l2, K, min(heights), len(probes), cap)


def golden_suspension() -> Suspension:
    return Suspension(rotation(GOLDEN), [1, 1])


def random_iet(k: int, seed: int, permutation=None) -> IntervalExchange:
    rng = np.random.default_rng(seed)
    perm = permutation or tuple(range(k, 0, -1))
    return build_iet([float(v) for v in rng.uniform(0.1, 1.0, k)], perm)
