"""Random walks by mapping classes on the genus-one Teichmuller space.

Walk points ``y_n = w_0 w_1 ... w_{n-1} . y`` are never stored as complex
numbers: they converge to the boundary exponentially fast, so their
coordinates run out of precision after a few hundred steps.  Instead the
integer prefix products are kept exactly and every distance is read off in a
*frame*: the rotation about the basepoint that sends a rational boundary
point ``xi = p/q`` to infinity.  Multiplied by ``sqrt(p^2 + q^2)`` that
rotation is an integer matrix, so the frame coordinates of every walk point
are exact integers.  Their bottom row is the delicate one (it cancels down to
the size of the point's offset from the geodesic toward ``xi``), and it is
exact here because nothing was rounded before the cancellation.  Each point
is then summarised by two floats, ``lam = log(height)`` and
``u = abscissa / height``, from which all distances follow without overflow.

Basepoints must lie in the mapping-class orbit of ``i``; the walk is
conjugated so that its basepoint is ``i`` itself.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import mpmath
import numpy as np

from .metric_core import TriangleFrame, _make_frame, hyp_d
from .torus_teich import INF, TEICH, MappingClass, S, T, T_INV, TeichGeodesic, resolve_direction, thin_times

LN2 = math.log(2.0)
CHECKPOINT = 256


# ---------------------------------------------------------------------------
# integer matrix helpers (tuples a, b, c, d)


def _tup(m: MappingClass) -> tuple:
    return (m.a, m.b, m.c, m.d)


def _mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _adj(x):
    a, b, c, d = x
    return (d, -b, -c, a)


def _scaled(*xs):
    """Floats ``f`` and a shift ``s`` with ``x ~ f * 2**s`` for every ``x``."""
    s = max(0, max(abs(x).bit_length() for x in xs) - 62)
    if s:
        return [float(x >> s) for x in xs], s
    return [float(x) for x in xs], 0


def _half_acosh1p(lnq):
    """``acosh(1 + Q) / 2`` from ``log Q``, vectorised and overflow free."""
    lnq = np.asarray(lnq, dtype=float)
    out = np.empty_like(lnq)
    big = lnq > 35
    out[big] = 0.5 * (LN2 + lnq[big])
    q = np.exp(lnq[~big])
    out[~big] = 0.5 * np.log1p(q + np.sqrt(q * (q + 2)))
    return out


def matrix_distance(m) -> float:
    """Teichmuller distance from ``i`` to ``m . i`` for an integer matrix ``m``.

    ``cosh(2d) = |m|^2 / 2`` with the Frobenius norm, evaluated exactly.
    """
    a, b, c, d = m
    n2 = a * a + b * b + c * c + d * d
    if n2.bit_length() < 900:
        q = (n2 - 2) / 2
        return 0.0 if q <= 0 else float(_half_acosh1p(math.log(q)))
    return float(_half_acosh1p(math.log(n2 - 2) - LN2))


def frame_distance(lam1, u1, lam2, u2):
    """Teichmuller distance between points given by frame summaries."""
    lam1, u1, lam2, u2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lam1, u1, lam2, u2)))
    dl = lam1 - lam2
    swap = dl > 0
    ulo = np.where(swap, u2, u1)
    uhi = np.where(swap, u1, u2)
    ad = np.abs(dl)
    rho = np.exp(-ad)
    num = (ulo * rho - uhi) ** 2 + np.expm1(-ad) ** 2
    with np.errstate(divide="ignore"):
        lnq = np.log(num) - LN2 + ad
    return _half_acosh1p(lnq)


# ---------------------------------------------------------------------------
# configuration


def _orbit_matrix(y) -> tuple:
    """Integer matrix ``B`` with ``B . i = y``; error if ``y`` is not in the orbit of ``i``."""
    z = complex(y)
    if z.imag <= 0:
        raise ValueError("basepoint must lie in the upper half-plane")
    m = (1, 0, 0, 1)
    for _ in range(10000):
        k = round(z.real)
        z -= k
        m = _mul((1, -k, 0, 1), m)
        if abs(z) < 1 - 1e-12:
            z = -1 / z
            m = _mul((0, -1, 1, 0), m)
        else:
            break
    if abs(z - 1j) > 1e-9:
        raise ValueError("basepoint must lie in the mapping-class orbit of i (e.g. i, 1+i, i/2+1/2)")
    return _adj(m)


def _fixed_pair(m):
    """Normalised coefficients of ``c z^2 + (d - a) z - b``, which vanish at the fixed points."""
    a, b, c, d = m
    v = [c, d - a, -b]
    g = math.gcd(*v)
    v = [x // g for x in v]
    if next(x for x in v if x) < 0:
        v = [-x for x in v]
    return tuple(v)


def non_elementary(generators: Sequence[MappingClass], max_len: int = 4) -> bool:
    """True when words of length at most ``max_len`` contain two hyperbolic
    elements with different fixed-point pairs (sufficient for a discrete
    subgroup of SL(2, R) to be non-elementary)."""
    gens = [_tup(g) for g in generators]
    seen = set()
    for length in range(1, max_len + 1):
        for word in product(gens, repeat=length):
            m = (1, 0, 0, 1)
            for g in word:
                m = _mul(m, g)
            if abs(m[0] + m[3]) > 2:
                seen.add(_fixed_pair(m))
                if len(seen) > 1:
                    return True
    return False


@dataclass
class WalkConfig:
    generators: Sequence[MappingClass]
    probabilities: Sequence[float]
    basepoint: complex = 1j
    epsilon: float = 0.5
    steps: int = 1000
    seed: int = 0
    paths: int = 1

    def __post_init__(self):
        self.generators = [g if isinstance(g, MappingClass) else MappingClass(*g) for g in self.generators]
        self.probabilities = [float(p) for p in self.probabilities]
        if not self.generators or len(self.generators) != len(self.probabilities):
            raise ValueError("generators and probabilities must be non-empty and of equal length")
        if min(self.probabilities) < 0 or abs(sum(self.probabilities) - 1) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        if self.steps < 1 or self.paths < 1:
            raise ValueError("steps and paths must be positive")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        self.basepoint = complex(self.basepoint)
        self.base_matrix = _orbit_matrix(self.basepoint)
        # the basepoint is a translate of i, whose systole is 1 >= epsilon
        self.non_elementary = non_elementary(
            [g for g, p in zip(self.generators, self.probabilities) if p > 0])

    def conjugated(self) -> list[tuple]:
        b = self.base_matrix
        return [_mul(_mul(_adj(b), _tup(g)), b) for g in self.generators]

    def to_dict(self) -> dict:
        return {
            "generators": [list(_tup(g)) for g in self.generators],
            "probs": list(self.probabilities),
            "basepoint": {"re": self.basepoint.real, "im": self.basepoint.imag},
            "epsilon": self.epsilon,
            "steps": self.steps,
            "paths": self.paths,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WalkConfig":
        bp = data.get("basepoint", {"re": 0.0, "im": 1.0})
        return cls(
            generators=[MappingClass(*g) for g in data["generators"]],
            probabilities=data["probs"],
            basepoint=complex(bp["re"], bp["im"]),
            epsilon=data.get("epsilon", 0.5),
            steps=int(data["steps"]),
            paths=int(data.get("paths", 1)),
            seed=int(data.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "WalkConfig":
        return cls.from_dict(json.loads(text))


def uniform_walk(steps: int = 1000, seed: int = 0, paths: int = 1, epsilon: float = 0.5) -> WalkConfig:
    """The uniform walk on ``{T, T^-1, S}`` based at ``i``."""
    return WalkConfig([T, T_INV, S], [1 / 3, 1 / 3, 1 / 3], 1j, epsilon, steps, seed, paths)


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator keyed by the master seed and the path index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


# ---------------------------------------------------------------------------
# sample paths


@dataclass
class SamplePath:
    """A sampled walk.  Matrices are stored in conjugated coordinates where
    the basepoint is ``i``; ``mapping_class(n)`` gives ``w_0 ... w_{n-1}``."""

    config: WalkConfig
    omega: np.ndarray
    index: int
    seed: tuple
    _gens: list = field(repr=False)
    _checkpoints: list = field(repr=False)
    _frames: dict = field(default_factory=dict, repr=False)

    @property
    def steps(self) -> int:
        return len(self.omega)

    def matrix(self, n: int) -> tuple:
        if not 0 <= n <= self.steps:
            raise IndexError(n)
        k = n // CHECKPOINT
        m = self._checkpoints[k]
        for j in range(k * CHECKPOINT, n):
            m = _mul(m, self._gens[self.omega[j]])
        return m

    @property
    def final(self) -> tuple:
        return self.matrix(self.steps)

    def mapping_class(self, n: int) -> MappingClass:
        b = self.config.base_matrix
        return MappingClass(*_mul(_mul(b, self.matrix(n)), _adj(b)))

    def point(self, n: int):
        """``y_n`` as an mpmath complex at a precision adequate for its size."""
        a, b, c, d = _mul(self.config.base_matrix, self.matrix(n))
        digits = max(abs(x).bit_length() for x in (a, b, c, d)) * 2 // 3 + 30
        with mpmath.workdps(digits):
            z = (a * mpmath.mpc(0, 1) + b) / (c * mpmath.mpc(0, 1) + d)
            return +z

    @property
    def points(self) -> list[complex]:
        return [complex(self.point(n)) for n in range(self.steps + 1)]

    def frame(self, xi) -> "_Frame":
        """Frame summaries for the conjugated boundary point ``xi`` (Fraction or INF)."""
        key = xi
        if key not in self._frames:
            self._frames[key] = _build_frame(self, xi)
        return self._frames[key]


def sample_path(config: WalkConfig, index: int = 0) -> SamplePath:
    rng = path_rng(config.seed, index)
    omega = rng.choice(len(config.generators), size=config.steps, p=config.probabilities)
    gens = config.conjugated()
    checkpoints = [(1, 0, 0, 1)]
    m = checkpoints[0]
    for j, w in enumerate(omega, start=1):
        m = _mul(m, gens[w])
        if j % CHECKPOINT == 0:
            checkpoints.append(m)
    return SamplePath(config, omega, index, (config.seed, index), gens, checkpoints)


def _xi_pq(xi) -> tuple[int, int]:
    if xi == INF:
        return 1, 0
    xi = Fraction(xi)
    return xi.numerator, xi.denominator


@dataclass
class _Frame:
    xi: object
    lam: np.ndarray
    u: np.ndarray


def _build_frame(path: SamplePath, xi) -> _Frame:
    p, q = _xi_pq(xi)
    m = (-p, -q, q, -p)
    r2 = p * p + q * q
    ln_r2 = math.log(r2)
    (r2f,), sr = _scaled(r2)
    n = path.steps
    lam = np.empty(n + 1)
    u = np.empty(n + 1)
    gens, omega = path._gens, path.omega
    for j in range(n + 1):
        if j:
            m = _mul(m, gens[omega[j - 1]])
        (f21, f22), s2 = _scaled(m[2], m[3])
        (f11, f12), s1 = _scaled(m[0], m[1])
        lam[j] = ln_r2 - math.log(f21 * f21 + f22 * f22) - 2 * s2 * LN2
        u[j] = math.ldexp(f11 * f21 + f12 * f22, s1 + s2 - sr) / r2f
    return _Frame(xi, lam, u)


# ---------------------------------------------------------------------------
# cocycle


@dataclass
class CocycleTable:
    """``a(n) = d(y, y_n)`` with pairwise distances on demand."""

    path: SamplePath
    a: np.ndarray
    frame: _Frame
    subadditivity_violation: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.a) - 1

    def distance(self, k, n):
        """``d(y_k, y_n)``; ``k`` and ``n`` may be arrays."""
        f = self.frame
        k = np.asarray(k)
        n = np.asarray(n)
        out = frame_distance(f.lam[k], f.u[k], f.lam[n], f.u[n])
        return float(out) if out.ndim == 0 else out

    def shifted_distance(self, m: int, n: int) -> float:
        """``a(n, L^m w)``: the distance from ``y`` to ``w_m ... w_{m+n-1} . y``."""
        gens, omega = self.path._gens, self.path.omega
        prod_ = (1, 0, 0, 1)
        for j in range(m, m + n):
            prod_ = _mul(prod_, gens[omega[j]])
        return matrix_distance(prod_)


def cocycle(path: SamplePath, xi=None, check_pairs: int = 1000, seed: int = 0) -> CocycleTable:
    """Distance cocycle of ``path``.

    Distances are read in the frame of ``xi`` (conjugated coordinates);
    by default the path's own limit estimate.  Subadditivity
    ``a(n+m) <= d(y_m, y_{m+n}) + a(m)`` is checked on ``check_pairs``
    random pairs and the worst violation is recorded.
    """
    if xi is None:
        xi = _limit_conjugated(path.final)
    frame = path.frame(xi)
    zeros = np.zeros(1)
    a = frame_distance(zeros, zeros, frame.lam, frame.u)
    a[0] = 0.0
    table = CocycleTable(path, a, frame)
    if check_pairs and path.steps >= 2:
        rng = np.random.default_rng(seed)
        m = rng.integers(0, path.steps, size=check_pairs)
        n = np.array([rng.integers(1, path.steps - mm + 1) for mm in m])
        lhs = a[m + n]
        rhs = table.distance(m, m + n) + a[m]
        table.subadditivity_violation = float(max(0.0, np.max(lhs - rhs)))
    return table


@dataclass
class DriftEstimate:
    A_hat: float
    half1: float
    half2: float
    n_used: int
    per_path: np.ndarray
    stderr: float
    near_zero: bool

    @property
    def half_split(self) -> float:
        return abs(self.half1 - self.half2) / self.A_hat if self.A_hat > 0 else math.inf

    def to_dict(self) -> dict:
        return {"A_hat": self.A_hat, "half1": self.half1, "half2": self.half2,
                "half_split": self.half_split, "n_used": self.n_used,
                "stderr": self.stderr, "near_zero": self.near_zero}


def drift_from_finals(finals: Sequence[float], steps: int) -> DriftEstimate:
    vals = np.asarray(finals, dtype=float) / steps
    h = len(vals) // 2
    A = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
    near_zero = A < max(3 * stderr if stderr == stderr else 0.0, 2 * math.log(steps + 1) / steps)
    return DriftEstimate(A, float(vals[:h].mean()), float(vals[h:].mean()), len(vals), vals, stderr, near_zero)


def _final_distance(args) -> float:
    config, index = args
    return matrix_distance(sample_path(config, index).final)


def estimate_drift(config: WalkConfig, n_paths: int | None = None, steps: int | None = None,
                   threads: int = 1) -> DriftEstimate:
    """``A_hat`` = mean over paths of ``a(steps) / steps`` with a half-split diagnostic."""
    n_paths = n_paths or config.paths
    if n_paths < 2:
        raise ValueError("need at least two paths")
    if steps is not None and steps != config.steps:
        config = WalkConfig(**{**_config_kwargs(config), "steps": steps})
    jobs = [(config, i) for i in range(n_paths)]
    finals = _map(_final_distance, jobs, threads)
    return drift_from_finals(finals, config.steps)


def _config_kwargs(c: WalkConfig) -> dict:
    return dict(generators=c.generators, probabilities=c.probabilities, basepoint=c.basepoint,
                epsilon=c.epsilon, steps=c.steps, seed=c.seed, paths=c.paths)


def _map(fn: Callable, jobs: list, threads: int) -> list:
    if threads <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class Record:
    n: int
    N: int


@dataclass
class SyntheticTable:
    """Cocycle table given by a distance function, for oracles and tests."""

    a: np.ndarray
    dist: Callable

    @property
    def n_max(self) -> int:
        return len(self.a) - 1

    def distance(self, k, n):
        return self.dist(k, n)

    @classmethod
    def from_matrix(cls, d: np.ndarray) -> "SyntheticTable":
        d = np.asarray(d, dtype=float)
        return cls(d[0].copy(), lambda k, n: d[k, n])

    @classmethod
    def from_positions(cls, x: np.ndarray) -> "SyntheticTable":
        """Points on a line at positions ``x`` (``x[0]`` is the basepoint)."""
        x = np.asarray(x, dtype=float)
        return cls(np.abs(x - x[0]), lambda k, n: np.abs(x[n] - x[k]))


def detect_records(table, A: float, delta: float, ns=None, first_only: bool = False,
                   chunk: int = 1024) -> list[Record]:
    """Indices ``n`` admitting some ``N <= n`` with
    ``a(n) - d(y_k, y_n) >= (A - delta) k`` for every ``N <= k <= n``,
    each with its minimal ``N``.

    ``ns`` restricts which ``n`` are tested; ``first_only`` stops at the
    first record found.  Each ``n`` is scanned downward from ``k = n`` and
    stops at the first failing ``k``.
    """
    if not 0 < delta < A:
        raise ValueError("need 0 < delta < A")
    slope = A - delta
    a = table.a
    if ns is None:
        ns = range(1, table.n_max + 1)
    out = []
    for n in ns:
        n = int(n)
        if n < 1:
            continue
        N = 1
        hi = n
        while hi >= 1:
            lo = max(1, hi - chunk + 1)
            ks = np.arange(lo, hi + 1)
            good = a[n] - np.asarray(table.distance(ks, n)) >= slope * ks
            if not good.all():
                N = int(ks[np.flatnonzero(~good)[-1]]) + 1
                break
            hi = lo - 1
        if N <= n:
            out.append(Record(n, N))
            if first_only:
                break
    return out


def escape_index(table, A: float, delta: float) -> int:
    """Minimal ``N`` with ``a(k) >= (A - delta) k`` for all ``N <= k <= n_max``.

    Every record has ``N`` at least this large (triangle inequality), so it
    is the per-path threshold used for thin-frame pairs.
    """
    slope = A - delta
    ks = np.arange(1, table.n_max + 1)
    bad = np.flatnonzero(table.a[1:] < slope * ks)
    return int(ks[bad[-1]]) + 1 if len(bad) else 1


# ---------------------------------------------------------------------------
# limit point


def _limit_conjugated(m):
    a, _, c, _ = m
    if c == 0:
        return INF
    return Fraction(a, c)


def _mobius_exact(m, xi):
    a, b, c, d = m
    if xi == INF:
        return INF if c == 0 else Fraction(a, c)
    num, den = a * xi + b, c * xi + d
    return INF if den == 0 else Fraction(num) / den


def visual_angle(xi1, xi2) -> float:
    """Angle at ``i`` between the rays toward two rational (or infinite) boundary points."""
    p1, q1 = _xi_pq(xi1)
    p2, q2 = _xi_pq(xi2)
    cross = p1 * q2 - q1 * p2
    dot = p1 * p2 + q1 * q2
    if cross == 0:
        return 0.0 if dot > 0 else 2 * math.pi
    if dot != 0 and abs(cross) * 10**8 < abs(dot):
        small = abs(cross / dot) if abs(dot) < 10**300 else abs(Fraction(cross, dot))
        return 2 * math.atan(float(small))
    (c, d), _ = _scaled(cross, dot)
    return 2 * abs(math.atan2(c, d))


@dataclass
class LimitPoint:
    xi: object
    xi_float: float
    diagnostic: float
    converged: bool
    message: str

    def to_dict(self) -> dict:
        return {"xi": "inf" if self.xi == INF else str(self.xi), "xi_float": self.xi_float,
                "diagnostic": self.diagnostic, "converged": self.converged, "message": self.message}


def limit_point(path: SamplePath, tol: float = 1e-3) -> LimitPoint:
    """Boundary estimate ``w_0 ... w_{N-1} . inf`` and the visual angle
    (seen from the basepoint) between the estimates at ``N`` and ``N/2``."""
    n = path.steps
    xc = _limit_conjugated(path.final)
    xh = _limit_conjugated(path.matrix(n // 2))
    diag = visual_angle(xc, xh)
    xi = _mobius_exact(path.config.base_matrix, xc)
    drift = matrix_distance(path.final) / n
    if drift < 2 * math.log(n + 1) / n:
        msg = "no convergence detected: drift is not positive at this length"
        ok = False
    else:
        ok = diag < tol
        msg = "converged" if ok else "estimates at N and N/2 still differ"
    return LimitPoint(xi, math.inf if xi == INF else float(xi), diag, ok, msg)


# ---------------------------------------------------------------------------
# tracking


def _chi(times: np.ndarray, intervals) -> np.ndarray:
    if not intervals:
        return np.ones(len(times), dtype=bool)
    lo = np.array([i[0] for i in intervals])
    hi = np.array([i[1] for i in intervals])
    j = np.searchsorted(lo, times, side="right") - 1
    inside = (j >= 0) & (times <= hi[np.clip(j, 0, None)])
    return ~inside


@dataclass
class TrackingResult:
    s: np.ndarray
    unmasked: np.ndarray
    chi: np.ndarray
    A: float
    epsilon: float
    xi: object

    def median(self, lo: int, hi: int, masked: bool = True) -> float:
        v = (self.s if masked else self.unmasked)[lo:hi + 1]
        return float(np.median(v))

    def dyadic_medians(self, masked: bool = True) -> dict:
        out = {}
        j = 0
        n = len(self.s) - 1
        while 2**j <= n:
            lo, hi = 2**j, min(2 ** (j + 1) - 1, n)
            out[f"{lo}-{hi}"] = self.median(lo, hi, masked)
            j += 1
        return out


def _geodesic_xi(path: SamplePath, geodesic: TeichGeodesic):
    if abs(complex(geodesic.basepoint) - path.config.basepoint) > 1e-12:
        raise ValueError("geodesic must start at the walk's basepoint")
    xi = resolve_direction(geodesic.basepoint, geodesic.direction)
    if xi != INF:
        if isinstance(xi, float):
            xi = Fraction(xi)
        elif not isinstance(xi, (int, Fraction)):
            raise ValueError("tracking needs a boundary point given exactly (int, Fraction or inf)")
    return _mobius_exact(_adj(path.config.base_matrix), xi)


def limit_geodesic(path: SamplePath) -> TeichGeodesic:
    """Ray from the basepoint toward the path's limit estimate (exact direction)."""
    return TeichGeodesic(path.config.basepoint, limit_point(path).xi)


def tracking_statistic(path: SamplePath, geodesic: TeichGeodesic, A: float,
                       epsilon: float | None = None) -> TrackingResult:
    """``s(n) = d(y_n, gamma(A n)) chi_K(p_n) / n`` with ``p_n = gamma(d(y, y_n))``.

    ``chi_K`` is evaluated exactly from the cusp crossings of ``gamma``; the
    unmasked sequence (without ``chi_K``) is returned alongside.
    """
    if A <= 0:
        raise ValueError("A must be positive")
    eps = path.config.epsilon if epsilon is None else epsilon
    xi = _geodesic_xi(path, geodesic)
    fr = path.frame(xi)
    n = np.arange(path.steps + 1)
    zeros = np.zeros(1)
    a = frame_distance(zeros, zeros, fr.lam, fr.u)
    dist = frame_distance(fr.lam, fr.u, 2 * A * n, zeros)
    intervals = thin_times(xi, eps, t_max=float(a.max()) + 1)
    chi = _chi(a, intervals)
    with np.errstate(invalid="ignore", divide="ignore"):
        unmasked = np.where(n > 0, dist / np.maximum(n, 1), 0.0)
    s = unmasked * chi
    return TrackingResult(s, unmasked, chi, A, eps, xi)


# ---------------------------------------------------------------------------
# thin-frame pairs


def _cmul(u, v):
    return (u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0])


def ray_log_angle(m, xi) -> float:
    """Log of the angle at ``i`` between the rays toward ``m . i`` and toward ``xi``.

    Both directions are Gaussian integers up to positive scaling, so the
    angle is exact however small it is.
    """
    a, b, c, d = m
    p, q = _xi_pq(xi)
    # direction of m.i ~ ((b + c) + i(a - d)) / ((b - c) + i(a + d)); of xi ~ (p - iq)^2
    z = _cmul(_cmul((b + c, a - d), (b - c, -(a + d))), _cmul((p, q), (p, q)))
    re, im = z
    if im == 0:
        return -math.inf if re > 0 else math.log(math.pi)
    if re > 0 and abs(im) * 10**8 < re:
        return math.log(abs(im)) - math.log(re)
    (x, y), _ = _scaled(re, im)
    return math.log(abs(math.atan2(y, x)))


def rays_gap(log_theta: float, r: float) -> float:
    """Distance between the points at Teichmuller time ``r`` on two rays from
    a common point meeting at angle ``exp(log_theta)``."""
    if log_theta == -math.inf or r <= 0:
        return 0.0
    # cosh(2d) = 1 + 2 sinh^2(2r) sin^2(theta/2)
    ls = 2 * r - LN2 + math.log1p(-math.exp(-4 * r))
    if log_theta < -8:
        lsin = log_theta - LN2
    else:
        lsin = math.log(math.sin(math.exp(log_theta) / 2))
    return float(_half_acosh1p(LN2 + 2 * ls + 2 * lsin))


@dataclass
class ThinFramePair:
    n: int
    m: int
    defect: float
    defect_ratio: float
    bound: float
    frame: TriangleFrame
    w_thick: bool
    proximity: float
    proximity_ok: bool

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "defect": self.defect, "defect_ratio": self.defect_ratio,
                "bound": self.bound, "frame": self.frame.to_dict(), "w_thick": self.w_thick,
                "proximity": self.proximity, "proximity_ok": self.proximity_ok}


def _w_thick(path: SamplePath, iy: int, iz: int, along: float, c: float, eps: float) -> bool:
    """Is the point at distance ``along`` from ``y_iy`` on ``[y_iy, y_iz]`` in K(eps)?

    The segment is pulled back by the nearer endpoint's matrix so that the
    point sits on a ray from ``i``; the ray is taken toward the rational
    ``Q . inf`` next to ``Q . i``, which moves the point by at most about
    ``exp(-c)``.
    """
    if along <= c - along:
        q, s = _mul(_adj(path.matrix(iy)), path.matrix(iz)), along
    else:
        q, s = _mul(_adj(path.matrix(iz)), path.matrix(iy)), c - along
    xi = _limit_conjugated(q)
    t = np.array([s])
    return bool(_chi(t, thin_times(xi, eps, t_max=s + 1))[0])


def thin_frame_pairs(path: SamplePath, table: CocycleTable, A: float, delta: float,
                     epsilon: float | None = None, grid: int = 60, max_pairs: int = 200,
                     seed: int = 0) -> list[ThinFramePair]:
    """Pairs ``m > n >= N_delta`` from a grid of indices with
    ``d(y,y_n) + d(y_n,y_m) - d(y,y_m) <= (2 delta / (A - delta)) d(y,y_n)``.

    Each pair carries its frame over ``(y, y_n, y_m)``, whether the frame's
    comparison point is in the thick part, and the distance between
    ``p_n`` on the limit ray and the point at the same time on the ray toward
    ``y_m``.
    """
    if not 0 < delta < A:
        raise ValueError("need 0 < delta < A")
    eps = path.config.epsilon if epsilon is None else epsilon
    bound = 2 * delta / (A - delta)
    N = escape_index(table, A, delta)
    idx = np.unique(np.linspace(N, table.n_max, grid).round().astype(int))
    nn, mm = np.meshgrid(idx, idx, indexing="ij")
    sel = mm > nn
    nn, mm = nn[sel], mm[sel]
    a = table.a
    dnm = table.distance(nn, mm)
    defect = a[nn] + dnm - a[mm]
    ok = (a[nn] > 0) & (defect <= bound * a[nn])
    cand = np.flatnonzero(ok)
    if len(cand) > max_pairs:
        cand = np.sort(np.random.default_rng(seed).choice(cand, size=max_pairs, replace=False))
    xi_inf = table.frame.xi
    out = []
    for j in cand:
        n, m = int(nn[j]), int(mm[j])
        an, am, dd = float(a[n]), float(a[m]), float(dnm[j])
        if an + dd - am > bound * an:
            raise AssertionError("pair fails its defining inequality")
        # vertices 0 = y, 1 = y_n, 2 = y_m; sides listed with the (1, 2) side first
        sides = {(1, 2): dd, (0, 1): an, (0, 2): am}
        c = max(sides.values())
        tol = 1e-12 * max(1.0, c)
        best = None
        for (i, k), ci in sides.items():
            if c - ci > tol:
                continue
            x = 3 - i - k
            ai = sides[tuple(sorted((x, i)))]
            bi = sides[tuple(sorted((x, k)))]
            di = hyp_d(min(ai, ci), min(bi, ci), ci, TEICH.scale)
            if best is None or di < best[3] - tol:
                best = (ai, bi, ci, di, (x, i, k))
        ai, bi, ci, di, (x, i, k) = best
        verts = (0, n, m)
        frame = _make_frame(ai, bi, ci, di, "teichmuller_torus",
                            (f"y_{verts[x]}", f"y_{verts[i]}", f"y_{verts[k]}", "w"))
        thick = _w_thick(path, verts[i], verts[k], min(ai, ci), ci, eps)
        prox = rays_gap(ray_log_angle(path.matrix(m), xi_inf), an)
        out.append(ThinFramePair(n, m, float(an + dd - am), float((an + dd - am) / an), bound,
                                 frame, thick, prox, prox < delta))
    return out


def geodesic_convergence(path: SamplePath, table: CocycleTable, n: int, ms: Sequence[int]) -> np.ndarray:
    """``d(gamma_inf(r_n), gamma_m(r_n))`` for each ``m``, with ``r_n = d(y, y_n)``."""
    r = float(table.a[n])
    return np.array([rays_gap(ray_log_angle(path.matrix(m), table.frame.xi), r) for m in ms])


def empirical_slope(pairs: Sequence[ThinFramePair], thick_only: bool = True) -> float:
    """Smallest ``k`` with ``d <= k (a + b - c)`` over the given frames."""
    ks = []
    for p in pairs:
        if thick_only and not p.w_thick:
            continue
        f = p.frame
        dfc = f.a + f.b - f.c
        if f.d == 0:
            continue
        ks.append(math.inf if dfc <= 0 else f.d / dfc)
    return max(ks) if ks else math.nan


# ---------------------------------------------------------------------------
# whole-walk analysis


@dataclass
class PathReport:
    index: int
    a_final: float
    limit: LimitPoint
    records: list
    first_record_after: int | None
    tracking: TrackingResult | None
    pairs: list
    subadditivity_violation: float
    a: np.ndarray

    def rows(self) -> list[tuple]:
        """``(n, a_n, s_n, chi_K, record_flag)`` for every step."""
        tr = self.tracking
        rec = {r.n for r in self.records}
        return [(n, float(self.a[n]), float(tr.s[n]), int(tr.chi[n]), int(n in rec))
                for n in range(len(tr.s))]


def analyse_path(config: WalkConfig, index: int, A: float, delta_records: float | None = None,
                 delta_pairs: float | None = None, record_after: int = 1000,
                 record_ns=None, pair_grid: int = 40, max_pairs: int = 100, keep_table: bool = False):
    """Everything the reports need for one path, given the drift estimate ``A``."""
    path = sample_path(config, index)
    lp = limit_point(path)
    xi_c = _limit_conjugated(path.final)
    table = cocycle(path, xi_c, check_pairs=200, seed=index)
    tr = tracking_statistic(path, TeichGeodesic(config.basepoint, lp.xi), A)
    dr = A / 2 if delta_records is None else delta_records
    first = detect_records(table, A, dr, ns=range(record_after + 1, table.n_max + 1), first_only=True)
    recs = detect_records(table, A, dr, ns=record_ns) if record_ns is not None else []
    dp = A / 4 if delta_pairs is None else delta_pairs
    pairs = thin_frame_pairs(path, table, A, dp, grid=pair_grid, max_pairs=max_pairs, seed=index) if max_pairs else []
    return PathReport(index, float(table.a[-1]), lp, recs, first[0].n if first else None, tr, pairs,
                      table.subadditivity_violation, table.a)


def _analyse_job(args):
    config, index, A, kw = args
    return analyse_path(config, index, A, **kw)


def analyse_walk(config: WalkConfig, A: float | None = None, threads: int = 1, **kw):
    """Drift estimate (if not given) and per-path reports for every path of ``config``."""
    drift = None
    if A is None:
        drift = estimate_drift(config, threads=threads)
        A = drift.A_hat
        if drift.near_zero:
            warnings.warn("drift estimate is indistinguishable from zero")
    reports = _map(_analyse_job, [(config, i, A, kw) for i in range(config.paths)], threads)
    return drift, A, reports
