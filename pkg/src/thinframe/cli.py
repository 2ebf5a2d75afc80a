"""Command-line interface: ``thinframe <command> ...``.

Every report is a JSON document with an embedded run manifest; sequences
are written as CSV next to it when ``--out`` is given.  Identical command
lines give byte-identical files (wall-clock timing is only recorded with
``--timing``).  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from . import flat_surface as fs
from . import iet as iet_mod
from . import metric_core as mc
from . import random_walk as rw
from . import torus_teich as tt

COMMANDS = ("triangles", "surface", "iet", "torus", "walk")

# Minimal published schemas: the keys every report of a command carries.
_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "config_digest", "seed", "versions", "outputs"],
    "properties": {
        "command": {"type": "string"},
        "config_digest": {"type": "string"},
        "seed": {"type": "integer"},
        "versions": {"type": "object"},
        "outputs": {"type": "array", "items": {"type": "string"}},
    },
}


def _schema(*required: str) -> dict:
    return {"type": "object", "required": ["manifest", *required],
            "properties": {"manifest": _MANIFEST_SCHEMA}}


SCHEMAS = {
    "triangles": _schema("report"),
    "surface": _schema("surface"),
    "iet": _schema("result"),
    "torus": _schema("result"),
    "walk": _schema("summary"),
}


class DomainError(Exception):
    pass


# ---------------------------------------------------------------------------
# plumbing


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy and Fraction values plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float, mpmath.mpf)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


class Run:
    """Collects outputs of one command and writes them with the manifest."""

    def __init__(self, args, command: str, config_text: str = ""):
        self.args = args
        self.command = command
        self.out = Path(args.out) if args.out else None
        self.outputs: list[str] = []
        self.start = time.perf_counter()
        payload = {k: v for k, v in sorted(vars(args).items())
                   if k not in ("out", "progress", "threads", "timing", "func", "plot")}
        blob = json.dumps(_clean(payload), sort_keys=True) + "\n" + config_text
        self.digest = hashlib.sha256(blob.encode()).hexdigest()
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def progress(self, msg: str) -> None:
        if self.args.progress:
            print(f"[{self.command}] {msg}", file=sys.stderr, flush=True)

    def write_text(self, name: str, text: str) -> None:
        if self.out:
            (self.out / name).write_text(text)
            self.outputs.append(name)

    def write_csv(self, name: str, header, rows) -> None:
        if not self.out:
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        self.write_text(name, buf.getvalue())

    def plot(self, name: str, fn, *a, **kw) -> None:
        if self.args.plot and self.out:
            fn(*a, self.out / name, **kw)
            self.outputs.append(name)

    def manifest(self, seed: int) -> dict:
        m = {
            "command": self.command,
            "config_digest": self.digest,
            "seed": int(seed),
            "versions": {"thinframe": __version__, "numpy": np.__version__,
                         "mpmath": mpmath.__version__, "python": platform.python_version()},
            "outputs": sorted(self.outputs + ([f"{self.command}.json"] if self.out else [])),
        }
        if self.args.timing:
            m["timing_s"] = round(time.perf_counter() - self.start, 3)
        return m

    def finish(self, seed: int, body: dict) -> int:
        doc = {"manifest": self.manifest(seed), **body}
        text = _dumps(doc)
        self.write_text(f"{self.command}.json", text)
        sys.stdout.write(text)
        return 0


def _parse_complex(s: str) -> complex:
    t = s.strip().replace(" ", "").replace("I", "i")
    if t in ("inf", "infinity"):
        raise argparse.ArgumentTypeError("expected a point of the upper half-plane")
    t = t.replace("i", "j")
    if t.endswith("j") and (t == "j" or t[-2] in "+-"):
        t = t[:-1] + "1j"
    try:
        z = complex(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex number {s!r}") from None
    return z


def _parse_pair(s: str) -> tuple[int, int]:
    t = s.strip().strip("()[]")
    try:
        p, q = (int(x) for x in t.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a pair like (1,2), got {s!r}") from None
    return p, q


def _parse_direction(s: str):
    if s in ("horizontal", "vertical", "inf"):
        return tt.INF if s == "inf" else s
    try:
        return float(Fraction(s))
    except ValueError:
        return _parse_complex(s)


def _parse_list(s: str) -> list:
    return [x.strip() for x in s.split(",") if x.strip()]


def _number(s: str):
    try:
        return Fraction(s)
    except ValueError:
        return float(s)


# ---------------------------------------------------------------------------
# triangles


def cmd_triangles(args) -> int:
    run = Run(args, "triangles")
    if args.family == "theta":
        if args.space != "sphere":
            raise DomainError("the theta family lives on the sphere")
        thetas = np.linspace(math.pi / 2, 0.01, args.samples)
        frames = mc.sphere_family(thetas)
    else:
        run.progress(f"sampling {args.samples} frames in {args.space}")
        frames = mc.sample_frames(args.space, args.samples, args.seed, min_side=args.min_side)
    if args.bound == "none":
        report = mc.StarReport(frames[0].space_tag, "none", len(frames), mc._empty_bins(args.bins))
        for fr in frames:
            if fr.a != 0:
                mc._accumulate(report, fr, args.bins)
    else:
        report = mc.check_star(frames, args.bound, bins=args.bins, k=args.k)
    report.extras["sup_d_minus_defect"] = max(float(f.d - f.defect) for f in frames)
    report.extras["min_lower_slack"] = min(float(f.d - f.defect / 2) for f in frames)
    data = report.to_dict()
    data["violation_count"] = len(report.violations)
    data["violations"] = data["violations"][:50]
    run.write_csv("triangles_bins.csv", ["rho_lo", "rho_hi", "count", "sup_d_over_a"],
                  [(b.rho_lo, b.rho_hi, b.count, b.sup_d_over_a) for b in report.bins])
    bound = None if args.bound == "none" else mc.make_bound(args.bound, args.k)
    from . import plotting
    run.plot("triangles.png", plotting.star_bins, data, bound=bound)
    return run.finish(args.seed, {"report": data})


# ---------------------------------------------------------------------------
# surface

BUILTINS = {
    "square_torus": fs.square_torus,
    "golden_torus": fs.golden_sheared_torus,
    "l_shape": fs.l_shaped_surface,
    "pillowcase": fs.pillowcase,
}


def _load_surface(src: str):
    if src.startswith("builtin:"):
        name = src.split(":", 1)[1]
        if name not in BUILTINS:
            raise DomainError(f"unknown builtin surface {name!r}; choose from {sorted(BUILTINS)}")
        return BUILTINS[name](), name
    text = Path(src).read_text()
    try:
        return fs.surface_from_json(text), text
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise DomainError(f"malformed surface file: {e}") from None


def cmd_surface(args) -> int:
    surf, text = _load_surface(args.source)
    run = Run(args, "surface", text)
    body = {"surface": surf.summary()}
    if args.saddles:
        L = _number(args.length)
        run.progress(f"enumerating saddle connections up to length {L}")
        sc = fs.enumerate_saddle_connections(surf, L)
        rows = sorted((float(s.length), s.h, s.v, s.start, s.end) for s in sc)
        body["saddle_connections"] = {"L": float(L), "count": len(sc)}
        run.write_csv("saddles.csv", ["length", "h", "v", "start", "end"], rows)
        from . import plotting
        run.plot("saddles.png", plotting.saddle_lengths, [r[0] for r in rows])
    if args.cylinders:
        L = _number(args.length)
        cyl = fs.enumerate_cylinders(surf, L)
        body["cylinders"] = {"L": float(L), "count": len(cyl),
                             "items": [{"circumference": c.circumference.to_dict(), "height": float(c.height),
                                        "area": float(c.area)}
                                       for c in cyl]}
    if args.decompose:
        dec = fs.direction_decomposition(surf, tuple(_number(x) for x in args.direction))
        body["decomposition"] = dec.to_dict()
    if args.intersect:
        a, b = args.intersect
        if surf.genus != 1:
            raise DomainError("--intersect takes lattice classes and needs a torus")
        ca = fs.torus_line(surf, *a)
        cb = fs.torus_line(surf, *b, base=(Fraction(1, 3) + Fraction(1, 7919), Fraction(1, 5) + Fraction(1, 7907)))
        i = fs.intersection_number(ca, cb)
        body["intersection"] = {"alpha": list(a), "beta": list(b), "i": i,
                                "determinant": abs(a[0] * b[1] - a[1] * b[0])}
        if args.epsilon is not None:
            body["intersection"]["thick_bound"] = fs.check_thick_intersection_bound(
                surf, args.epsilon, ca, cb).to_dict()
    if args.systole:
        body["systole"] = float(fs.systole(surf))
    return run.finish(args.seed, body)


# ---------------------------------------------------------------------------
# iet


def _build(args):
    if args.lengths == "golden":
        perm = _parse_list(args.perm) if args.perm else ["2", "1"]
        T = iet_mod.build_iet("golden", perm)
    else:
        lengths = [_number(x) for x in _parse_list(args.lengths)]
        perm = _parse_list(args.perm) if args.perm else [str(k) for k in range(len(lengths), 0, -1)]
        T = iet_mod.build_iet(lengths, perm)
    heights = [_number(x) for x in _parse_list(args.heights)] if args.heights else [1] * T.k
    if not T.exact:
        heights = [float(h) for h in heights]
    return T, heights


def cmd_iet(args) -> int:
    run = Run(args, "iet")
    T, heights = _build(args)
    body = {"iet": T.to_dict()}
    if args.action == "tall":
        run.progress(f"building a section with rectangles taller than {args.H}")
        H = _number(args.H) if T.exact else float(_number(args.H))
        cert = iet_mod.tall_section(iet_mod.Suspension(T, heights), H,
                                    samples=args.samples, seed=args.seed, cap_factor=args.cap_factor)
        body["result"] = cert.to_dict()
    elif args.action == "keane":
        body["result"] = iet_mod.keane_check(T, args.depth).to_dict()
    else:
        section = None
        if args.section:
            section = _number(args.section) if T.exact else float(_number(args.section))
        zr = iet_mod.first_return(iet_mod.Suspension(T, heights), section)
        body["result"] = zr.to_dict()
    return run.finish(args.seed, body)


# ---------------------------------------------------------------------------
# torus


def cmd_torus(args) -> int:
    run = Run(args, "torus")
    if args.action == "dist":
        ks = tt.kerckhoff_scan(args.tau1, args.tau2, args.bound)
        res = {"distance": tt.teich_distance(args.tau1, args.tau2), "kerckhoff": ks.to_dict()}
    elif args.action == "systole":
        s = tt.systole(args.tau)
        res = {"tau": args.tau, "systole": s, "reduced": complex(tt.reduce_point(args.tau)),
               "thick": s >= args.epsilon, "epsilon": args.epsilon}
    elif args.action == "families":
        res = tt.curve_families(args.tau, _parse_direction(args.direction), args.R, c=args.c).to_dict()
    else:
        res = tt.curve_family_replay(args.x, args.y, args.z, args.R, args.epsilon, args.M)
    return run.finish(args.seed, {"result": res})


# ---------------------------------------------------------------------------
# walk


def cmd_walk(args) -> int:
    text = Path(args.config).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"malformed walk config: {e}") from None
    if args.seed_given:
        data["seed"] = args.seed
    try:
        config = rw.WalkConfig.from_dict(data)
    except KeyError as e:
        raise DomainError(f"walk config is missing {e}") from None
    run = Run(args, "walk", text)
    run.progress(f"estimating drift over {config.paths} paths of {config.steps} steps")
    if config.paths >= 2:
        drift = rw.estimate_drift(config, threads=args.threads)
    else:
        drift = rw.drift_from_finals([rw.matrix_distance(rw.sample_path(config, 0).final)], config.steps)
    summary = {"A_hat": drift.A_hat, "half_split": drift.half_split if config.paths >= 2 else None,
               "drift": drift.to_dict(), "config": config.to_dict(),
               "non_elementary": config.non_elementary}
    if args.action == "drift":
        return run.finish(config.seed, {"summary": summary})
    A = drift.A_hat
    if A <= 0 or drift.near_zero:
        summary["warning"] = "drift indistinguishable from zero: tracking and records skipped"
        return run.finish(config.seed, {"summary": summary})
    ns = range(1, config.steps + 1, args.record_stride)
    kw = dict(delta_records=A * args.delta_records, delta_pairs=A * args.delta_pairs,
              record_ns=ns, max_pairs=args.max_pairs)
    run.progress("analysing paths")
    _, _, reports = rw.analyse_walk(config, A=A, threads=args.threads, **kw)
    tested = len(ns)
    pooled = {}
    for rep in reports:
        run.write_csv(f"walk_path_{rep.index:04d}.csv", ["n", "a_n", "s_n", "chi_K", "record_flag"], rep.rows())
        for key, _ in rep.tracking.dyadic_medians().items():
            lo, hi = (int(x) for x in key.split("-"))
            pooled.setdefault(key, []).append(rep.tracking.s[lo:hi + 1])
    summary["record_density"] = float(np.mean([len(r.records) / tested for r in reports]))
    summary["tracking_medians"] = [
        {"lo": int(k.split("-")[0]), "hi": int(k.split("-")[1]), "median": float(np.median(np.concatenate(v)))}
        for k, v in sorted(pooled.items(), key=lambda kv: int(kv[0].split("-")[0]))]
    pairs = [p for r in reports for p in r.pairs]
    summary["thin_frames"] = {
        "pairs": len(pairs),
        "thick": sum(p.w_thick for p in pairs),
        "empirical_k": rw.empirical_slope(pairs),
        "sup_d_minus_defect": max((p.frame.d - p.frame.defect for p in pairs if p.w_thick), default=None),
        "proximity_ok_fraction": (sum(p.proximity_ok for p in pairs) / len(pairs)) if pairs else None,
    }
    summary["paths"] = [{"index": r.index, "a_final": r.a_final, "limit": r.limit.to_dict(),
                         "first_record_after_1000": r.first_record_after,
                         "records": len(r.records),
                         "subadditivity_violation": r.subadditivity_violation} for r in reports]
    from . import plotting
    run.plot("walk_tracking.png", plotting.tracking, [r.tracking.s for r in reports])
    run.plot("walk_drift.png", plotting.drift, [r.a for r in reports], A)
    return run.finish(config.seed, {"summary": summary})


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    def flags(suppress: bool) -> argparse.ArgumentParser:
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--seed", type=int, default=d(None), help="master seed (default 0)")
        g.add_argument("--out", default=d(None), help="directory for JSON/CSV/PNG outputs")
        g.add_argument("--threads", type=int, default=d(1), help="worker processes for batch runs")
        g.add_argument("--progress", action="store_true", default=d(False), help="status lines on standard error")
        g.add_argument("--plot", action="store_true", default=d(False), help="also render PNG figures into --out")
        g.add_argument("--timing", action="store_true", default=d(False),
                       help="record wall-clock time in the manifest")
        return g

    common = flags(True)

    p = argparse.ArgumentParser(prog="thinframe", parents=[flags(False)],
                                description="Thin-frame triangles, flat surfaces and random walks.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("triangles", parents=[common], help="test the thin-frame condition on model spaces")
    t.add_argument("--space", choices=["tripod", "euclidean", "hyperbolic", "sphere"], required=True)
    t.add_argument("--samples", type=int, default=10000)
    t.add_argument("--bound", choices=["linear", "linear_k", "sqrt2t", "none"], default="linear")
    t.add_argument("--k", type=float, default=1.0)
    t.add_argument("--bins", type=int, default=10)
    t.add_argument("--min-side", type=float, default=0.0)
    t.add_argument("--family", choices=["theta"], default=None)
    t.set_defaults(func=cmd_triangles)

    s = sub.add_parser("surface", parents=[common], help="flat-surface reports")
    s.add_argument("source", help="surface JSON file or builtin:<name>")
    s.add_argument("--saddles", action="store_true")
    s.add_argument("--cylinders", action="store_true")
    s.add_argument("--length", default="10")
    s.add_argument("--decompose", action="store_true")
    s.add_argument("--direction", nargs=2, default=["0", "1"])
    s.add_argument("--intersect", nargs=2, type=_parse_pair)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--systole", action="store_true")
    s.set_defaults(func=cmd_surface)

    i = sub.add_parser("iet", parents=[common], help="interval exchanges and zippered rectangles")
    i.add_argument("action", choices=["tall", "keane", "return"])
    i.add_argument("--lengths", default="golden", help="'golden' or comma-separated lengths")
    i.add_argument("--perm", default=None, help="comma-separated 1-based positions after exchange")
    i.add_argument("--heights", default=None)
    i.add_argument("--H", default="10")
    i.add_argument("--samples", type=int, default=1000)
    i.add_argument("--cap-factor", type=float, default=2.0)
    i.add_argument("--depth", type=int, default=10000)
    i.add_argument("--section", default=None)
    i.set_defaults(func=cmd_iet)

    o = sub.add_parser("torus", parents=[common], help="genus-one Teichmuller space")
    o.add_argument("action", choices=["dist", "systole", "families", "replay"])
    o.add_argument("--tau1", type=_parse_complex, default=1j)
    o.add_argument("--tau2", type=_parse_complex, default=2j)
    o.add_argument("--bound", type=int, default=50)
    o.add_argument("--tau", type=_parse_complex, default=1j)
    o.add_argument("--epsilon", type=float, default=0.5)
    o.add_argument("--direction", default="horizontal")
    o.add_argument("--R", type=float, default=3.0)
    o.add_argument("--c", type=float, default=None)
    o.add_argument("--x", type=_parse_complex, default=1j)
    o.add_argument("--y", type=_parse_complex, default=0.3 + 1.2j)
    o.add_argument("--z", type=_parse_complex, default=2 + 1.5j)
    o.add_argument("--M", type=float, default=0.0)
    o.set_defaults(func=cmd_torus)

    w = sub.add_parser("walk", parents=[common], help="random walks by mapping classes")
    w.add_argument("action", choices=["run", "drift"])
    w.add_argument("--config", required=True)
    w.add_argument("--record-stride", type=int, default=1)
    w.add_argument("--delta-records", type=float, default=0.5, help="delta as a fraction of A_hat")
    w.add_argument("--delta-pairs", type=float, default=0.25, help="delta as a fraction of A_hat")
    w.add_argument("--max-pairs", type=int, default=50)
    w.set_defaults(func=cmd_walk)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.plot and not args.out:
        parser.error("--plot needs --out")
    try:
        return args.func(args)
    except (DomainError, ValueError, RuntimeError, FileNotFoundError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
