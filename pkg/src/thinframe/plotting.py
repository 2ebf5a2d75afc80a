"""Optional figures for the CLI reports.

Every function takes plain report data (the dictionaries the CLI writes as
JSON, or arrays) and a target path, renders with the non-interactive Agg
backend and returns the path.  PNG metadata is stripped so that identical
data give identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _figure(width: float = 6.0, height: float | None = None):
    height = height or width * (math.sqrt(5) - 1) / 2
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def star_bins(report: dict, path, bound=None) -> Path:
    """Sup of d/a per rho-bin, optionally against a bounding function."""
    bins = [b for b in report["bins"] if b["count"]]
    fig, ax = _figure()
    mids = [(b["rho_lo"] + b["rho_hi"]) / 2 for b in bins]
    ax.plot(mids, [b["sup_d_over_a"] for b in bins], "o-", label="sup d/a")
    if bound is not None:
        r = np.linspace(1e-6, max(b["rho_hi"] for b in report["bins"]), 200)
        ax.plot(r, [bound(x) for x in r], "--", label=report.get("bound", "bound"))
    ax.set_xlabel(r"$\rho$")
    ax.set_ylabel("d / a")
    ax.set_title(f"{report['space']}: {report['samples']} frames")
    ax.legend()
    return _save(fig, path)


def tracking(series: list[np.ndarray], path, label: str = "s(n)") -> Path:
    """Tracking statistic of several paths on log-log axes."""
    fig, ax = _figure()
    for s in series:
        n = np.arange(len(s))
        keep = (n > 0) & (s > 0)
        ax.loglog(n[keep], s[keep], lw=0.6, alpha=0.6)
    ax.set_xlabel("n")
    ax.set_ylabel(label)
    return _save(fig, path)


def drift(series: list[np.ndarray], A: float, path) -> Path:
    """``a(n) / n`` for several paths with the drift estimate as a reference line."""
    fig, ax = _figure()
    for a in series:
        n = np.arange(1, len(a))
        ax.semilogx(n, a[1:] / n, lw=0.6, alpha=0.6)
    ax.axhline(A, color="k", ls="--", label=f"A_hat = {A:.4g}")
    ax.set_xlabel("n")
    ax.set_ylabel("a(n) / n")
    ax.legend()
    return _save(fig, path)


def saddle_lengths(lengths: list[float], path) -> Path:
    """Counting function ``N(L)`` of saddle connections."""
    fig, ax = _figure()
    xs = np.sort(np.asarray(lengths, dtype=float))
    ax.step(xs, np.arange(1, len(xs) + 1), where="post")
    ax.set_xlabel("L")
    ax.set_ylabel("N(L)")
    return _save(fig, path)
