"""Figures for the bench and verify-hard reports.

Figures are written as PNG files with the non-interactive Agg backend.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0

STYLE = {
    "font.size": 9,
    "font.family": "serif",
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _figure(width: float = 4.5):
    return plt.subplots(figsize=(width, width * GOLDEN))


def _as_float(v) -> float:
    return float(Fraction(v))


def plot_bench(summary: dict, path: str) -> str:
    """Median wall time against m on log-log axes, with an m log m guide
    anchored at the smallest size."""
    ms = [row["m"] for row in summary["medians"]]
    ts = [row["median_time"] for row in summary["medians"]]
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax.loglog(ms, ts, "o-", color="C0", label=f"{summary['algo']} (median)")
        if ms and ms[0] > 1:
            ref = [ts[0] * (m * math.log(m)) / (ms[0] * math.log(ms[0])) for m in ms]
            ax.loglog(ms, ref, "--", color="0.5", label="m log m")
        ax.set_xlabel("items m")
        ax.set_ylabel("seconds")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_probability_window(report: dict, path: str) -> str:
    """Exact p5/p6 ranges over all ex-ante PROP lotteries against the
    analytic window, one row per grid point."""
    rows = report.get("grid") or []
    if not rows:
        window = next(r for r in report["reports"] if r["check"] == "probability-window")
        params = report["params"]
        rows = [
            {
                "delta": params["delta"],
                "eps": params["eps"],
                "projections": window["projections"],
                "bounds": window["bounds"],
            }
        ]
    with plt.rc_context(STYLE):
        fig, ax = _figure(5.5)
        fig.set_figheight(max(1.6, 0.45 * len(rows) + 1.0))
        labels = []
        for y, row in enumerate(rows):
            lo, hi = (_as_float(v) for v in row["bounds"])
            ax.plot([lo, hi], [y, y], color="0.75", lw=6, solid_capstyle="butt",
                    label="analytic window" if y == 0 else None)
            for off, (name, color) in zip((-0.15, 0.15), (("p5", "C0"), ("p6", "C1"))):
                rng = row["projections"].get(name)
                if rng is None:
                    continue
                a, b = (_as_float(v) for v in rng)
                ax.plot([a, b], [y + off, y + off], "|-", color=color,
                        label=f"{name} range" if y == 0 else None)
            labels.append(f"δ={row['delta']}, ε={row['eps']}")
        ax.set_yticks(range(len(rows)))
        ax.set_yticklabels(labels)
        ax.set_ylim(len(rows) - 0.5, -0.5)
        ax.set_xlabel("probability")
        ax.legend(loc="lower right")
        fig.savefig(path)
        plt.close(fig)
    return path


def write_figures(kind: str, report: dict, directory: str) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    if kind == "bench":
        return [plot_bench(report, os.path.join(directory, f"bench_{report['algo']}.png"))]
    if kind == "verify-hard":
        return [plot_probability_window(report, os.path.join(directory, "probability_window.png"))]
    raise ValueError(f"no figures for report kind {kind!r}")
