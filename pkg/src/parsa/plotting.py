"""Figures for reports and bench sweeps, rendered to files with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import METRICS, MetricsReport  # noqa: E402

_STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    # fixed metadata keeps repeated renders byte-identical
    "svg.hashsalt": "parsa",
}


def _save(fig, path) -> Path:
    path = Path(path)
    meta = {"Software": None} if path.suffix == ".png" else {"Date": None}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def machine_bars(report: MetricsReport, path) -> Path:
    """Per-machine footprint and traffic side by side."""
    with plt.rc_context(_STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3), sharex=True)
        ids = range(report.k)
        ax0.bar(ids, report.footprint, color="C0")
        ax0.axhline(report.M_max, color="k", lw=0.8, ls="--")
        ax0.set(title="memory footprint |N(U_i)|", xlabel="machine")
        ax1.bar(ids, report.worker_traffic, color="C1", label="worker")
        ax1.bar(ids, report.server_traffic, bottom=report.worker_traffic, color="C2", label="server")
        ax1.axhline(report.T_max, color="k", lw=0.8, ls="--")
        ax1.set(title="traffic", xlabel="machine")
        ax1.legend()
        return _save(fig, path)


def improvement_vs(rows: list[dict], x: str, path, title: str = "") -> Path:
    """Mean improvement over random for each metric against column ``x``.

    ``rows`` are bench records holding ``x`` and ``improvement_<metric>``.
    """
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        xs = sorted({r[x] for r in rows})
        for n, name in enumerate(METRICS):
            ys = []
            for xv in xs:
                vals = [r[f"improvement_{name}"] for r in rows if r[x] == xv]
                ys.append(sum(vals) / len(vals))
            ax.plot(xs, ys, marker="o", color=f"C{n}", label=name)
        ax.set(xlabel=x, ylabel="improvement over random (%)", title=title)
        if len(xs) > 1 and min(xs) > 0 and max(xs) / min(xs) >= 8:
            ax.set_xscale("log", base=2)
        ax.legend()
        return _save(fig, path)


def grid_heatmap(rows: list[dict], path, metric: str = "T_max") -> Path:
    """Improvement for an a/b sweep as an annotated heat map."""
    a_vals = sorted({r["a"] for r in rows})
    b_vals = sorted({r["b"] for r in rows})
    cell = {}
    for r in rows:
        cell.setdefault((r["a"], r["b"]), []).append(r[f"improvement_{metric}"])
    data = [[sum(cell[(a, b)]) / len(cell[(a, b)]) if (a, b) in cell else float("nan")
             for b in b_vals] for a in a_vals]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(1 + 0.8 * len(b_vals), 1 + 0.6 * len(a_vals)))
        ax.grid(False)
        im = ax.imshow(data, cmap="viridis", aspect="auto", origin="lower")
        ax.set_xticks(range(len(b_vals)), [str(b) for b in b_vals])
        ax.set_yticks(range(len(a_vals)), [str(a) for a in a_vals])
        ax.set(xlabel="b", ylabel="a", title=f"{metric} improvement (%)")
        for i, row in enumerate(data):
            for j, val in enumerate(row):
                ax.text(j, i, f"{val:.0f}", ha="center", va="center", color="w", fontsize=8)
        fig.colorbar(im, ax=ax)
        return _save(fig, path)
