"""Figures written next to the bench and metrics reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_bench(report, path) -> Path:
    """Cumulative time / frame rate per stage, and point-cloud density per stage."""
    stages = report.stages
    names = [s.stage for s in stages]
    with plt.rc_context(RC):
        fig, (ax_t, ax_p) = plt.subplots(1, 2, figsize=(9, 3.2))
        ax_t.bar(names, [s.cumulative_ms for s in stages], color="#4c72b0")
        for i, s in enumerate(stages):
            ax_t.annotate(f"{s.fps:.3g} fps", (i, s.cumulative_ms), ha="center", va="bottom", fontsize=7)
        ax_t.set_ylabel("cumulative time (ms)")
        ax_t.set_title(f"median of {report.repetitions} runs")
        ax_t.tick_params(axis="x", rotation=35)

        with_points = [s for s in stages if s.points is not None]
        ax_p.bar([s.stage for s in with_points], [max(s.points, 1) for s in with_points], color="#55a868")
        for i, s in enumerate(with_points):
            ax_p.annotate(f"{s.points:,}", (i, max(s.points, 1)), ha="center", va="bottom", fontsize=7)
        ax_p.set_yscale("log")
        ax_p.set_ylabel("points")
        ax_p.set_title("point-cloud density")
        ax_p.tick_params(axis="x", rotation=35)
        fig.tight_layout()
        return _save(fig, path)


def plot_metrics(summary: dict, path) -> Path:
    """Mean ± std bar chart per metric, MAD printed above each bar.

    ``summary`` maps metric name to a ``MetricSummary``.
    """
    names = list(summary)
    means = [summary[n].mean for n in names]
    stds = [summary[n].std for n in names]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.5, 3.2))
        ax.bar(names, means, yerr=stds, capsize=3, color="#8172b2", ecolor="black")
        for i, n in enumerate(names):
            ax.annotate(f"MAD {summary[n].mad:.4f}", (i, min(means[i] + stds[i], 1.05)),
                        ha="center", va="bottom", fontsize=7)
        ax.set_ylim(0, 1.15)
        ax.set_ylabel("score")
        ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        return _save(fig, path)
