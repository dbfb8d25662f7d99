"""Figure rendering for balance reports.

Renders the difficulty curve (with spike annotations) and the per-version
chance indices to PNG files next to the delimited outputs, using the Agg
backend so no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analyze import BalanceReport


def difficulty_figure(report: BalanceReport, path) -> Path:
    """Mean score per version with flagged spikes marked."""
    path = Path(path)
    versions = list(report.curve.versions)
    means = list(report.curve.means)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(versions, means, marker="o", color="#2b6cb0", label="mean score")
    for spike in report.spikes:
        i = versions.index(spike.version)
        color = "#c53030" if spike.direction == "harder" else "#2f855a"
        ax.annotate(
            f"{spike.direction}\n{spike.magnitude:.2f}",
            xy=(versions[i], means[i]),
            xytext=(0, 18 if spike.direction == "easier" else -28),
            textcoords="offset points",
            ha="center",
            fontsize=8,
            color=color,
        )
        ax.plot([versions[i]], [means[i]], marker="o", color=color, markersize=9)
    ax.set_xlabel("game version")
    ax.set_ylabel("mean score (skill-bearing players)")
    ax.set_title(f"{report.game}: difficulty curve")
    ax.set_xticks(versions)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def chance_figure(report: BalanceReport, path) -> Path:
    """Chance index per version against the classification threshold."""
    path = Path(path)
    versions = [c.version for c in report.chances]
    indices = [c.chance_index for c in report.chances]
    colors = [
        "#c53030" if c.classification == "chance" else "#2f855a"
        for c in report.chances
    ]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(v) for v in versions], indices, color=colors)
    ax.axhline(
        report.chance_threshold, linestyle="--", color="#4a5568",
        label=f"threshold {report.chance_threshold}",
    )
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("game version")
    ax.set_ylabel("chance index")
    ax.set_title(f"{report.game}: skill vs chance")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(report: BalanceReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [difficulty_figure(report, out / f"{report.game}-difficulty.png")]
    if report.chances:
        paths.append(chance_figure(report, out / f"{report.game}-chance.png"))
    return paths
