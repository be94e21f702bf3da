"""Figures written next to the CSV outputs of the command-line tool."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "font.size": 11,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "polaron-dyn",
})


def line_figure(path, x, series: dict, xlabel: str, ylabel: str, title: str = "",
                logy: bool = False, markers: bool = False):
    """One axes, one line per entry of ``series``; saved as SVG (or by suffix)."""
    fig, ax = plt.subplots()
    for label, y in series.items():
        ax.plot(x, y, label=label, marker="o" if markers else None, markersize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if logy:
        ax.set_yscale("log")
    if len(series) > 1:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path
