"""
Figure rendering for CLI reports.

Each function takes the same columns that go into the CSV file and writes a
PNG. The non-interactive Agg backend is used so this works headless.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_curve", "plot_trajectory"]

_STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def plot_curve(path, x, series: dict, xlabel: str, ylabel: str, logx: bool = False,
               logy: bool = False, title: str | None = None) -> None:
    """Line plot of one or more named series against ``x``.

    Missing points (NaN) are left as gaps in the line.
    """
    x = np.asarray(x, dtype=float)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, y in series.items():
            ax.plot(x, np.asarray(y, dtype=float), marker=".", ms=3, lw=1, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_trajectory(path, displacements, title: str | None = None) -> None:
    """Phase-space path ``(Re alpha, Im alpha)`` with start and end marked."""
    z = np.asarray(displacements, dtype=complex)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        ax.plot(z.real, z.imag, lw=1)
        ax.plot(z.real[0], z.imag[0], "o", ms=4, label="start")
        ax.plot(z.real[-1], z.imag[-1], "x", ms=6, label="end")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel(r"Re $\alpha$ (s)")
        ax.set_ylabel(r"Im $\alpha$ (s)")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
