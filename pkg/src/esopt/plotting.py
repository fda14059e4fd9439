"""Report figures written next to the CSV/JSON output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analytic import MarketParams, call_price  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "svg.hashsalt": "esopt",
}


def figsize(scale=1.0, ratio=None):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    width = 6.0 * scale
    return width, width * (ratio or golden)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectory(points, path, title=None) -> Path:
    """Spot (top) and call/put values (bottom) against scenario time."""
    t = [p.time for p in points]
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=figsize(1.0, 0.8))
        ax1.plot(t, [p.spot for p in points], "o-", color="C0")
        bad = [p for p in points if not p.priceable]
        if bad:
            ax1.plot([p.time for p in bad], [p.spot for p in bad], "x", color="C3",
                     label="unpriceable")
            ax1.legend()
        ax1.set_ylabel("spot S")
        ax2.plot(t, [p.call for p in points], "o-", label="call")
        ax2.plot(t, [p.put for p in points], "s-", label="put")
        ax2.set_xlabel("time (years)")
        ax2.set_ylabel("option value")
        ax2.legend()
        if title:
            ax1.set_title(title)
        return _save(fig, path)


def plot_fd_slice(sol, path, s_range=(0.25, 3.0)) -> Path:
    """Finite-difference call curve over the closed form, with the pointwise error."""
    m: MarketParams = sol.market
    s = sol.spots
    keep = (s >= s_range[0] * m.strike) & (s <= s_range[1] * m.strike)
    s, c = s[keep], sol.calls[keep]
    exact = np.array([call_price(v, m) for v in s])
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=figsize(1.0, 0.8))
        ax1.plot(s, exact, "-", color="0.6", lw=3, label="closed form")
        ax1.plot(s, c, "--", color="C0", label=f"{sol.scheme}")
        ax1.set_ylabel("call C(S)")
        ax1.legend()
        ax2.plot(s, c - exact, color="C3")
        ax2.set_xlabel("spot S")
        ax2.set_ylabel("FD - closed form")
        return _save(fig, path)


def plot_convergence(rows, path) -> Path:
    """Log-log error against grid spacing with a second-order guide line."""
    dx = np.array([r["dx"] for r in rows])
    err = np.array([r["error"] for r in rows])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(0.7, 0.8))
        ax.loglog(dx, err, "o-", label="|error|")
        ax.loglog(dx, err[0] * (dx / dx[0]) ** 2, ":", color="0.5", label="slope 2")
        ax.set_xlabel("dx (dtau halved alongside)")
        ax.set_ylabel("absolute call error")
        ax.legend()
        return _save(fig, path)
