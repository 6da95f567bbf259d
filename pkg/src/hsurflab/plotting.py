"""Standalone SVG figures via matplotlib (Agg backend, reproducible output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {"svg.hashsalt": "hsurflab", "svg.fonttype": "path", "font.size": 9,
      "axes.grid": True, "grid.alpha": 0.3}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_curve(path, points, title: str = "", equal: bool = True) -> Path:
    """Planar curve (flat cylinder cross-section or rotational profile)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        p = np.asarray(points)
        ax.plot(p[:, 0], p[:, 1], lw=1.2)
        ax.plot(p[:1, 0], p[:1, 1], "o", ms=3)
        if equal:
            ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(title)
        return _save(fig, path)


def plot_heights(path, sizes, heights, reference=None, title: str = "") -> Path:
    """Maximum graph height against domain radius."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.plot(sizes, heights, "o-", label="computed")
        if reference is not None:
            ax.plot(sizes, reference, "k--", lw=0.8, label="reference")
            ax.legend(frameon=False)
        ax.set_xlabel("R")
        ax.set_ylabel("max height")
        ax.set_title(title)
        return _save(fig, path)


def plot_field(path, X, Y, F, title: str = "") -> Path:
    """Filled contours of a grid function (NaN outside the domain)."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 4))
        cs = ax.contourf(X, Y, np.ma.masked_invalid(F), levels=20)
        fig.colorbar(cs, ax=ax, shrink=0.8)
        ax.set_aspect("equal")
        ax.set_title(title)
        return _save(fig, path)


def plot_convergence(path, hs, errors, title: str = "") -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 3.2))
        ax.loglog(hs, errors, "o-", label="error")
        hs = np.asarray(hs, dtype=float)
        ax.loglog(hs, errors[0] * (hs / hs[0]) ** 2, "k--", lw=0.8, label="slope 2")
        ax.set_xlabel("h")
        ax.legend(frameon=False)
        ax.set_title(title)
        return _save(fig, path)
