"""Optional matplotlib figures rendered next to the CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def geodesic_arc(a, b, n: int = 200) -> np.ndarray:
    """Points of the Poincare-disc geodesic joining two ideal points a and b."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    dot = float(a @ b)
    if abs(1.0 + dot) < 1e-9:
        return np.linspace(a, b, n)
    centre = (a + b) / (1.0 + dot)
    radius = math.sqrt(max(centre @ centre - 1.0, 0.0))
    start = math.atan2(*(a - centre)[::-1])
    stop = math.atan2(*(b - centre)[::-1])
    sweep = (stop - start + math.pi) % (2 * math.pi) - math.pi
    ang = start + np.linspace(0.0, sweep, n)
    return centre + radius * np.column_stack([np.cos(ang), np.sin(ang)])


def plot_disc(chords, r: float, path, title: str | None = None) -> Path:
    """chords: iterable of (a, b) endpoint pairs. Draws the lines and the window B_r."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    theta = np.linspace(0, 2 * math.pi, 400)
    ax.plot(np.cos(theta), np.sin(theta), color="black", lw=0.8)
    rad = math.tanh(r / 2)
    ax.plot(rad * np.cos(theta), rad * np.sin(theta), color="tab:red", lw=0.8, ls="--")
    for a, b in chords:
        pts = geodesic_arc(a, b)
        ax.plot(pts[:, 0], pts[:, 1], color="tab:blue", lw=0.6)
    ax.set_aspect("equal")
    ax.set_xlim(-1.02, 1.02)
    ax.set_ylim(-1.02, 1.02)
    ax.axis("off")
    if title:
        ax.set_title(title)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_kfunction(r, k_exact, g_exact, path, k_emp=None, k_se=None) -> Path:
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(r, k_exact, label="closed form")
    if k_emp is not None:
        ax1.errorbar(r, k_emp, yerr=None if k_se is None else 2 * np.asarray(k_se), fmt="o", ms=3, label="simulation")
    ax1.set_xlabel("r")
    ax1.set_ylabel("K(r)")
    ax1.legend(frameon=False)
    ax2.plot(r, g_exact)
    ax2.axhline(1.0, color="grey", lw=0.6, ls=":")
    ax2.set_xlabel("r")
    ax2.set_ylabel("g(r)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
