"""Deterministic SVG figure output for contour snapshots.

All figures render through matplotlib's SVG backend with a pinned hash salt
and no date metadata, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams["svg.hashsalt"] = "contourdyn"
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt

from .geometry import PatchContour, VortexRegion, VortexSystem
from .oracles import region_contour_points
from .quadrature import TWO_PI


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_contours(system: VortexSystem, levels_per_region, path, title: str | None = None):
    """Closed level curves of every region, colored by vorticity sign.

    ``levels_per_region``: list (per region) of level values to draw.
    """
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for reg, levels in zip(system.regions, levels_per_region):
        color = "tab:red" if reg.sign > 0 else "tab:blue"
        for w in levels:
            pts = region_contour_points(reg, float(w), n_pts=256)
            closed = np.vstack([pts, pts[:1]])
            ax.plot(closed[:, 0], closed[:, 1], color=color, lw=0.9,
                    label="w=%.3g" % w)
        ax.plot([reg.center[0]], [reg.center[1]], marker="+", color=color, ms=6)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    handles, labels = ax.get_legend_handles_labels()
    if len(labels) <= 12:
        ax.legend(fontsize=7, loc="upper right")
    _save(fig, path)


def plot_patch(patch: PatchContour, path, reference: PatchContour | None = None,
               title: str | None = None):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    phi = np.linspace(0.0, TWO_PI, patch.n_phi + 1)
    rho = np.append(patch.rho, patch.rho[0])
    ax.plot(patch.pole[0] + rho * np.cos(phi), patch.pole[1] + rho * np.sin(phi),
            color="tab:red", lw=1.2, label="patch")
    if reference is not None:
        rr = np.append(reference.rho, reference.rho[0])
        ax.plot(reference.pole[0] + rr * np.cos(phi), reference.pole[1] + rr * np.sin(phi),
                color="k", lw=0.8, ls="--", label="reference")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_point_sets(point_sets, labels, path, title: str | None = None):
    """Generic polyline plot (satellite spirals, extracted grid contours)."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for pts, label in zip(point_sets, labels):
        ax.plot(pts[:, 0], pts[:, 1], lw=0.8, label=label)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    if labels and len(labels) <= 10:
        ax.legend(fontsize=7)
    _save(fig, path)
