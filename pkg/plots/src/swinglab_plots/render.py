"""Render settling-time heatmaps and distribution figures.

Input is the CSV triple a `swinglab sweep` run leaves behind: `sweep.csv`
(one record per initial condition), `dist.csv` (binned distributions) and
`summary.csv` (scalar statistics). Every number shown in a figure is read
from those files; annotation strings are copied verbatim from summary.csv
so the figures cannot drift from the data.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Patch

# Unreached records (nan settling time). Magenta sits outside viridis, so a
# sentinel cell can never be confused with a long-but-finite time.
SENTINEL_COLOR = "#c51b7d"

_SWEEP_COLUMNS = ("x1_0", "x2_0", "T_x", "T_H")
_SUMMARY_KEYS = ("E_x", "E_H", "t_x_99", "t_H_99")


def _read_columns(path):
    """Return {column name: float array} for a numeric CSV with a header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ValueError(f"{path} has no data rows")
    data = np.asarray(rows)
    return {name: data[:, k] for k, name in enumerate(header)}


def _pivot(x1, x2, values):
    """Arrange per-record values onto the x1 x x2 grid they were swept on."""
    ux1 = np.unique(x1)
    ux2 = np.unique(x2)
    if ux1.size * ux2.size != values.size:
        raise ValueError("sweep records do not fill a rectangular grid")
    grid = np.full((ux2.size, ux1.size), np.nan)
    seen = np.zeros(grid.shape, dtype=bool)
    i = np.searchsorted(ux1, x1)
    j = np.searchsorted(ux2, x2)
    grid[j, i] = values
    seen[j, i] = True
    if not seen.all():
        raise ValueError("sweep records do not fill a rectangular grid")
    return ux1, ux2, grid


def _edges(axis):
    # imshow wants pixel edges; a single-value axis gets unit-width pixels
    step = (axis[-1] - axis[0]) / (axis.size - 1) if axis.size > 1 else 1.0
    return axis[0] - 0.5 * step, axis[-1] + 0.5 * step


def _heatmap(ux1, ux2, grid, label, out_path):
    masked = np.ma.masked_invalid(grid)
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad(SENTINEL_COLOR)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    image = ax.imshow(
        masked,
        origin="lower",
        aspect="auto",
        interpolation="nearest",
        cmap=cmap,
        extent=(*_edges(ux1), *_edges(ux2)),
    )
    fig.colorbar(image, ax=ax, label=f"{label} [s]")
    ax.set_xlabel("x1(0)")
    ax.set_ylabel("x2(0)")
    ax.set_title(f"{label} over the initial-condition grid")
    if masked.mask.any():
        ax.legend(
            handles=[Patch(facecolor=SENTINEL_COLOR, label="not reached")],
            loc="upper right",
            framealpha=0.9,
        )
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_sweep(sweep_csv, out_dir):
    """Write the two settling-time heatmaps; returns their paths."""
    cols = _read_columns(sweep_csv)
    for name in _SWEEP_COLUMNS:
        if name not in cols:
            raise ValueError(f"{sweep_csv} is missing column {name!r}")
    ux1, ux2, grid_x = _pivot(cols["x1_0"], cols["x2_0"], cols["T_x"])
    _, _, grid_h = _pivot(cols["x1_0"], cols["x2_0"], cols["T_H"])
    path_x = _heatmap(ux1, ux2, grid_x, "T_x", os.path.join(out_dir, "t_x_heatmap.png"))
    path_h = _heatmap(ux1, ux2, grid_h, "T_H", os.path.join(out_dir, "t_h_heatmap.png"))
    return path_x, path_h


def _read_summary_row(path):
    with open(path, newline="") as fh:
        row = next(csv.DictReader(fh), None)
    if row is None:
        raise ValueError(f"{path} has no data row")
    missing = [k for k in _SUMMARY_KEYS if k not in row]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    return row


def plot_distributions(dist_csv, summary_csv, out_dir):
    """Write the CDF figure.

    Returns (path, annotations) where annotations maps each summary column
    to the exact string placed on the figure, for byte-level comparison
    against summary.csv.
    """
    cols = _read_columns(dist_csv)
    for name in ("t", "cdf_x", "cdf_H"):
        if name not in cols:
            raise ValueError(f"{dist_csv} is missing column {name!r}")
    summary = _read_summary_row(summary_csv)
    annotations = {key: summary[key] for key in _SUMMARY_KEYS}

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(cols["t"], cols["cdf_x"], label="fraction settled: angle", lw=1.4)
    ax.plot(cols["t"], cols["cdf_H"], label="fraction settled: energy", lw=1.4)
    ax.axhline(0.99, color="0.4", ls=":", lw=0.9)
    for key, color in (("t_x_99", "C0"), ("t_H_99", "C1")):
        value = float(annotations[key])
        if np.isfinite(value):
            ax.axvline(value, color=color, ls="--", lw=0.9)
    ax.text(
        0.98,
        0.05,
        "\n".join(f"{key} = {annotations[key]}" for key in _SUMMARY_KEYS),
        transform=ax.transAxes,
        ha="right",
        va="bottom",
        family="monospace",
        fontsize=8,
        bbox={"boxstyle": "round", "facecolor": "white", "alpha": 0.85},
    )
    ax.set_xlabel("t [s]")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title("Settling-time distributions")
    ax.legend(loc="center right")
    fig.tight_layout()
    out_path = os.path.join(out_dir, "distributions.png")
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path, annotations


def plot_shell_sketch(out_dir, omega=1.0, delta_cap=0.2):
    """Sketch the energy shell and capture band in the phase plane.

    Definitional curves only (energy level sets, the shell half-width
    min(s^2/2, s) scaled by omega^2, and the |psi| <= delta_cap band); no
    simulation output is involved.
    """
    x1 = np.linspace(-2.0 * np.pi, 2.0 * np.pi, 481)
    x2 = np.linspace(-3.2, 3.2, 321)
    mx1, mx2 = np.meshgrid(x1, x2)
    energy = 0.5 * mx2**2 + omega**2 * (1.0 - np.cos(mx1))
    target = 2.0 * omega**2
    half_width = omega**2 * min(0.5 * delta_cap**2, delta_cap)
    psi = np.hypot(1.0 + np.cos(mx1), mx2)

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    filled = ax.contourf(mx1, mx2, energy, levels=14, cmap="cividis", alpha=0.75)
    fig.colorbar(filled, ax=ax, label="H")
    ax.contour(
        mx1,
        mx2,
        energy,
        levels=[target - half_width, target + half_width],
        colors="crimson",
        linewidths=1.1,
    )
    ax.contourf(mx1, mx2, psi, levels=[0.0, delta_cap], colors=["white"], alpha=0.9)
    handles = [
        Patch(edgecolor="crimson", facecolor="none", label="energy shell boundary"),
        Patch(facecolor="white", edgecolor="0.3", label="capture band"),
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=8, framealpha=0.9)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("Energy shell and capture band")
    fig.tight_layout()
    out_path = os.path.join(out_dir, "shell_halfwidth.png")
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_all(csv_dir, out_dir):
    """Render every figure for one sweep directory; returns written paths."""
    sweep = os.path.join(csv_dir, "sweep.csv")
    dist = os.path.join(csv_dir, "dist.csv")
    summary = os.path.join(csv_dir, "summary.csv")
    for path in (sweep, dist, summary):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing {path}")
    os.makedirs(out_dir, exist_ok=True)
    paths = list(plot_sweep(sweep, out_dir))
    cdf_path, _ = plot_distributions(dist, summary, out_dir)
    paths.append(cdf_path)
    paths.append(plot_shell_sketch(out_dir))
    return paths
