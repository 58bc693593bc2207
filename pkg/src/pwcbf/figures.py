"""Report figures rendered to files (no interactive backends).

Comparison runs emit two PNGs next to the CSV/PGM outputs: a panel of the
contrast-matched method images and the lateral intensity profile through
the reference peak.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .display import DisplayImage
from .geometry import ImagingGrid


def _extent_mm(grid: ImagingGrid) -> tuple[float, float, float, float]:
    return (grid.x[0] * 1e3, grid.x[-1] * 1e3, grid.z[-1] * 1e3, grid.z[0] * 1e3)


def save_image_panel(displays: list[tuple[str, DisplayImage]], grid: ImagingGrid,
                     path) -> Path:
    """Grayscale panel of display images, one subplot per method."""
    count = len(displays)
    cols = min(count, 4)
    rows = math.ceil(count / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 3.4 * rows),
                             squeeze=False, constrained_layout=True)
    for ax in axes.ravel():
        ax.set_axis_off()
    for ax, (label, image) in zip(axes.ravel(), displays):
        ax.set_axis_on()
        peak = image.pixels.max()
        ax.imshow(image.pixels, cmap="gray", vmin=0.0, vmax=peak if peak > 0 else 1.0,
                  extent=_extent_mm(grid), aspect="equal")
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("x [mm]")
        ax.set_ylabel("z [mm]")
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_lateral_profiles(displays: list[tuple[str, DisplayImage]], grid: ImagingGrid,
                          z_index: int, path) -> Path:
    """Display amplitude vs lateral position at one depth, all methods overlaid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
    for label, image in displays:
        ax.plot(grid.x * 1e3, image.pixels[z_index], label=label, linewidth=1.2)
    ax.set_xlabel("x [mm]")
    ax.set_ylabel("display amplitude")
    ax.set_title(f"lateral profile at z = {grid.z[z_index] * 1e3:.2f} mm")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
