"""Display mapping, contrast matching, image quality metrics, PGM export.

Beamformer outputs live on wildly different scales, so displays are always
normalised: a complex field B maps to I = |B| ** gamma, and comparisons
across methods hold the global speckle contrast K = sd(I) / mean(I) fixed
by solving for the gamma that reproduces a reference contrast (population
standard deviation throughout).  K is strictly increasing in gamma for any
image with at least two distinct non-zero magnitudes, which makes the
bisection below safe.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ImagingGrid

GAMMA_REFERENCE_DEFAULT = 0.25

# CSV column order of the per-method quality reports.
REPORT_FIELDS = ("algorithm", "gamma", "contrast_K", "peak_x_m", "peak_z_m",
                 "fwhm_x_m", "fwhm_z_m", "background_mean", "elapsed_s")


@dataclass
class DisplayImage:
    """Non-negative display pixels, depth-major (nz, nx)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2:
            raise ValueError("display image must be 2-D")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("display image contains non-finite pixels")
        if np.any(self.pixels < 0):
            raise ValueError("display image contains negative pixels")


@dataclass
class QualityReport:
    """Per-method image metrics, one CSV row of a comparison report."""

    algorithm: str
    gamma: float
    contrast_k: float
    peak_x: float
    peak_z: float
    fwhm_x: float
    fwhm_z: float
    background_mean: float
    elapsed: float
    has_peak: bool = True
    fwhm_x_flagged: bool = False
    fwhm_z_flagged: bool = False

    def csv_row(self) -> list[str]:
        return [
            self.algorithm,
            f"{self.gamma:.8g}",
            f"{self.contrast_k:.10g}",
            f"{self.peak_x:.10g}",
            f"{self.peak_z:.10g}",
            f"{self.fwhm_x:.10g}",
            f"{self.fwhm_z:.10g}",
            f"{self.background_mean:.10g}",
            f"{self.elapsed:.6f}",
        ]


def _magnitude(source) -> np.ndarray:
    """Envelope |B| of a BeamformedImage, complex array, or DisplayImage."""
    if isinstance(source, DisplayImage):
        return source.pixels
    field = getattr(source, "field", source)
    return np.abs(np.asarray(field))


def gamma_compress(source, gamma: float) -> DisplayImage:
    """Map a complex field to display pixels |B| ** gamma."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError("gamma must be finite and positive")
    return DisplayImage(_magnitude(source) ** gamma)


def contrast(image: DisplayImage | np.ndarray) -> float:
    """Global speckle contrast K = sd / mean (population sd)."""
    pixels = image.pixels if isinstance(image, DisplayImage) else np.asarray(image)
    if pixels.size < 2:
        raise ValueError("contrast needs at least two pixels")
    mean = pixels.mean()
    if mean == 0.0:
        raise ValueError("degenerate image")
    return float(pixels.std() / mean)


def match_contrast(source, k_ref: float, gamma_bounds: tuple[float, float] = (0.01, 3.0),
                   tol: float = 1e-4) -> tuple[float, DisplayImage]:
    """Find gamma so that the displayed contrast equals `k_ref`.

    Bisection over `gamma_bounds`; the bracket is shrunk to 1e-6 so the
    returned gamma is well resolved, then the contrast itself is required
    to sit within `tol` of the target.  Raises ValueError when the target
    lies outside the achievable contrast range.
    """
    envelope = _magnitude(source)

    def k_at(gamma: float) -> float:
        return contrast(envelope ** gamma)

    lo, hi = gamma_bounds
    if not (0 < lo < hi):
        raise ValueError("gamma_bounds must satisfy 0 < lo < hi")
    k_lo = k_at(lo)
    k_hi = k_at(hi)
    if not (k_lo <= k_ref <= k_hi):
        raise ValueError(
            f"target contrast {k_ref:.6g} outside achievable range [{k_lo:.6g}, {k_hi:.6g}]")

    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if k_at(mid) < k_ref:
            lo = mid
        else:
            hi = mid
    gamma = 0.5 * (lo + hi)
    if abs(k_at(gamma) - k_ref) > tol:
        raise ValueError("contrast match did not converge within tolerance")
    return gamma, DisplayImage(envelope ** gamma)


def _window_indices(coords: np.ndarray, lo: float, hi: float) -> np.ndarray:
    idx = np.nonzero((coords >= lo) & (coords <= hi))[0]
    if idx.size == 0:
        raise ValueError("window selects no pixels")
    return idx


def _half_crossings(coords: np.ndarray, values: np.ndarray, peak_idx: int,
                    level: float) -> tuple[float, bool]:
    """Width between the half-level crossings bracketing the peak.

    Linear interpolation on each side; when a side never drops below the
    level inside the window the full window extent is reported flagged.
    """
    left = None
    for i in range(peak_idx, 0, -1):
        if values[i - 1] < level <= values[i]:
            frac = (level - values[i - 1]) / (values[i] - values[i - 1])
            left = coords[i - 1] + frac * (coords[i] - coords[i - 1])
            break
    right = None
    for i in range(peak_idx, values.size - 1):
        if values[i + 1] < level <= values[i]:
            frac = (values[i] - level) / (values[i] - values[i + 1])
            right = coords[i] + frac * (coords[i + 1] - coords[i])
            break
    if left is None or right is None:
        return float(coords[-1] - coords[0]), True
    return float(right - left), False


def image_metrics(image: DisplayImage, grid: ImagingGrid,
                  peak_window: tuple[float, float, float, float] | None = None,
                  background_region: tuple[float, float, float, float] | None = None,
                  algorithm: str = "", gamma: float = float("nan"),
                  elapsed: float = float("nan")) -> QualityReport:
    """Peak location, FWHM along the x and z lines through the peak,
    background mean, and global contrast of a display image.

    `peak_window` and `background_region` are (x0, x1, z0, z1) rectangles in
    metres; the peak window defaults to the whole grid.  Without a peak
    (constant window) the FWHM fields carry the window extents, flagged.
    """
    px = image.pixels
    if px.shape != grid.shape:
        raise ValueError("image shape does not match grid")

    if peak_window is None:
        ix_win = np.arange(grid.x.size)
        iz_win = np.arange(grid.z.size)
    else:
        x0, x1, z0, z1 = peak_window
        ix_win = _window_indices(grid.x, x0, x1)
        iz_win = _window_indices(grid.z, z0, z1)
    window = px[np.ix_(iz_win, ix_win)]

    flat_peak = int(np.argmax(window))
    pz, pxi = np.unravel_index(flat_peak, window.shape)
    iz_peak = int(iz_win[pz])
    ix_peak = int(ix_win[pxi])
    peak_value = px[iz_peak, ix_peak]
    has_peak = bool(peak_value > window.min())

    level = 0.5 * peak_value
    if has_peak:
        fwhm_x, flag_x = _half_crossings(grid.x[ix_win], px[iz_peak, ix_win], pxi, level)
        fwhm_z, flag_z = _half_crossings(grid.z[iz_win], px[iz_win, ix_peak], pz, level)
    else:
        fwhm_x = float(grid.x[ix_win][-1] - grid.x[ix_win][0])
        fwhm_z = float(grid.z[iz_win][-1] - grid.z[iz_win][0])
        flag_x = flag_z = True

    if background_region is None:
        background_mean = float("nan")
    else:
        bx0, bx1, bz0, bz1 = background_region
        bix = _window_indices(grid.x, bx0, bx1)
        biz = _window_indices(grid.z, bz0, bz1)
        background_mean = float(px[np.ix_(biz, bix)].mean())

    return QualityReport(
        algorithm=algorithm,
        gamma=gamma,
        contrast_k=contrast(image),
        peak_x=float(grid.x[ix_peak]),
        peak_z=float(grid.z[iz_peak]),
        fwhm_x=fwhm_x,
        fwhm_z=fwhm_z,
        background_mean=background_mean,
        elapsed=elapsed,
        has_peak=has_peak,
        fwhm_x_flagged=flag_x,
        fwhm_z_flagged=flag_z,
    )


def export_pgm(image: DisplayImage, path) -> None:
    """Write a 16-bit binary PGM (P5, big-endian sample order).

    Pixels map linearly from [0, max] to [0, 65535]; an all-zero image maps
    to all-zero output.  The byte stream is a pure function of the pixels,
    so identical images produce identical files.
    """
    px = image.pixels
    peak = px.max()
    if peak > 0:
        levels = np.rint(px / peak * 65535.0)
    else:
        levels = np.zeros_like(px)
    data = np.clip(levels, 0, 65535).astype(">u2")
    h, w = px.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def write_report_csv(path, reports: list[QualityReport],
                     header_comments: list[str] | None = None) -> None:
    """Write quality reports as CSV, preceded by `# key=value` comment lines."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_comments or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        for rep in reports:
            writer.writerow(rep.csv_row())
