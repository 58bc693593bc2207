"""Acquisition geometry: probe, steering sequence, pixel grid, travel times.

Coordinate conventions used throughout the package:

    x      lateral position [m], zero at the centre of the receive aperture
    z      depth [m], positive into the medium (every imaged pixel has z > 0)
    theta  plane-wave steering angle [rad] measured from the z axis;
           positive angles tilt the wavefront towards positive x

A steered plane wave whose wavefront passes the aperture centre at t = 0
reaches pixel (x, z) after

    tau_tx = (z * cos(theta) + x * sin(theta)) / c

and the echo returns to the element at lateral position x_n after

    tau_rx = sqrt((x - x_n)**2 + z**2) / c

Both delay helpers broadcast over numpy arrays, so whole grids can be
evaluated in one call.  The speed of sound is a per-dataset scalar carried
by :class:`ImagingGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_1d_float(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class ProbeGeometry:
    """Linear receive array described by its element centres.

    Parameters
    ----------
    element_positions : (N,) array
        Lateral element centres [m], strictly increasing, symmetric layouts
        place the aperture centre at x = 0.
    element_pitch : float
        Centre-to-centre spacing [m].
    center_frequency : float
        Nominal transmit centre frequency [Hz].
    """

    element_positions: np.ndarray
    element_pitch: float
    center_frequency: float

    def __post_init__(self):
        pos = _as_1d_float(self.element_positions, "element_positions")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("element_positions must be strictly increasing")
        if not self.element_pitch > 0:
            raise ValueError("element_pitch must be positive")
        if not self.center_frequency > 0:
            raise ValueError("center_frequency must be positive")
        object.__setattr__(self, "element_positions", pos)

    @property
    def n_elements(self) -> int:
        return self.element_positions.size

    @classmethod
    def linear(cls, n_elements: int, pitch: float, center_frequency: float) -> "ProbeGeometry":
        """Evenly pitched array centred on x = 0."""
        if n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        pos = (np.arange(n_elements) - (n_elements - 1) / 2.0) * pitch
        return cls(pos, pitch, center_frequency)


@dataclass(frozen=True)
class PlaneWaveSequence:
    """Ordered set of plane-wave steering angles [rad]."""

    angles: np.ndarray

    def __post_init__(self):
        ang = _as_1d_float(self.angles, "angles")
        if np.any(np.abs(ang) >= np.pi / 2):
            raise ValueError("steering angles must satisfy |theta| < pi/2")
        object.__setattr__(self, "angles", ang)

    @property
    def n_angles(self) -> int:
        return self.angles.size

    @classmethod
    def uniform(cls, count: int, lo_deg: float, hi_deg: float) -> "PlaneWaveSequence":
        """`count` angles evenly spanning [lo_deg, hi_deg], endpoints included."""
        if count < 1:
            raise ValueError("count must be >= 1")
        return cls(np.deg2rad(np.linspace(lo_deg, hi_deg, count)))


@dataclass(frozen=True)
class ImagingGrid:
    """Rectangular pixel grid with a dataset-level speed of sound.

    Pixel (iz, ix) sits at (x[ix], z[iz]); images and display buffers use
    the same (depth-major) ordering.
    """

    x: np.ndarray
    z: np.ndarray
    speed_of_sound: float = 1540.0

    def __post_init__(self):
        x = _as_1d_float(self.x, "x")
        z = _as_1d_float(self.z, "z")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("x coordinates must be strictly increasing")
        if z.size > 1 and not np.all(np.diff(z) > 0):
            raise ValueError("z coordinates must be strictly increasing")
        if np.any(z <= 0):
            raise ValueError("grid depths must satisfy z > 0")
        if not self.speed_of_sound > 0:
            raise ValueError("speed_of_sound must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def shape(self) -> tuple[int, int]:
        """(nz, nx) image shape."""
        return self.z.size, self.x.size

    @classmethod
    def regular(cls, x0: float, x1: float, nx: int, z0: float, z1: float, nz: int,
                speed_of_sound: float = 1540.0) -> "ImagingGrid":
        if nx < 1 or nz < 1:
            raise ValueError("grid must contain at least one pixel per axis")
        return cls(np.linspace(x0, x1, nx), np.linspace(z0, z1, nz), speed_of_sound)


def tx_delay(pixel, angle, grid: ImagingGrid):
    """One-way transmit delay [s] from the steered wavefront to the pixel.

    `pixel` is an (x, z) pair; both members may be arrays and broadcast
    against `angle`.
    """
    x, z = pixel
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("tx_delay requires z > 0")
    return (z * np.cos(angle) + x * np.sin(angle)) / grid.speed_of_sound


def rx_delay(pixel, element_x, grid: ImagingGrid):
    """One-way receive delay [s] from the pixel back to an element at element_x."""
    x, z = pixel
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("rx_delay requires z > 0")
    return np.sqrt((x - element_x) ** 2 + z ** 2) / grid.speed_of_sound


def aperture_mask(pixel, element_x, f_number: float):
    """Receive-aperture acceptance mask for a fixed f-number.

    Element n participates at pixel (x, z) only while |x - x_n| <= z / (2 F).
    Masked-out entries of the signal matrix are set to zero; the compounding
    formulas themselves are unchanged.
    """
    x, z = pixel
    if not f_number > 0:
        raise ValueError("f_number must be positive")
    return np.abs(np.asarray(x, dtype=np.float64) - element_x) <= np.asarray(z, dtype=np.float64) / (2.0 * f_number)
