"""RF conditioning and per-pixel signal extraction.

The beamformers all consume one M x N matrix of time-aligned complex
samples per pixel: row m is a transmit event, column n a receive element.
This module turns a raw RF dataset into its analytic (complex baseband-
preserving) form once, then gathers delayed samples out of it with linear
interpolation.  Sample indices that fall outside the recorded window
contribute exactly 0, never a clamped edge value.

Shapes
------
    RFDataset.samples        (M, N, T)  float32
    AnalyticDataset.samples  (M, N, T)  complex128
    signal matrix            (M, N)     complex128
    stacked signal matrices  (B, M, N)  complex128
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ImagingGrid, PlaneWaveSequence, ProbeGeometry, tx_delay, rx_delay

# Pixels per block in the bulk gather path. Fixed so that image content is
# independent of thread count and machine.
PIXEL_BLOCK = 512


def _check_dataset_fields(samples, sample_rate, probe, sequence):
    if samples.ndim != 3:
        raise ValueError("samples must have shape (M, N, T)")
    m, n, t = samples.shape
    if m != sequence.n_angles:
        raise ValueError(f"samples first axis ({m}) does not match sequence length ({sequence.n_angles})")
    if n != probe.n_elements:
        raise ValueError(f"samples second axis ({n}) does not match element count ({probe.n_elements})")
    if t < 1:
        raise ValueError("samples must contain at least one time sample")
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    if not np.all(np.isfinite(samples)):
        raise ValueError("non-finite samples")


@dataclass
class RFDataset:
    """Raw channel data for one plane-wave acquisition.

    Samples are kept as float32, the same width the on-disk format uses, so
    a write/read cycle reproduces them bit-exactly.  `t0` is the time of the
    first sample relative to the transmit wavefront passing the aperture
    centre.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float
    probe: ProbeGeometry
    sequence: PlaneWaveSequence
    speed_of_sound: float = 1540.0

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        _check_dataset_fields(self.samples, self.sample_rate, self.probe, self.sequence)
        if not self.speed_of_sound > 0:
            raise ValueError("speed_of_sound must be positive")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape


@dataclass
class AnalyticDataset:
    """Analytic-signal twin of an RFDataset (complex128, same metadata).

    The real part of every trace equals the original RF trace up to FFT
    round-off.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float
    probe: ProbeGeometry
    sequence: PlaneWaveSequence
    speed_of_sound: float = 1540.0

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.complex128)
        _check_dataset_fields(self.samples, self.sample_rate, self.probe, self.sequence)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape


def analytic_signal(trace: np.ndarray) -> np.ndarray:
    """Analytic signal of a real trace along the last axis.

    One-sided spectrum construction: keep DC (and, for even lengths, the
    Nyquist bin) unscaled, double the strictly positive frequencies, zero
    the negative ones, and inverse transform.
    """
    trace = np.asarray(trace, dtype=np.float64)
    t = trace.shape[-1]
    if t == 0:
        raise ValueError("empty trace")
    if not np.all(np.isfinite(trace)):
        raise ValueError("non-finite samples")
    spectrum = np.fft.fft(trace, axis=-1)
    gain = np.zeros(t)
    gain[0] = 1.0
    if t % 2 == 0:
        gain[1:t // 2] = 2.0
        gain[t // 2] = 1.0
    else:
        gain[1:(t + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * gain, axis=-1)


def to_analytic(dataset: RFDataset) -> AnalyticDataset:
    """Convert every channel trace of an RF dataset to its analytic signal.

    Done once per dataset; the per-pixel gather below then interpolates in
    the complex traces directly.
    """
    return AnalyticDataset(
        samples=analytic_signal(dataset.samples),
        sample_rate=dataset.sample_rate,
        t0=dataset.t0,
        probe=dataset.probe,
        sequence=dataset.sequence,
        speed_of_sound=dataset.speed_of_sound,
    )


def sample_trace(trace: np.ndarray, times, sample_rate: float, t0: float = 0.0):
    """Linearly interpolated sample of `trace` at absolute time(s) `times`.

    The fractional index is u = (times - t0) * sample_rate.  Values of u
    outside [0, T-1] return exactly 0.
    """
    trace = np.asarray(trace)
    t = trace.shape[-1]
    u = (np.asarray(times, dtype=np.float64) - t0) * sample_rate
    last = t - 1
    inside = (u >= 0.0) & (u <= last)
    k0 = np.clip(np.floor(u), 0, max(last - 1, 0)).astype(np.int64)
    k1 = np.minimum(k0 + 1, last)
    frac = u - k0
    values = trace[..., k0] * (1.0 - frac) + trace[..., k1] * frac
    return np.where(inside, values, np.zeros((), dtype=trace.dtype))


@dataclass(frozen=True)
class SignalMatrix:
    """Per-pixel matrix of time-aligned analytic samples.

    entries[m, n] is the analytic sample of transmit m / element n delayed
    to the pixel's round-trip time.
    """

    entries: np.ndarray
    pixel: tuple[float, float]


def signal_matrix_block(data: AnalyticDataset, x, z, grid: ImagingGrid,
                        f_number: float | None = None) -> np.ndarray:
    """Signal matrices for a batch of pixels, shape (B, M, N).

    x and z are 1-D arrays of equal length B.  Out-of-record samples are 0;
    with `f_number` set, elements outside the receive cone are zeroed too.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    angles = data.sequence.angles            # (M,)
    elem_x = data.probe.element_positions    # (N,)
    m, n, t = data.samples.shape

    ttx = tx_delay((x[:, None], z[:, None]), angles[None, :], grid)      # (B, M)
    trx = rx_delay((x[:, None], z[:, None]), elem_x[None, :], grid)      # (B, N)
    u = (ttx[:, :, None] + trx[:, None, :] - data.t0) * data.sample_rate  # (B, M, N)

    last = t - 1
    inside = (u >= 0.0) & (u <= last)
    k0 = np.clip(np.floor(u), 0, max(last - 1, 0)).astype(np.int64)
    k1 = np.minimum(k0 + 1, last)
    frac = u - k0

    flat = data.samples.reshape(m * n, t)
    chan = (np.arange(m)[:, None] * n + np.arange(n)[None, :])           # (M, N)
    v0 = flat[chan[None, :, :], k0]
    v1 = flat[chan[None, :, :], k1]
    s = v0 * (1.0 - frac) + v1 * frac
    s[~inside] = 0.0

    if f_number is not None:
        keep = np.abs(x[:, None] - elem_x[None, :]) <= z[:, None] / (2.0 * f_number)
        s *= keep[:, None, :]
    return s


def build_signal_matrix(data: AnalyticDataset, pixel, grid: ImagingGrid,
                        f_number: float | None = None) -> SignalMatrix:
    """Signal matrix for a single pixel (x, z)."""
    x, z = pixel
    block = signal_matrix_block(data, np.array([x]), np.array([z]), grid, f_number)
    return SignalMatrix(entries=block[0], pixel=(float(x), float(z)))
