"""Point-scatterer RF simulator for plane-wave acquisitions.

Each channel trace is a superposition of identical pulses, one per
scatterer, delayed by the exact transmit + receive travel time that the
beamformer later inverts:

    samples[m, n, k] = sum_s  a_s * p(t_k - tau_tx(s; theta_m) - tau_rx(s; n))

with t_k = t0 + k / sample_rate and p a Gaussian-enveloped cosine burst.
The pulse is evaluated analytically at every sample instant (no resampled
template), so simulated arrival times are exact to float precision and the
simulator can serve as an independent oracle for the delay chain.

Scatterer amplitudes add linearly and channels are generated independently,
hence simulating the union of two phantoms equals summing their datasets
sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datapath import RFDataset
from .geometry import PlaneWaveSequence, ProbeGeometry

# The Gaussian envelope is cut off beyond this many standard deviations;
# exp(-12.5) ~ 3.7e-6 keeps the truncation ~ -108 dB below the pulse peak.
PULSE_TAIL_SIGMAS = 5.0


@dataclass(frozen=True)
class Pulse:
    """Gaussian-enveloped cosine burst.

    fractional_bandwidth is the full width of the spectral magnitude at half
    maximum divided by the centre frequency; for the Gaussian envelope
    exp(-t**2 / (2 sigma**2)) that fixes

        sigma = sqrt(2 ln 2) / (pi * fractional_bandwidth * center_frequency)
    """

    center_frequency: float = 5.0e6
    fractional_bandwidth: float = 0.6

    def __post_init__(self):
        if not self.center_frequency > 0:
            raise ValueError("center_frequency must be positive")
        if not self.fractional_bandwidth > 0:
            raise ValueError("fractional_bandwidth must be positive")

    @property
    def sigma(self) -> float:
        """Envelope standard deviation [s]."""
        return math.sqrt(2.0 * math.log(2.0)) / (math.pi * self.fractional_bandwidth * self.center_frequency)

    @property
    def tail(self) -> float:
        """Half-duration of the truncated pulse [s]."""
        return PULSE_TAIL_SIGMAS * self.sigma

    def waveform(self, t: np.ndarray) -> np.ndarray:
        """Pulse value at time(s) t relative to the pulse centre."""
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-0.5 * (t / self.sigma) ** 2) * np.cos(2.0 * np.pi * self.center_frequency * t)


@dataclass(frozen=True)
class Phantom:
    """Point scatterers as an (S, 3) array of rows (x, z, amplitude)."""

    scatterers: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.scatterers, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError("scatterers must have shape (S, 3): columns x, z, amplitude")
        if not np.all(np.isfinite(arr)):
            raise ValueError("scatterers contain non-finite values")
        if arr.shape[0] and np.any(arr[:, 1] <= 0):
            raise ValueError("scatterer depths must satisfy z > 0")
        object.__setattr__(self, "scatterers", arr)

    @property
    def count(self) -> int:
        return self.scatterers.shape[0]


def make_speckle_phantom(region: tuple[float, float, float, float], density: float,
                         seed: int) -> Phantom:
    """Diffuse scatterer field over a rectangle.

    Scatterer count is Poisson(density * area), positions are uniform over
    the rectangle (x0, x1, z0, z1) and amplitudes standard normal, all drawn
    from one seeded generator.  Fully developed speckle needs on the order
    of 10+ scatterers per resolution cell; pick `density` [1/m^2]
    accordingly for the probe in use.
    """
    x0, x1, z0, z1 = region
    if not (x1 > x0 and z1 > z0 and z0 > 0):
        raise ValueError("region must satisfy x1 > x0, z1 > z0, z0 > 0")
    if not density > 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(density * (x1 - x0) * (z1 - z0)))
    xs = rng.uniform(x0, x1, count)
    zs = rng.uniform(z0, z1, count)
    amps = rng.standard_normal(count)
    return Phantom(np.column_stack([xs, zs, amps]), rng_seed=seed)


def required_duration(phantom: Phantom, probe: ProbeGeometry, sequence: PlaneWaveSequence,
                      pulse: Pulse, speed_of_sound: float = 1540.0) -> float:
    """Smallest record duration that contains every echo including pulse tails."""
    if phantom.count == 0:
        return 0.0
    x = phantom.scatterers[:, 0]
    z = phantom.scatterers[:, 1]
    ang = sequence.angles
    tau_tx = (z[:, None] * np.cos(ang) + x[:, None] * np.sin(ang)) / speed_of_sound
    tau_rx = np.sqrt((x[:, None] - probe.element_positions) ** 2 + z[:, None] ** 2) / speed_of_sound
    return float(tau_tx.max(axis=1).max() + tau_rx.max(axis=1).max() + pulse.tail)


def simulate_rf(phantom: Phantom, probe: ProbeGeometry, sequence: PlaneWaveSequence,
                pulse: Pulse = Pulse(), sample_rate: float | None = None,
                duration: float | None = None, t0: float = 0.0,
                speed_of_sound: float = 1540.0, directivity: bool = False) -> RFDataset:
    """Simulate channel data for every transmit angle.

    sample_rate defaults to 4x the pulse centre frequency; duration defaults
    to (and must at least be) the full round trip of the deepest echo plus
    the pulse tail.  With `directivity` set, each receive contribution is
    scaled by the element obliquity factor z / r.
    """
    if sample_rate is None:
        sample_rate = 4.0 * pulse.center_frequency
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    needed = required_duration(phantom, probe, sequence, pulse, speed_of_sound) - t0
    if duration is None:
        duration = needed + 2.0 / sample_rate if phantom.count else 1.0 / sample_rate
    n_samples = int(round(duration * sample_rate))
    if n_samples < 1:
        raise ValueError("duration too short for a single sample")
    record_end = t0 + (n_samples - 1) / sample_rate
    if phantom.count and needed + t0 > record_end:
        raise ValueError(
            f"temporal record too short: scatterer echoes extend to {needed + t0:.9e} s, "
            f"record ends at {record_end:.9e} s; need duration >= {needed + 2.0 / sample_rate:.9e} s")

    m = sequence.n_angles
    n = probe.n_elements
    samples = np.zeros((m, n, n_samples), dtype=np.float32)
    if phantom.count == 0:
        return RFDataset(samples, sample_rate, t0, probe, sequence, speed_of_sound)

    x = phantom.scatterers[:, 0]
    z = phantom.scatterers[:, 1]
    amp = phantom.scatterers[:, 2]
    elem = probe.element_positions
    r_rx = np.sqrt((x[:, None] - elem) ** 2 + z[:, None] ** 2)          # (S, N)
    tau_rx = r_rx / speed_of_sound
    gain = amp[:, None] * (z[:, None] / r_rx if directivity else 1.0)   # (S, N)

    half = pulse.tail
    win = int(math.ceil(2.0 * half * sample_rate)) + 2
    offsets = np.arange(win)
    elem_base = (np.arange(n) * n_samples)[None, :, None]               # (1, N, 1)

    for im, theta in enumerate(sequence.angles):
        tau = tau_rx + ((z * math.cos(theta) + x * math.sin(theta)) / speed_of_sound)[:, None]
        k0 = np.ceil((tau - half - t0) * sample_rate)                   # (S, N)
        idx = k0[:, :, None] + offsets                                  # (S, N, W)
        t_rel = t0 + idx / sample_rate - tau[:, :, None]
        values = (gain[:, :, None] * pulse.waveform(t_rel)).astype(np.float32)
        valid = (idx >= 0) & (idx < n_samples) & (np.abs(t_rel) <= half)
        flat = (elem_base + idx.astype(np.int64))[valid]
        np.add.at(samples[im].reshape(-1), flat, values[valid])

    return RFDataset(samples, sample_rate, t0, probe, sequence, speed_of_sound)
