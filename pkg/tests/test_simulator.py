"""RF simulator tests.

The pulse bandwidth parametrization is verified against a spectral
measurement, arrival times against independently recomputed two-way delays,
and speckle statistics against the Rayleigh envelope model.
"""

import math
import re

import numpy as np
import pytest
import scipy.stats

import pwcbf as pw
from pwcbf import (Phantom, Pulse, make_speckle_phantom, required_duration,
                   simulate_rf, to_analytic)


# --- pulse --------------------------------------------------------------------

def test_pulse_peak_and_symmetry():
    p = Pulse()
    assert p.waveform(np.array([0.0]))[0] == 1.0
    t = np.linspace(1e-9, 4e-7, 50)
    assert np.allclose(p.waveform(t), p.waveform(-t), rtol=0, atol=1e-15)


def test_pulse_spectral_width_matches_fractional_bandwidth():
    # the envelope spectrum's full width at half maximum must equal bw * fc
    fc, bw = 5.0e6, 0.6
    p = Pulse(fc, bw)
    fs = 80.0e6
    t = (np.arange(4096) - 2048) / fs
    spec = np.abs(np.fft.rfft(p.waveform(t)))
    freqs = np.fft.rfftfreq(4096, 1.0 / fs)
    half = spec.max() / 2.0

    above = np.where(spec >= half)[0]
    lo_i, hi_i = above[0], above[-1]

    def crossing(i0, i1):
        f0, f1, s0, s1 = freqs[i0], freqs[i1], spec[i0], spec[i1]
        return f0 + (half - s0) * (f1 - f0) / (s1 - s0)

    width = crossing(hi_i, hi_i + 1) - crossing(lo_i, lo_i - 1)
    assert width == pytest.approx(bw * fc, rel=0.02)


def test_pulse_tail_is_negligible():
    p = Pulse()
    edge = p.waveform(np.array([p.tail]))[0]
    assert abs(edge) < math.exp(-12.0)


def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse(0.0, 0.6)
    with pytest.raises(ValueError):
        Pulse(5e6, 0.0)


# --- phantoms -------------------------------------------------------------

def test_phantom_validation():
    Phantom(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        Phantom(np.array([[0.0, -0.01, 1.0]]))
    with pytest.raises(ValueError):
        Phantom(np.array([[0.0, np.inf, 1.0]]))
    with pytest.raises(ValueError):
        Phantom(np.ones((2, 2)))


def test_speckle_phantom_determinism_and_geometry():
    region = (-0.005, 0.005, 0.01, 0.02)
    a = make_speckle_phantom(region, 2.0e7, seed=42)
    b = make_speckle_phantom(region, 2.0e7, seed=42)
    c = make_speckle_phantom(region, 2.0e7, seed=43)
    assert np.array_equal(a.scatterers, b.scatterers)
    assert not np.array_equal(a.scatterers, c.scatterers)
    s = a.scatterers
    assert np.all((s[:, 0] >= region[0]) & (s[:, 0] <= region[1]))
    assert np.all((s[:, 1] >= region[2]) & (s[:, 1] <= region[3]))
    # Poisson(2e7 * 1e-4) = Poisson(2000): stay within 5 sigma
    assert abs(len(s) - 2000) < 5 * math.sqrt(2000)
    # amplitudes standard normal
    assert abs(np.mean(s[:, 2])) < 0.1
    assert abs(np.std(s[:, 2]) - 1.0) < 0.1


def test_speckle_density_scaling():
    region = (-0.005, 0.005, 0.01, 0.02)
    n1 = len(make_speckle_phantom(region, 1.0e7, seed=1).scatterers)
    n2 = len(make_speckle_phantom(region, 2.0e7, seed=2).scatterers)
    assert abs(n2 - 2 * n1) < 6 * math.sqrt(2 * n1)


def test_speckle_phantom_validation():
    with pytest.raises(ValueError):
        make_speckle_phantom((0.005, -0.005, 0.01, 0.02), 1e7, 0)
    with pytest.raises(ValueError):
        make_speckle_phantom((-0.005, 0.005, 0.01, 0.02), 0.0, 0)


# --- RF simulation ----------------------------------------------------------

def _small_acq():
    probe = pw.ProbeGeometry.linear(4, 3.0e-4, 5.0e6)
    seq = pw.PlaneWaveSequence.uniform(3, -5.0, 5.0)
    return probe, seq


def test_empty_phantom_gives_zeros():
    probe, seq = _small_acq()
    ds = simulate_rf(Phantom(np.zeros((0, 3))), probe, seq, duration=2e-5)
    assert ds.samples.shape[0] == 3 and ds.samples.shape[1] == 4
    assert not ds.samples.any()


def test_echo_arrives_at_two_way_delay():
    probe, seq = _small_acq()
    x_s, z_s = 0.001, 0.012
    ds = simulate_rf(Phantom(np.array([[x_s, z_s, 1.0]])), probe, seq)
    ana = to_analytic(ds)
    c = ds.speed_of_sound
    for m, th in enumerate(seq.angles):
        tau_tx = (z_s * math.cos(th) + x_s * math.sin(th)) / c
        for n, ex in enumerate(probe.element_positions):
            tau = tau_tx + math.hypot(x_s - ex, z_s) / c
            k_star = int(np.argmax(np.abs(ana.samples[m, n])))
            t_star = ds.t0 + k_star / ds.sample_rate
            assert abs(t_star - tau) <= 0.6 / ds.sample_rate


def test_superposition_is_exact():
    probe, seq = _small_acq()
    p1 = Phantom(np.array([[0.001, 0.012, 1.0]]))
    p2 = Phantom(np.array([[-0.002, 0.018, 0.7]]))
    union = Phantom(np.vstack([p1.scatterers, p2.scatterers]))
    dur = 4e-5
    a = simulate_rf(p1, probe, seq, duration=dur)
    b = simulate_rf(p2, probe, seq, duration=dur)
    u = simulate_rf(union, probe, seq, duration=dur)
    assert np.array_equal(u.samples, a.samples + b.samples)


def test_mirror_invariance_is_exact():
    probe, seq = _small_acq()
    phantom = Phantom(np.array([[0.0012, 0.011, 1.0], [-0.0007, 0.016, -0.4]]))
    mirrored = Phantom(phantom.scatterers * np.array([-1.0, 1.0, 1.0]))
    neg_seq = pw.PlaneWaveSequence(-seq.angles)
    dur = 4e-5
    a = simulate_rf(phantom, probe, seq, duration=dur)
    b = simulate_rf(mirrored, probe, neg_seq, duration=dur)
    assert np.array_equal(b.samples, a.samples[:, ::-1, :])


def test_duration_too_short_reports_requirement():
    probe, seq = _small_acq()
    phantom = Phantom(np.array([[0.0, 0.02, 1.0]]))
    with pytest.raises(ValueError, match="duration") as err:
        simulate_rf(phantom, probe, seq, duration=1e-5)
    m = re.search(r"need duration >= ([\d.e+-]+)", str(err.value))
    assert m, "message should state the required duration"
    needed = float(m.group(1))
    base = required_duration(phantom, probe, seq, Pulse())
    fs = 4 * probe.center_frequency
    assert base <= needed <= base + 3.0 / fs
    simulate_rf(phantom, probe, seq, duration=needed)  # must now fit


def test_default_sample_rate_is_four_times_fc():
    probe, seq = _small_acq()
    ds = simulate_rf(Phantom(np.array([[0.0, 0.01, 1.0]])), probe, seq)
    assert ds.sample_rate == 4 * probe.center_frequency


def test_directivity_attenuates_oblique_paths():
    probe = pw.ProbeGeometry.linear(2, 6.0e-3, 5.0e6)  # elements at +-3 mm
    seq = pw.PlaneWaveSequence.uniform(1, 0.0, 0.0)
    phantom = Phantom(np.array([[3.0e-3, 0.01, 1.0]]))  # directly above element 1
    plain = simulate_rf(phantom, probe, seq, duration=3e-5)
    direct = simulate_rf(phantom, probe, seq, duration=3e-5, directivity=True)
    # on-axis element: r = z so the z/r gain is exactly 1
    assert np.array_equal(direct.samples[0, 1], plain.samples[0, 1])
    assert np.max(np.abs(direct.samples[0, 0])) < np.max(np.abs(plain.samples[0, 0]))


def test_samples_are_float32():
    probe, seq = _small_acq()
    ds = simulate_rf(Phantom(np.array([[0.0, 0.01, 1.0]])), probe, seq)
    assert ds.samples.dtype == np.float32


def test_speckle_envelope_is_rayleigh():
    # fully developed speckle: das envelope follows a Rayleigh law; compare
    # against the maximum-likelihood fit with a KS statistic over ~1e4 pixels
    probe = pw.ProbeGeometry.linear(32, 3.0e-4, 5.0e6)
    seq = pw.PlaneWaveSequence.uniform(8, -8.0, 8.0)
    phantom = make_speckle_phantom((-0.006, 0.006, 0.014, 0.024), 1.1e8, seed=99)
    ds = simulate_rf(phantom, probe, seq)
    ana = to_analytic(ds)
    grid = pw.ImagingGrid.regular(-0.0054, 0.0054, 100, 0.0148, 0.0232, 100,
                                  ds.speed_of_sound)
    img = pw.beamform_image(ana, grid, "das", threads=2)
    env = np.abs(img.field).ravel()
    scale = math.sqrt(float(np.sum(env**2)) / (2 * env.size))
    stat = scipy.stats.kstest(env, "rayleigh", args=(0.0, scale)).statistic
    assert stat < 0.05
