"""Shared fixtures: one small point-target acquisition reused across tests."""

import numpy as np
import pytest

import pwcbf as pw


@pytest.fixture(scope="session")
def point_setup():
    """(dataset, analytic, grid) for a single scatterer at (0, 20 mm).

    5 plane waves over +-10 deg, 16 elements at 0.3 mm pitch, 5 MHz pulse.
    Small enough that every beamformer runs in well under a second.
    """
    probe = pw.ProbeGeometry.linear(16, 3.0e-4, 5.0e6)
    sequence = pw.PlaneWaveSequence.uniform(5, -10.0, 10.0)
    phantom = pw.Phantom(np.array([[0.0, 0.02, 1.0]]))
    dataset = pw.simulate_rf(phantom, probe, sequence)
    grid = pw.ImagingGrid.regular(-0.004, 0.004, 41, 0.016, 0.024, 41,
                                  dataset.speed_of_sound)
    return dataset, pw.to_analytic(dataset), grid


@pytest.fixture()
def rng():
    return np.random.default_rng(20260815)


def random_matrix(rng, m, n, scale=1.0):
    """Complex Gaussian signal matrix."""
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
