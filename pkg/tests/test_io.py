"""Dataset container format: round trips, handcrafted files, corruption."""

import json
import struct

import numpy as np
import pytest

import pwcbf as pw
from pwcbf import DatasetFormatError, read_dataset, write_dataset


def _dataset(rng, m=3, n=4, t=25):
    probe = pw.ProbeGeometry.linear(n, 2.0e-4, 6.0e6)
    seq = pw.PlaneWaveSequence.uniform(m, -7.0, 7.0)
    samples = rng.standard_normal((m, n, t)).astype(np.float32)
    return pw.RFDataset(samples, 24.0e6, 1.5e-6, probe, seq, speed_of_sound=1492.0)


def test_roundtrip_is_bit_exact(tmp_path, rng):
    ds = _dataset(rng)
    write_dataset(ds, tmp_path / "set")
    back = read_dataset(tmp_path / "set")
    assert np.array_equal(back.samples, ds.samples)
    assert back.samples.dtype == np.float32
    assert back.sample_rate == ds.sample_rate
    assert back.t0 == ds.t0
    assert back.speed_of_sound == ds.speed_of_sound
    assert np.array_equal(back.sequence.angles, ds.sequence.angles)
    assert np.array_equal(back.probe.element_positions, ds.probe.element_positions)
    assert back.probe.element_pitch == ds.probe.element_pitch
    assert back.probe.center_frequency == ds.probe.center_frequency


def test_read_accepts_suffixed_paths(tmp_path, rng):
    ds = _dataset(rng)
    json_path, bin_path = write_dataset(ds, tmp_path / "set")
    for p in (tmp_path / "set", json_path, bin_path):
        assert np.array_equal(read_dataset(p).samples, ds.samples)


def _handcrafted(tmp_path, m=2, n=3, t=4, **overrides):
    """Build files byte by byte, independent of write_dataset."""
    pitch = 2.5e-4
    header = {
        "magic": "BPWF1",
        "sample_rate": 20.0e6,
        "t0": 0.0,
        "speed_of_sound": 1540.0,
        "M": m, "N": n, "T": t,
        "angles": [-0.1, 0.1][:m] if m <= 2 else list(np.linspace(-0.1, 0.1, m)),
        "element_positions": [(k - (n - 1) / 2) * pitch for k in range(n)],
        "element_pitch": pitch,
        "center_frequency": 5.0e6,
        "endianness": "LE",
    }
    header.update(overrides)
    (tmp_path / "hc.json").write_text(json.dumps(header))
    values = [0.5 * i for i in range(m * n * t)]
    (tmp_path / "hc.bin").write_bytes(struct.pack(f"<{m * n * t}f", *values))
    return tmp_path / "hc"


def test_handcrafted_file_is_readable(tmp_path):
    ds = read_dataset(_handcrafted(tmp_path))
    assert ds.shape == (2, 3, 4)
    # [m][n][t] C order
    assert ds.samples[0, 0, 1] == np.float32(0.5)
    assert ds.samples[0, 1, 0] == np.float32(2.0)
    assert ds.samples[1, 0, 0] == np.float32(6.0)
    assert ds.sequence.angles[0] == -0.1


def test_magic_mismatch(tmp_path):
    base = _handcrafted(tmp_path, magic="XXXX")
    with pytest.raises(DatasetFormatError, match="magic"):
        read_dataset(base)


def test_unsupported_endianness(tmp_path):
    base = _handcrafted(tmp_path, endianness="BE")
    with pytest.raises(DatasetFormatError, match="endianness"):
        read_dataset(base)


def test_angle_count_mismatch(tmp_path):
    base = _handcrafted(tmp_path, angles=[-0.1, 0.0, 0.1])
    with pytest.raises(DatasetFormatError, match="angles"):
        read_dataset(base)


def test_truncated_payload(tmp_path):
    base = _handcrafted(tmp_path)
    raw = (tmp_path / "hc.bin").read_bytes()
    (tmp_path / "hc.bin").write_bytes(raw[:-4])
    with pytest.raises(DatasetFormatError, match="bytes"):
        read_dataset(base)


def test_nonfinite_payload_rejected(tmp_path):
    base = _handcrafted(tmp_path)
    raw = bytearray((tmp_path / "hc.bin").read_bytes())
    raw[0:4] = struct.pack("<f", float("inf"))
    (tmp_path / "hc.bin").write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError, match="finite"):
        read_dataset(base)


def test_allocation_guard(tmp_path):
    base = _handcrafted(tmp_path, M=100000, N=100000, T=100000,
                        angles=list(np.zeros(100000)),
                        element_positions=list(np.arange(100000) * 1e-5))
    with pytest.raises(DatasetFormatError, match="refusing to allocate"):
        read_dataset(base)


def test_unparseable_header(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    (tmp_path / "bad.bin").write_bytes(b"")
    with pytest.raises(DatasetFormatError, match="header"):
        read_dataset(tmp_path / "bad")


def test_missing_files(tmp_path):
    with pytest.raises(OSError):
        read_dataset(tmp_path / "nothing")


def test_nonpositive_dimension(tmp_path):
    base = _handcrafted(tmp_path, T=0)
    with pytest.raises(DatasetFormatError, match="dimension"):
        read_dataset(base)
