"""Dataset file format: JSON header + raw little-endian float32 samples.

A dataset `name` is stored as two files:

    name.json   acquisition metadata, magic "BPWF1"
    name.bin    samples[m][n][t] as little-endian float32, C order

Headers carry everything needed to rebuild the in-memory dataset exactly:
sampling, speed of sound, dimensions, steering angles, element layout.
Samples are float32 in memory as well, so write -> read is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datapath import RFDataset
from .geometry import PlaneWaveSequence, ProbeGeometry

MAGIC = "BPWF1"

# Refuse to allocate sample buffers beyond this many bytes when reading.
MAX_DATASET_BYTES = 1 << 34


class DatasetFormatError(ValueError):
    """Malformed or inconsistent dataset files."""


def _base_path(path) -> Path:
    path = Path(path)
    if path.suffix in (".json", ".bin"):
        path = path.with_suffix("")
    return path


def write_dataset(dataset: RFDataset, path) -> tuple[Path, Path]:
    """Write `dataset` to <path>.json / <path>.bin; returns both paths."""
    base = _base_path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    m, n, t = dataset.shape
    header = {
        "magic": MAGIC,
        "sample_rate": dataset.sample_rate,
        "t0": dataset.t0,
        "speed_of_sound": dataset.speed_of_sound,
        "M": m,
        "N": n,
        "T": t,
        "angles": dataset.sequence.angles.tolist(),
        "element_positions": dataset.probe.element_positions.tolist(),
        "element_pitch": dataset.probe.element_pitch,
        "center_frequency": dataset.probe.center_frequency,
        "endianness": "LE",
    }
    json_path = base.with_suffix(".json")
    bin_path = base.with_suffix(".bin")
    json_path.write_text(json.dumps(header, indent=1))
    bin_path.write_bytes(np.ascontiguousarray(dataset.samples, dtype="<f4").tobytes())
    return json_path, bin_path


def read_dataset(path) -> RFDataset:
    """Read a dataset written by :func:`write_dataset`.

    Rejects wrong magic, dimension/size mismatches, oversized allocations
    and non-finite samples with distinct messages.
    """
    base = _base_path(path)
    json_path = base.with_suffix(".json")
    bin_path = base.with_suffix(".bin")
    try:
        header = json.loads(json_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"unparseable dataset header {json_path}: {exc}") from exc

    if header.get("magic") != MAGIC:
        raise DatasetFormatError(
            f"dataset magic mismatch: expected {MAGIC!r}, found {header.get('magic')!r}")
    if header.get("endianness", "LE") != "LE":
        raise DatasetFormatError(
            f"unsupported sample endianness {header.get('endianness')!r}")

    try:
        m = int(header["M"])
        n = int(header["N"])
        t = int(header["T"])
        sample_rate = float(header["sample_rate"])
        t0 = float(header["t0"])
        speed_of_sound = float(header.get("speed_of_sound", 1540.0))
        angles = np.asarray(header["angles"], dtype=np.float64)
        positions = np.asarray(header["element_positions"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"invalid dataset header field: {exc}") from exc

    if m < 1 or n < 1 or t < 1:
        raise DatasetFormatError(f"dimension mismatch: non-positive dims M={m} N={n} T={t}")
    if angles.size != m:
        raise DatasetFormatError(f"dimension mismatch: {angles.size} angles for M={m}")
    if positions.size != n:
        raise DatasetFormatError(f"dimension mismatch: {positions.size} element positions for N={n}")

    expected_bytes = m * n * t * 4
    if expected_bytes > MAX_DATASET_BYTES:
        raise DatasetFormatError(
            f"refusing to allocate {expected_bytes} bytes (limit {MAX_DATASET_BYTES})")
    actual_bytes = bin_path.stat().st_size
    if actual_bytes != expected_bytes:
        raise DatasetFormatError(
            f"dimension mismatch: expected {expected_bytes} sample bytes, found {actual_bytes}")

    raw = np.fromfile(bin_path, dtype="<f4").reshape(m, n, t)
    if not np.all(np.isfinite(raw)):
        raise DatasetFormatError("non-finite samples in dataset")

    pitch = float(header.get("element_pitch", 0.0))
    if pitch <= 0.0:
        pitch = float(np.diff(positions).mean()) if n > 1 else 1.0
    center_frequency = float(header.get("center_frequency", sample_rate / 4.0))
    probe = ProbeGeometry(positions, pitch, center_frequency)
    sequence = PlaneWaveSequence(angles)
    return RFDataset(raw, sample_rate, t0, probe, sequence, speed_of_sound)
