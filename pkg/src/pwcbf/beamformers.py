"""Pixel-level compounding beamformers.

Every beamformer reduces the per-pixel matrix s[m, n] of time-aligned
analytic samples (transmit event m, receive element n) to one pixel value.
All per-pixel functions accept stacked matrices with arbitrary leading
batch axes, shape (..., M, N), and reduce the trailing two.

Normalisation follows each method's published compounding rule and is kept
literal rather than unified:

    das     (1/MN) * sum_mn s
    jcf     (1/MN) * sum_mn w[m,n] * s          w from the joint coherence weights
    cf      (1/N)  * sum_mn w[m] * s            w[m] = |sum_n s|^2 / (N sum_n |s|^2)
    gcf     (1/N)  * sum_mn w[m] * s            w[m] = low-frequency fraction of the
                                                receive-aperture DFT energy
    pcf     (1/N)  * sum_mn w[m] * s            w[m] = max(0, 1 - (gamma/sigma0) * sd_phase)
    ucf     w * sum_mn s                        w = |sum_mn s|^2 / (MN sum_mn |s|^2)
    fdmas   sum_{l=1..L} sum_n  r[n] r[n+l]     r = signed square root of the
                                                angle-compounded RF row
    minvar  distortionless weights on spatially smoothed covariance of the
            angle-compounded receive vector

Weights whose denominator vanishes (an all-zero row/column/matrix) are set
to 0.  For jcf with alpha = 0 every weight is exactly 1 and no division is
performed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .datapath import PIXEL_BLOCK, AnalyticDataset, SignalMatrix, signal_matrix_block
from .geometry import ImagingGrid

METHOD_NAMES = ("das", "jcf", "cf", "gcf", "pcf", "ucf", "fdmas", "minvar")


@dataclass(frozen=True)
class JcfParams:
    """Joint coherence weighting exponent.

    alpha = 0 reduces to plain compounding (all weights 1); larger alpha
    suppresses incoherent contributions more aggressively.
    """

    alpha: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and >= 0")


@dataclass(frozen=True)
class BaselineParams:
    """Parameters of the gcf / pcf / fdmas baselines.

    gcf_cutoff      half-width, in DFT bins, of the spectral region around DC
                    counted as coherent energy
    pcf_gamma       phase-spread penalty slope
    pcf_sigma0      nominal spread of fully random phase, sd of a uniform
                    distribution over an interval of width 2*pi
    dmas_max_lag    largest receive-element lag in the pairwise products;
                    None means N - 1 (all pairs)
    """

    gcf_cutoff: int = 2
    pcf_gamma: float = 1.0
    pcf_sigma0: float = math.pi / math.sqrt(3.0)
    dmas_max_lag: int | None = None

    def __post_init__(self):
        if self.gcf_cutoff < 0:
            raise ValueError("gcf_cutoff must be >= 0")
        if self.pcf_gamma < 0:
            raise ValueError("pcf_gamma must be >= 0")
        if not self.pcf_sigma0 > 0:
            raise ValueError("pcf_sigma0 must be positive")
        if self.dmas_max_lag is not None and self.dmas_max_lag < 1:
            raise ValueError("dmas_max_lag must be >= 1")


@dataclass(frozen=True)
class MinVarParams:
    """Minimum-variance beamformer parameters.

    subarray_length     L of the sliding receive subarrays; None -> max(1, N // 4)
    axial_half_window   K axial neighbours on each side pooled into the
                        covariance estimate
    diagonal_loading    Delta; the loaded covariance is R + (Delta/L) tr(R) I
    """

    subarray_length: int | None = None
    axial_half_window: int = 1
    diagonal_loading: float = 0.01

    def __post_init__(self):
        if self.subarray_length is not None and self.subarray_length < 1:
            raise ValueError("subarray_length must be >= 1")
        if self.axial_half_window < 0:
            raise ValueError("axial_half_window must be >= 0")
        if self.diagonal_loading < 0:
            raise ValueError("diagonal_loading must be >= 0")


def _entries(s) -> np.ndarray:
    if isinstance(s, SignalMatrix):
        s = s.entries
    arr = np.asarray(s)
    if arr.ndim < 2:
        raise ValueError("signal matrix must have shape (..., M, N)")
    return arr


def beamform_das(s) -> np.ndarray | complex:
    """Unweighted coherent compounding: the plain mean over transmits and elements."""
    s = _entries(s)
    return s.mean(axis=(-2, -1))


def jcf_weights_factorized(s, params: JcfParams = JcfParams()) -> np.ndarray:
    """Joint coherence weights via row/column sums.

    With C[n] the column sums, R[m] the row sums, P[n] = sum_m |s|^alpha and
    Q[m] = sum_n |s|^alpha:

        w[m, n] = |C[n] * R[m]|^alpha / ((M N)^(alpha-1) * P[n] * Q[m])

    which costs O(MN) per pixel instead of the O((MN)^2) of the literal
    double-aperture sums.  Entries whose denominator vanishes get weight 0.
    """
    s = _entries(s)
    m, n = s.shape[-2:]
    if params.alpha == 0.0:
        return np.ones(s.shape, dtype=np.float64)
    alpha = params.alpha
    col = s.sum(axis=-2)                     # (..., N)
    row = s.sum(axis=-1)                     # (..., M)
    mag = np.abs(s) ** alpha
    col_mag = mag.sum(axis=-2)               # (..., N)
    row_mag = mag.sum(axis=-1)               # (..., M)
    num = np.abs(row[..., :, None] * col[..., None, :]) ** alpha
    den = float(m * n) ** (alpha - 1.0) * row_mag[..., :, None] * col_mag[..., None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = num / den
    return np.where(den > 0.0, w, 0.0)


def jcf_weights_direct(s, params: JcfParams = JcfParams()) -> np.ndarray:
    """Joint coherence weights by the literal quadruple sums.

    Deliberately naive scalar loops, kept as the independent reference for
    the factorized kernel.  2-D input only.
    """
    s = _entries(s)
    if s.ndim != 2:
        raise ValueError("direct evaluation expects a single (M, N) matrix")
    m_count, n_count = s.shape
    if params.alpha == 0.0:
        return np.ones(s.shape, dtype=np.float64)
    alpha = params.alpha
    mag = np.abs(s)
    scale = float(m_count * n_count) ** (alpha - 1.0)
    w = np.zeros((m_count, n_count))
    for m in range(m_count):
        for n in range(n_count):
            num = 0.0 + 0.0j
            den = 0.0
            for mm in range(m_count):
                for nn in range(n_count):
                    num += s[mm, n] * s[m, nn]
                    den += (mag[mm, n] * mag[m, nn]) ** alpha
            den *= scale
            w[m, n] = abs(num) ** alpha / den if den > 0.0 else 0.0
    return w


def beamform_jcf(s, params: JcfParams = JcfParams()) -> np.ndarray | complex:
    """Coherence-weighted compounding with the factorized joint weights."""
    s = _entries(s)
    w = jcf_weights_factorized(s, params)
    return (w * s).mean(axis=(-2, -1))


def cf_weights(s) -> np.ndarray:
    """Per-transmit coherence factor across the receive aperture, in [0, 1]."""
    s = _entries(s)
    n = s.shape[-1]
    row = s.sum(axis=-1)
    den = n * (np.abs(s) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.abs(row) ** 2 / den
    return np.where(den > 0.0, w, 0.0)


def beamform_cf(s) -> np.ndarray | complex:
    s = _entries(s)
    n = s.shape[-1]
    w = cf_weights(s)
    return (w * s.sum(axis=-1)).sum(axis=-1) / n


def gcf_weights(s, params: BaselineParams = BaselineParams()) -> np.ndarray:
    """Generalized coherence factor per transmit.

    Energy ratio of the receive-aperture DFT: bins whose circular distance
    from DC is <= gcf_cutoff count as coherent.
    """
    s = _entries(s)
    n = s.shape[-1]
    m0 = params.gcf_cutoff
    if not m0 < n:
        raise ValueError(f"gcf_cutoff must be < N (got {m0} with N={n})")
    energy = np.abs(np.fft.fft(s, axis=-1)) ** 2
    bins = np.arange(n)
    low = energy[..., np.minimum(bins, n - bins) <= m0].sum(axis=-1)
    total = energy.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = low / total
    return np.where(total > 0.0, w, 0.0)


def beamform_gcf(s, params: BaselineParams = BaselineParams()) -> np.ndarray | complex:
    s = _entries(s)
    n = s.shape[-1]
    w = gcf_weights(s, params)
    return (w * s.sum(axis=-1)).sum(axis=-1) / n


def pcf_weights(s, params: BaselineParams = BaselineParams()) -> np.ndarray:
    """Phase coherence factor per transmit.

    The phase spread is the smaller of the standard deviations of the
    receive phases taken in (-pi, pi] and of the same phases shifted into
    (0, 2*pi]; the two branches differ only in where the circle is cut.
    Zero-magnitude entries contribute phase 0.
    """
    s = _entries(s)
    phase = np.angle(s)
    shifted = np.where(phase > 0.0, phase, phase + 2.0 * np.pi)
    spread = np.minimum(phase.std(axis=-1), shifted.std(axis=-1))
    return np.maximum(0.0, 1.0 - (params.pcf_gamma / params.pcf_sigma0) * spread)


def beamform_pcf(s, params: BaselineParams = BaselineParams()) -> np.ndarray | complex:
    s = _entries(s)
    n = s.shape[-1]
    w = pcf_weights(s, params)
    return (w * s.sum(axis=-1)).sum(axis=-1) / n


def ucf_weight(s) -> np.ndarray:
    """Scalar coherence weight over the joint transmit/receive aperture."""
    s = _entries(s)
    m, n = s.shape[-2:]
    total = s.sum(axis=(-2, -1))
    den = m * n * (np.abs(s) ** 2).sum(axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.abs(total) ** 2 / den
    return np.where(den > 0.0, w, 0.0)


def beamform_ucf(s) -> np.ndarray | complex:
    """Coherence-weighted double sum; the weight multiplies the raw sum
    rather than the mean, so a fully coherent constant matrix returns MN
    times the entry value."""
    s = _entries(s)
    return ucf_weight(s) * s.sum(axis=(-2, -1))


def beamform_fdmas(s, params: BaselineParams = BaselineParams()) -> np.ndarray | float:
    """Filtered delay-multiply-and-sum over the angle-compounded RF row.

    Compounds real (RF) samples over transmits, square-root-compresses them
    with sign preserved, and sums all pairwise products up to the maximum
    lag.  Output is real.
    """
    s = _entries(s)
    n = s.shape[-1]
    lag = params.dmas_max_lag if params.dmas_max_lag is not None else n - 1
    if not 1 <= lag <= n - 1:
        raise ValueError(f"dmas_max_lag must be in [1, N-1] (got {lag} with N={n})")
    comp = np.real(s).sum(axis=-2)                     # (..., N)
    root = np.sign(comp) * np.sqrt(np.abs(comp))
    out = np.zeros(root.shape[:-1])
    for l in range(1, lag + 1):
        out = out + (root[..., :-l] * root[..., l:]).sum(axis=-1)
    return out


def minvar_weights(cov: np.ndarray, diagonal_loading: float) -> tuple[np.ndarray, bool]:
    """Distortionless unit-vector weights from a receive-subarray covariance.

    Loads the diagonal with (Delta/L) tr(R), solves R~ w = 1 directly and
    normalises to w / (1^H w).  Returns (weights, fallback_flag); the flag is
    set when the covariance carries no energy or the solve fails, in which
    case uniform weights 1/L are returned.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    l = cov.shape[-1]
    ones = np.ones(l)
    trace = np.trace(cov).real
    if trace <= 0.0:
        return ones / l, True
    loaded = cov + (diagonal_loading / l) * trace * np.eye(l)
    try:
        y = np.linalg.solve(loaded, ones.astype(np.complex128))
    except np.linalg.LinAlgError:
        return ones / l, True
    return y / y.sum(), False


def _compounded_subarrays(matrix: np.ndarray, length: int) -> np.ndarray:
    """Sliding length-L windows of the angle-compounded receive vector."""
    row = matrix.sum(axis=0)                            # (N,)
    return sliding_window_view(row, length)             # (N-L+1, L)


def beamform_minvar(stack, params: MinVarParams = MinVarParams(),
                    center: int | None = None) -> tuple[complex, bool]:
    """Minimum-variance pixel value from an axial neighbourhood of matrices.

    `stack` holds the signal matrices of the pixel and its axial neighbours
    in increasing depth order; `center` indexes the pixel itself (middle by
    default).  Each matrix is compounded over transmits, cut into sliding
    length-L subarrays, and all subarrays of all neighbours are pooled into
    one covariance estimate.  Returns (value, fallback_flag); on a singular
    estimate the value falls back to plain compounding of the centre matrix.
    """
    mats = [_entries(m) for m in stack]
    if not mats:
        raise ValueError("stack must contain at least one matrix")
    n = mats[0].shape[-1]
    if center is None:
        center = len(mats) // 2
    length = params.subarray_length if params.subarray_length is not None else max(1, n // 4)
    if not 1 <= length <= n:
        raise ValueError(f"subarray_length must be in [1, N] (got {length} with N={n})")

    subs = np.concatenate([_compounded_subarrays(m, length) for m in mats], axis=0)
    count = subs.shape[0]
    cov = (subs.T @ np.conj(subs)) / count              # R[i,k] = mean s_i s_k*
    w, fallback = minvar_weights(cov, params.diagonal_loading)
    if fallback:
        return beamform_das(mats[center]), True
    center_subs = _compounded_subarrays(mats[center], length)
    return (center_subs @ np.conj(w)).mean(), False


@dataclass
class BeamformedImage:
    """Complex pixel field over an imaging grid, plus per-pixel diagnostics."""

    field: np.ndarray                 # (nz, nx) complex128
    grid: ImagingGrid
    method: str
    diagnostics: dict = field(default_factory=dict)


def _pixel_reducer(method: str, params):
    if method == "das":
        return lambda block: beamform_das(block)
    if method == "jcf":
        p = params if params is not None else JcfParams()
        return lambda block: beamform_jcf(block, p)
    if method == "cf":
        return lambda block: beamform_cf(block)
    if method == "gcf":
        p = params if params is not None else BaselineParams()
        return lambda block: beamform_gcf(block, p)
    if method == "pcf":
        p = params if params is not None else BaselineParams()
        return lambda block: beamform_pcf(block, p)
    if method == "ucf":
        return lambda block: beamform_ucf(block)
    if method == "fdmas":
        p = params if params is not None else BaselineParams()
        return lambda block: beamform_fdmas(block, p)
    raise ValueError(f"unknown method '{method}' (expected one of {METHOD_NAMES})")


def _minvar_image(data: AnalyticDataset, grid: ImagingGrid, params: MinVarParams,
                  threads: int, f_number: float | None) -> BeamformedImage:
    nz, nx = grid.shape
    out = np.zeros((nz, nx), dtype=np.complex128)
    flags = np.zeros((nz, nx), dtype=bool)
    k = params.axial_half_window

    def column(ix: int):
        x_col = np.full(nz, grid.x[ix])
        block = signal_matrix_block(data, x_col, grid.z, grid, f_number)   # (nz, M, N)
        for iz in range(nz):
            lo = max(0, iz - k)
            hi = min(nz - 1, iz + k)
            stack = [block[j] for j in range(lo, hi + 1)]
            value, flag = beamform_minvar(stack, params, center=iz - lo)
            out[iz, ix] = value
            flags[iz, ix] = flag

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(column, range(nx)))
    else:
        for ix in range(nx):
            column(ix)
    return BeamformedImage(out, grid, "minvar", {"minvar_fallback": flags})


def beamform_image(data: AnalyticDataset, grid: ImagingGrid, method: str = "das",
                   params=None, threads: int = 1,
                   f_number: float | None = None) -> BeamformedImage:
    """Beamform the full grid with one method.

    Pixels are processed in fixed-size blocks, so results are bitwise
    reproducible for any `threads` value; worker threads write disjoint
    output slices.
    """
    if method not in METHOD_NAMES:
        raise ValueError(f"unknown method '{method}' (expected one of {METHOD_NAMES})")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if method == "minvar":
        p = params if params is not None else MinVarParams()
        return _minvar_image(data, grid, p, threads, f_number)

    reduce_block = _pixel_reducer(method, params)
    nz, nx = grid.shape
    xx, zz = np.meshgrid(grid.x, grid.z)      # (nz, nx), row-major pixel order
    x_flat = xx.ravel()
    z_flat = zz.ravel()
    out = np.zeros(nz * nx, dtype=np.complex128)

    starts = range(0, x_flat.size, PIXEL_BLOCK)

    def run_block(lo: int):
        hi = min(lo + PIXEL_BLOCK, x_flat.size)
        block = signal_matrix_block(data, x_flat[lo:hi], z_flat[lo:hi], grid, f_number)
        out[lo:hi] = reduce_block(block)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_block, starts))
    else:
        for lo in starts:
            run_block(lo)
    return BeamformedImage(out.reshape(nz, nx), grid, method, {})
