"""Map comparison metrics and beam diagnostics.

Two complementary similarity measures: RMSE on max-normalised intensities
(point-wise agreement) and the peak of the full normalised 2D
cross-correlation of magnitude maps (structural agreement, insensitive to
rigid shifts). The correlation inputs are zero-meaned and scaled to unit
Frobenius norm so a nonzero map auto-correlates to exactly 1 at zero lag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .spectral import CoverageMap


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    ncc_peak: float
    peak_offset: tuple[int, int]


def _magnitude(m) -> np.ndarray:
    if isinstance(m, CoverageMap):
        return np.abs(m.columns)
    return np.abs(np.asarray(m))


def rmse(map_a, map_b) -> float:
    """Root-mean-square difference of the max-normalised intensities.

    Each map's |E|^2 is divided by its own maximum before differencing,
    so the result lies in [0, 1]. All-zero maps are rejected rather than
    returning NaN.
    """
    ia = _magnitude(map_a) ** 2
    ib = _magnitude(map_b) ** 2
    if ia.shape != ib.shape:
        raise ValueError(f"map dimensions differ: {ia.shape} vs {ib.shape}")
    ma, mb = ia.max(), ib.max()
    if ma == 0.0 or mb == 0.0:
        raise ValueError("cannot normalise an all-zero map")
    d = ia / ma - ib / mb
    return float(np.sqrt(np.mean(d * d)))


def _normalise_for_ncc(mag: np.ndarray) -> np.ndarray:
    z = mag - mag.mean()
    norm = np.linalg.norm(z)
    if norm == 0.0:
        raise ValueError("cannot normalise an all-zero (or constant) map")
    return z / norm


def ncc_peak(map_a, map_b) -> tuple[float, tuple[int, int]]:
    """Peak of the full 2D cross-correlation of normalised magnitude maps.

    Returns (peak value, (lag_x, lag_y)); the lag is the shift of B
    relative to A that maximises overlap. Bounded by 1 in magnitude;
    ncc_peak(A, A) is exactly 1 at lag (0, 0).
    """
    a = _magnitude(map_a)
    b = _magnitude(map_b)
    if a.shape != b.shape:
        raise ValueError(f"map dimensions differ: {a.shape} vs {b.shape}")
    an = _normalise_for_ncc(a)
    bn = _normalise_for_ncc(b)
    corr = fftconvolve(bn, an[::-1, ::-1], mode="full")
    idx = np.unravel_index(np.argmax(corr), corr.shape)
    peak = float(corr[idx])
    lag = (int(idx[0] - (a.shape[0] - 1)), int(idx[1] - (a.shape[1] - 1)))
    return peak, lag


def compare_maps(map_a, map_b) -> MetricsReport:
    peak, lag = ncc_peak(map_a, map_b)
    return MetricsReport(rmse=rmse(map_a, map_b), ncc_peak=peak, peak_offset=lag)


def normalized_correlation(a, b) -> float:
    """Zero-lag correlation of two equal-length magnitude profiles.

    Both inputs are taken by magnitude, zero-meaned and unit-normalised;
    1 means identical shape. Works on 1D profiles and flattened maps.
    """
    av = np.abs(np.asarray(a, dtype=complex)).ravel()
    bv = np.abs(np.asarray(b, dtype=complex)).ravel()
    if av.shape != bv.shape:
        raise ValueError("profiles must share a shape")
    az = av - av.mean()
    bz = bv - bv.mean()
    na, nb = np.linalg.norm(az), np.linalg.norm(bz)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cannot correlate a constant profile")
    return float(np.dot(az, bz) / (na * nb))


@dataclass(frozen=True)
class BeamTrajectory:
    """Per-column peak diagnostics: position, value, and -3 dB width."""

    y_peak: np.ndarray
    peak: np.ndarray  # |E|^2 at the refined peak
    width: np.ndarray  # half-power full width, meters


def beam_trajectory(cmap: CoverageMap) -> BeamTrajectory:
    """Track the intensity peak per column with sub-cell refinement.

    The peak index is refined with a three-point parabola; the width spans
    the half-power crossings on either side (linearly interpolated, clamped
    to the window edge when the profile never drops below half power).
    All-zero columns report position 0, value 0, width 0.
    """
    cols = np.abs(cmap.columns) ** 2
    g = cmap.grid
    Kx, Ny = cols.shape
    y_peak = np.zeros(Kx)
    peak = np.zeros(Kx)
    width = np.zeros(Kx)
    ys = g.y0 + g.dy * np.arange(Ny)
    for k in range(Kx):
        row = cols[k]
        j = int(np.argmax(row))
        pv = row[j]
        if pv == 0.0:
            continue
        dj = 0.0
        if 0 < j < Ny - 1:
            denom = row[j - 1] - 2.0 * row[j] + row[j + 1]
            if denom < 0.0:
                dj = 0.5 * (row[j - 1] - row[j + 1]) / denom
                pv = row[j] - 0.25 * (row[j - 1] - row[j + 1]) * dj
        y_peak[k] = ys[0] + (j + dj) * g.dy
        peak[k] = pv
        half = 0.5 * pv
        right = Ny - 1 - j
        for m in range(j + 1, Ny):
            if row[m] < half:
                frac = (row[m - 1] - half) / (row[m - 1] - row[m])
                right = (m - 1 - j) + frac
                break
        left = j
        for m in range(j - 1, -1, -1):
            if row[m] < half:
                frac = (row[m + 1] - half) / (row[m + 1] - row[m])
                left = (j - m - 1) + frac
                break
        width[k] = (left + right) * g.dy
    return BeamTrajectory(y_peak=y_peak, peak=peak, width=width)
