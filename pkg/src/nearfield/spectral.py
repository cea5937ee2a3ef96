"""Spectral propagation core.

The engine decomposes a transverse field line into plane waves with a
discrete Fourier transform, multiplies by a per-frequency transfer
function and transforms back. Spatial frequency bin m of a length-P
transform maps to f_y = m / (P * dy), with negative frequencies in the
upper half of the array (standard DFT layout).

Sign conventions, fixed package-wide: spatial phase of an outgoing
spherical wave is exp(-i*k*r), i.e. an implicit exp(+i*omega*t) time
factor. A forward step of dx multiplies the on-axis component by
exp(-i*2*pi*dx/lambda). Under this convention a component with f_y > 0
carries energy toward -y.

Normalisation: the forward transform is unnormalised and the inverse
carries 1/P, so Parseval reads sum|E|^2 * dy = dy^2 * sum|spectrum|^2 * df_y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexField:
    """Complex field samples along a transverse line.

    Sample j sits at y = y_offset + j * dy. Values are V/m on an
    arbitrary linear scale.
    """

    samples: np.ndarray
    dy: float
    y_offset: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("field must hold at least 2 samples")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("field samples must be finite")
        if not self.dy > 0:
            raise ValueError("dy must be > 0")

    def y_coords(self) -> np.ndarray:
        return self.y_offset + self.dy * np.arange(self.samples.size)


@dataclass(frozen=True)
class SpectralPropagator:
    """Precomputed transfer function H(f_y) for one step size and tilt."""

    dx: float
    theta: float
    wavelength: float
    dy: float
    padded_length: int
    H: np.ndarray


@dataclass(frozen=True)
class CoverageMap:
    """Complex field over the whole domain; column k is the line at x = k*dx."""

    columns: np.ndarray  # (Kx, Ny) complex
    grid: object  # FieldGrid or any grid-like with dx, dy, Kx, Ny, y0

    def __post_init__(self):
        if self.columns.shape != (self.grid.Kx, self.grid.Ny):
            raise ValueError("column matrix does not match the grid")

    def magnitude(self) -> np.ndarray:
        return np.abs(self.columns)


def next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1)).bit_length()


def default_padded_length(n: int, padding_factor: int = 2) -> int:
    """Transform length used by the sweep engine: next power of two >= factor*n."""
    return next_pow2(max(1, padding_factor) * n)


def spectrum(field: ComplexField, padded_length: int) -> np.ndarray:
    """Forward spatial spectrum of the zero-padded field (unnormalised DFT)."""
    n = field.samples.size
    if padded_length < n:
        raise ValueError(f"padded_length {padded_length} < field length {n}")
    buf = np.zeros(padded_length, dtype=np.complex128)
    buf[:n] = field.samples
    return np.fft.fft(buf)


def make_propagator(
    dx: float, theta: float, wavelength: float, padded_length: int, dy: float
) -> SpectralPropagator:
    """Build H(f_y) for a step of dx at tilt theta.

    Propagating components (|lambda*f_y*cos(theta)| < 1) get the pure phase
        exp(-i*2*pi*(dx/(lambda*cos theta)) * sqrt(1 - (lambda*f_y*cos theta)^2))
    and evanescent components decay as a real exponential regardless of the
    sign of dx. theta = 0 is ordinary on-axis propagation; negative dx
    back-propagates.
    """
    if not abs(theta) < math.pi / 2:
        raise ValueError("|theta| must be < pi/2")
    ct = math.cos(theta)
    fy = np.fft.fftfreq(padded_length, d=dy)
    u = wavelength * fy * ct
    scale = 2.0 * math.pi / (wavelength * ct)
    H = np.empty(padded_length, dtype=np.complex128)
    prop = np.abs(u) <= 1.0
    H[prop] = np.exp(-1j * scale * dx * np.sqrt(1.0 - u[prop] ** 2))
    ev = ~prop
    H[ev] = np.exp(-scale * abs(dx) * np.sqrt(u[ev] ** 2 - 1.0))
    return SpectralPropagator(
        dx=dx, theta=theta, wavelength=wavelength, dy=dy, padded_length=padded_length, H=H
    )


def apply_propagator(
    field: ComplexField, prop: SpectralPropagator, window: np.ndarray | None = None
) -> ComplexField:
    """Propagate one step: inverse-transform(spectrum(field) * H).

    The result is truncated back to the input length; `window`, when given,
    is an amplitude taper applied to the truncated line (anti-wraparound
    apodization). Linear in the input field.
    """
    n = field.samples.size
    if prop.padded_length < n:
        raise ValueError("propagator padded_length is smaller than the field")
    if abs(field.dy - prop.dy) > 1e-15 * prop.dy:
        raise ValueError("field dy does not match propagator dy")
    spec = spectrum(field, prop.padded_length)
    out = np.fft.ifft(spec * prop.H)[:n]
    if window is not None:
        out = out * window
    return ComplexField(samples=out, dy=field.dy, y_offset=field.y_offset)


def direct_rs_field(
    source: ComplexField,
    source_x: float,
    target_points,
    k: float,
) -> np.ndarray:
    """Brute-force spherical-wavelet quadrature, the slow reference path.

    Each source sample radiates (dx * exp(-i*k*r) / r^2) * (i*k + 1/r) and
    contributions are summed with weight dy / (2*pi). O(targets x samples);
    used for verification, never inside the sweep engine.
    """
    pts = np.asarray(target_points, dtype=float).reshape(-1, 2)
    if np.any(pts[:, 0] <= source_x):
        raise ValueError("all targets must lie strictly ahead of the source plane")
    ys = source.y_coords()
    dxs = pts[:, 0:1] - source_x
    r = np.sqrt(dxs**2 + (pts[:, 1:2] - ys[None, :]) ** 2)
    kernel = dxs * np.exp(-1j * k * r) / r**2 * (1j * k + 1.0 / r)
    return kernel @ source.samples * (source.dy / (2.0 * math.pi))


def eval_columns_at_points(
    columns: np.ndarray,
    dx: float,
    dy: float,
    y0: float,
    wavelength: float,
    points,
) -> np.ndarray:
    """Evaluate a column map at arbitrary in-plane points, exactly.

    For each point the nearest column at or behind it is forward-stepped by
    the residual distance in the spectral domain and the inverse transform
    is evaluated at the exact y via the shift theorem. This avoids the
    large interpolation error direct bilinear resampling suffers at
    half-wavelength sampling.

    Points outside the map raise ValueError.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    Kx, Ny = columns.shape
    x_max = (Kx - 1) * dx
    if np.any(pts[:, 0] < -1e-9 * dx) or np.any(pts[:, 0] > x_max * (1 + 1e-12) + 1e-9 * dx):
        raise ValueError("point outside the map extent in x")
    P = next_pow2(2 * Ny)
    fy = np.fft.fftfreq(P, d=dy)
    u = wavelength * fy
    prop = np.abs(u) <= 1.0
    root_p = np.sqrt(np.maximum(0.0, 1.0 - u**2))
    root_e = np.sqrt(np.maximum(0.0, u**2 - 1.0))
    scale = 2.0 * math.pi / wavelength

    ks = np.clip(np.floor(pts[:, 0] / dx + 1e-9).astype(int), 0, Kx - 1)
    out = np.empty(pts.shape[0], dtype=np.complex128)
    for k in np.unique(ks):
        sel = np.flatnonzero(ks == k)
        spec = np.fft.fft(columns[k], n=P)
        resid = pts[sel, 0] - k * dx
        # (n_sel, P) step + shift factors; exact for band-limited content
        H = np.where(
            prop[None, :],
            np.exp(-1j * scale * resid[:, None] * root_p[None, :]),
            np.exp(-scale * np.abs(resid[:, None]) * root_e[None, :]),
        )
        shift = np.exp(2j * math.pi * fy[None, :] * (pts[sel, 1] - y0)[:, None])
        out[sel] = (H * shift) @ spec / P
    return out


def eval_map_at_points(cmap: CoverageMap, points, wavelength: float) -> np.ndarray:
    g = cmap.grid
    return eval_columns_at_points(cmap.columns, g.dx, g.dy, g.y0, wavelength, points)
