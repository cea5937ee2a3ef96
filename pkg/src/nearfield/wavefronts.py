"""Aperture excitation synthesis for the supported wavefront families.

All synthesizers return per-element complex weights over element offsets
s measured along the aperture from its center. Phases follow the package
exp(-i*k*r) / exp(+i*omega*t) convention, under which the conjugate of a
point-source delay, +k*r, converges onto that point. The same sign logic
makes +k*|s|*sin(alpha) the converging axicon ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import (
    AirySpec,
    BesselSpec,
    CustomSpec,
    FocusedSpec,
    GaussianSpec,
    TxAperture,
    WavefrontSpec,
)

DEG = math.pi / 180.0


@dataclass(frozen=True)
class ApertureExcitation:
    """Per-element complex weights and their offsets along the aperture."""

    weights: np.ndarray  # complex
    positions: np.ndarray  # meters, centered on the aperture midpoint

    def __post_init__(self):
        if self.weights.shape != self.positions.shape:
            raise ValueError("weights and positions must align")
        if not np.all(np.isfinite(self.weights.view(np.float64))):
            raise ValueError("weights must be finite")


def element_offsets(aperture: TxAperture) -> np.ndarray:
    """Element centers along the aperture: spacing length/count, centered."""
    n = aperture.element_count
    spacing = aperture.length / n
    return (np.arange(n) - (n - 1) / 2.0) * spacing


def synth_gaussian(aperture: TxAperture, w0: float) -> ApertureExcitation:
    """Amplitude exp(-s^2/w0^2), flat phase."""
    if not w0 > 0:
        raise ValueError("w0 must be > 0")
    s = element_offsets(aperture)
    return ApertureExcitation(weights=np.exp(-(s**2) / w0**2) + 0j, positions=s)


def synth_focused(aperture: TxAperture, focal_length: float, wavelength: float) -> ApertureExcitation:
    """Unit amplitude, conjugate-spherical phase +k*(sqrt(s^2+f^2) - f).

    Focuses at distance f on the aperture axis.
    """
    if not focal_length > 0:
        raise ValueError("focal_length must be > 0")
    s = element_offsets(aperture)
    k = 2.0 * math.pi / wavelength
    phase = k * (np.sqrt(s**2 + focal_length**2) - focal_length)
    return ApertureExcitation(weights=np.exp(1j * phase), positions=s)


def synth_bessel(aperture: TxAperture, axicon_angle: float, wavelength: float) -> ApertureExcitation:
    """Unit amplitude, converging axicon ramp +k*|s|*sin(alpha).

    Produces a non-diffracting central lobe out to roughly
    (length/2)/tan(alpha), with self-reconstruction past partial blockage.
    """
    if not 0 < axicon_angle < math.pi / 2:
        raise ValueError("axicon_angle must be in (0, pi/2)")
    s = element_offsets(aperture)
    k = 2.0 * math.pi / wavelength
    phase = k * np.abs(s) * math.sin(axicon_angle)
    return ApertureExcitation(weights=np.exp(1j * phase), positions=s)


def synth_airy(
    aperture: TxAperture, beta: float, focal_length: float, wavelength: float
) -> ApertureExcitation:
    """Cubic phase 2*pi*beta*(s/(D/2))^3 on top of the focusing law.

    The cubic term is normalised to the half-aperture D/2; the sign of
    beta picks the side the peak trajectory bends toward after the focus.
    """
    if not focal_length > 0:
        raise ValueError("focal_length must be > 0")
    if beta == 0:
        raise ValueError("beta must be nonzero")
    s = element_offsets(aperture)
    k = 2.0 * math.pi / wavelength
    half = aperture.length / 2.0
    phase = 2.0 * math.pi * beta * (s / half) ** 3 + k * (
        np.sqrt(s**2 + focal_length**2) - focal_length
    )
    return ApertureExcitation(weights=np.exp(1j * phase), positions=s)


def load_custom_profile(path, aperture: TxAperture) -> ApertureExcitation:
    """Read one "amplitude phase_degrees" line per element from a side file."""
    p = Path(path)
    lines = [ln for ln in p.read_text().splitlines() if ln.strip()]
    if len(lines) != aperture.element_count:
        raise ValueError(f"expected {aperture.element_count} lines, found {len(lines)}")
    amps = np.empty(len(lines))
    phases = np.empty(len(lines))
    for i, ln in enumerate(lines):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"line {i + 1}: expected 'amplitude phase_deg', got {ln!r}")
        try:
            amps[i] = float(parts[0])
            phases[i] = float(parts[1]) * DEG
        except ValueError as e:
            raise ValueError(f"line {i + 1}: {e}") from e
    return ApertureExcitation(weights=amps * np.exp(1j * phases), positions=element_offsets(aperture))


def synthesize(aperture: TxAperture, wavelength: float, base_dir=".") -> ApertureExcitation:
    """Dispatch on the aperture's wavefront spec."""
    w: WavefrontSpec = aperture.wavefront
    if isinstance(w, GaussianSpec):
        return synth_gaussian(aperture, w.w0)
    if isinstance(w, FocusedSpec):
        return synth_focused(aperture, w.focal_length, wavelength)
    if isinstance(w, BesselSpec):
        return synth_bessel(aperture, w.axicon_angle, wavelength)
    if isinstance(w, AirySpec):
        return synth_airy(aperture, w.beta, w.focal_length, wavelength)
    if isinstance(w, CustomSpec):
        path = Path(w.path)
        if not path.is_absolute():
            path = Path(base_dir) / path
        return load_custom_profile(path, aperture)
    raise TypeError(f"unknown wavefront spec {type(w).__name__}")


def rasterize_excitation(
    exc: ApertureExcitation, n: int, dy: float, y_offset: float
) -> np.ndarray:
    """Place element weights on a sample line; each element takes its nearest cell.

    Elements mapping to the same cell add. Faithful sample-back requires
    element spacing of at least one cell.
    """
    out = np.zeros(n, dtype=np.complex128)
    idx = np.rint((exc.positions - y_offset) / dy).astype(int)
    if np.any(idx < 0) or np.any(idx >= n):
        raise ValueError("excitation extends beyond the sample line")
    np.add.at(out, idx, exc.weights)
    return out
