"""Virtual sources: reflectors, rough surfaces and RIS panels re-cast as apertures.

A segment illuminated on one side becomes a secondary source: the incident
field is sampled along the segment, multiplied by the object's reflection
mask, and re-propagated into the incident half-space in a frame whose
x-axis is the illuminated side's outward normal. Sampling along the
frame's own transverse axis makes the segment an exact source line for
that frame, so the specular image geometry falls out of the coordinate
handling with no tilt correction left to apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .propagation import (
    SEGMENT_FOOTPRINT_DIAGONALS,
    BlockerMask,
    propagate_sweep,
    rasterize_blockers,
)
from .scenario import (
    Blocker,
    PhaseModel,
    Reflector,
    RisPanel,
    RoughnessProfile,
    Scenario,
)
from .spectral import (
    ComplexField,
    CoverageMap,
    apply_propagator,
    default_padded_length,
    eval_columns_at_points,
    make_propagator,
    next_pow2,
)


@dataclass(frozen=True)
class LocalFrame:
    """Rigid frame: local x-axis at `rotation` from global +x, based at `origin`."""

    origin: tuple[float, float]
    rotation: float  # radians in (-pi, pi]
    normal_sign: int = 1

    def __post_init__(self):
        r = self.rotation
        if not -math.pi < r <= math.pi + 1e-12:
            r = math.atan2(math.sin(r), math.cos(r))
            object.__setattr__(self, "rotation", r)

    def _rot(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([[c, -s], [s, c]])

    def to_global(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return p @ self._rot().T + np.asarray(self.origin)

    def to_local(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return (p - np.asarray(self.origin)) @ self._rot()

    @property
    def is_identity(self) -> bool:
        return abs(self.rotation) < 1e-12


@dataclass(frozen=True)
class LocalGrid:
    """Grid of a rotated sweep domain; y0 is the y of row 0 in frame coordinates."""

    dx: float
    dy: float
    Kx: int
    Ny: int
    y0: float

    def x_coords(self) -> np.ndarray:
        return self.dx * np.arange(self.Kx)

    def y_coords(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.Ny)


@dataclass(frozen=True)
class VirtualSource:
    """A reflected/reshaped aperture with its own propagation frame."""

    field: ComplexField
    frame: LocalFrame
    bounce_depth: int = 1
    parent_object: Optional[str] = None

    def __post_init__(self):
        if self.bounce_depth < 1:
            raise ValueError("bounce_depth must be >= 1")


def segment_frame(obj, side: int) -> LocalFrame:
    """Frame whose x-axis is the outward normal of the given side of a segment.

    side +1 picks the normal at `orientation` from +x; -1 the opposite
    face. The frame's transverse axis runs along the segment; for the two
    sides the sample orders are mutually reversed, which is exactly the
    mirroring a specular image requires.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    rot = obj.orientation if side == 1 else obj.orientation + math.pi
    return LocalFrame(origin=(obj.center[0], obj.center[1]), rotation=rot, normal_sign=side)


def segment_offsets(obj, dy: float) -> np.ndarray:
    """Sample offsets along the segment at spacing dy, kept inside its extent."""
    n = max(2, int(math.floor(obj.length / dy)) + 1)
    return (np.arange(n) - (n - 1) / 2.0) * dy


def default_standoff(dx: float, dy: float) -> float:
    """Sampling line offset clearing a segment's own rasterized footprint."""
    return 0.5 * SEGMENT_FOOTPRINT_DIAGONALS * math.hypot(dx, dy) + 2.0 * max(dx, dy)


def incident_side(obj, source_point) -> int:
    """Which face of a segment looks toward a radiating point: +1, -1, or 0."""
    n = (math.cos(obj.orientation), math.sin(obj.orientation))
    d = (source_point[0] - obj.center[0]) * n[0] + (source_point[1] - obj.center[1]) * n[1]
    if abs(d) < 1e-12:
        return 0
    return 1 if d > 0 else -1


def sample_incident_field(
    cmap: CoverageMap,
    obj,
    side: int,
    wavelength: float,
    map_frame: Optional[LocalFrame] = None,
    standoff: Optional[float] = None,
    fill_outside: Optional[complex] = None,
) -> ComplexField:
    """Incident field on a segment, sampled from a computed coverage map.

    Values are taken on a line offset by `standoff` toward the incident
    side (clearing the segment's own opaque rasterization) and walked back
    onto the segment with an exact spectral step, so magnitude and phase
    land on the surface itself. Sampling uses exact spectral evaluation of
    the map columns. Sample order follows the side's frame.

    `fill_outside`, when given, substitutes that value for sample points
    outside the map instead of raising.
    """
    g = cmap.grid
    frame = segment_frame(obj, side)
    offs = segment_offsets(obj, g.dy)
    s0 = standoff if standoff is not None else default_standoff(g.dx, g.dy)
    # Sample past both segment ends: the spectral back-step diffracts the
    # line's hard ends, so a margin keeps the returned samples clean.
    margin = int(math.ceil(3.0 * s0 / g.dy)) if s0 > 0.0 else 0
    ext = np.concatenate(
        [offs[0] - g.dy * np.arange(margin, 0, -1), offs, offs[-1] + g.dy * np.arange(1, margin + 1)]
    )
    local_pts = np.column_stack([np.full(ext.size, s0), ext])
    pts = frame.to_global(local_pts)
    if map_frame is not None:
        pts = map_frame.to_local(pts)

    x_max = (g.Kx - 1) * g.dx
    y_max = g.y0 + (g.Ny - 1) * g.dy
    inside = (
        (pts[:, 0] >= -1e-9 * g.dx)
        & (pts[:, 0] <= x_max + 1e-9 * g.dx)
        & (pts[:, 1] >= g.y0 - 1e-9 * g.dy)
        & (pts[:, 1] <= y_max + 1e-9 * g.dy)
    )
    core = inside[margin : margin + offs.size]
    if not core.all() and fill_outside is None:
        raise ValueError("segment (with standoff) extends outside the map")
    vals = np.full(ext.size, 0.0 if fill_outside is None else fill_outside, dtype=np.complex128)
    if inside.any():
        vals[inside] = eval_columns_at_points(
            cmap.columns, g.dx, g.dy, g.y0, wavelength, pts[inside]
        )

    field = ComplexField(samples=vals, dy=g.dy, y_offset=ext[0])
    if s0 > 0.0:
        prop = make_propagator(s0, 0.0, wavelength, next_pow2(2 * ext.size), g.dy)
        field = apply_propagator(field, prop)
    return ComplexField(
        samples=field.samples[margin : margin + offs.size], dy=g.dy, y_offset=offs[0]
    )


def make_specular_source(
    incident: ComplexField, reflector: Reflector, side: int, parent_object: Optional[str] = None
) -> VirtualSource:
    """Mirror reflection: the incident line scaled by the reflection coefficient.

    The returned source radiates back into the incident half-space; its
    frame encodes the mirrored sample geometry (see segment_frame).
    """
    samples = reflector.reflection_coefficient * incident.samples
    return VirtualSource(
        field=ComplexField(samples=samples, dy=incident.dy, y_offset=incident.y_offset),
        frame=segment_frame(reflector, side),
        parent_object=parent_object,
    )


def surface_heights(n: int, spacing: float, profile: RoughnessProfile) -> np.ndarray:
    """Deterministic correlated height samples.

    Gaussian white noise smoothed by a Gaussian kernel of standard
    deviation L_c/sqrt(2) (circular boundary), then rescaled so the sample
    standard deviation equals h_rms exactly. The implied height
    autocorrelation is exp(-tau^2 / (2*L_c^2)), whose 1/e lag is
    sqrt(2)*L_c.
    """
    rng = np.random.default_rng(profile.seed)
    noise = rng.standard_normal(n)
    if profile.h_rms == 0.0:
        return np.zeros(n)
    sigma_samples = (profile.correlation_length / math.sqrt(2.0)) / spacing
    smooth = gaussian_filter1d(noise, sigma=sigma_samples, mode="wrap")
    std = smooth.std()
    if std == 0.0:
        return np.zeros(n)
    return smooth * (profile.h_rms / std)


def rough_phase_factor(heights: np.ndarray, wavelength: float, phase_model: str) -> np.ndarray:
    if phase_model == PhaseModel.CYCLES:
        phase = (2.0 * math.pi) ** 2 * heights / wavelength
    elif phase_model == PhaseModel.TWO_WAY:
        phase = 4.0 * math.pi * heights / wavelength
    else:
        raise ValueError(f"unknown phase model {phase_model!r}")
    return np.exp(1j * phase)


def make_rough_source(
    incident: ComplexField,
    reflector: Reflector,
    side: int,
    wavelength: float,
    parent_object: Optional[str] = None,
) -> VirtualSource:
    """Diffuse reflection: specular source times a seeded random phase screen.

    h_rms = 0 reduces exactly to the specular source.
    """
    if reflector.roughness is None:
        raise ValueError("reflector carries no roughness profile")
    base = make_specular_source(incident, reflector, side, parent_object)
    heights = surface_heights(base.field.samples.size, incident.dy, reflector.roughness)
    factor = rough_phase_factor(heights, wavelength, reflector.roughness.phase_model)
    samples = base.field.samples * factor
    return VirtualSource(
        field=ComplexField(samples=samples, dy=incident.dy, y_offset=incident.y_offset),
        frame=base.frame,
        parent_object=parent_object,
    )


def make_ris_source(
    incident: ComplexField, panel: RisPanel, side: int = 1, parent_object: Optional[str] = None
) -> VirtualSource:
    """Programmable reflection: per-element amplitude and phase mask.

    Each incident sample is scaled by the mask of the element whose extent
    contains it. Phases are radians; amplitudes in [0, 1].
    """
    offs = np.arange(incident.samples.size) * incident.dy + incident.y_offset
    spacing = panel.length / panel.element_count
    idx = np.clip(
        np.floor((offs + panel.length / 2.0) / spacing).astype(int), 0, panel.element_count - 1
    )
    mask = panel.amplitudes[idx] * np.exp(1j * panel.phases[idx])
    return VirtualSource(
        field=ComplexField(
            samples=incident.samples * mask, dy=incident.dy, y_offset=incident.y_offset
        ),
        frame=segment_frame(panel, side),
        parent_object=parent_object,
    )


def obstacles_for(scenario: Scenario, exclude_id: Optional[str] = None) -> list[Blocker]:
    """Everything that attenuates a sweep: blockers plus opaque-ish segments.

    Reflector and RIS segments block with their transmittance (default
    opaque) over an anti-leak footprint a few grid diagonals wide. The
    sweep that radiates FROM a segment excludes that segment itself via
    exclude_id ("reflector[i]" / "ris[j]").
    """
    g = scenario.grid
    t_seg = SEGMENT_FOOTPRINT_DIAGONALS * math.hypot(g.dx, g.dy)
    obs: list[Blocker] = list(scenario.blockers)
    for i, r in enumerate(scenario.reflectors):
        if exclude_id == f"reflector[{i}]":
            continue
        obs.append(
            Blocker(
                center=r.center,
                length=r.length,
                thickness=t_seg,
                orientation=r.orientation,
                attenuation=r.transmittance,
            )
        )
    for i, p in enumerate(scenario.ris):
        if exclude_id == f"ris[{i}]":
            continue
        obs.append(
            Blocker(
                center=p.center,
                length=p.length,
                thickness=t_seg,
                orientation=p.orientation,
                attenuation=0.0,
            )
        )
    return obs


def local_domain_grid(frame: LocalFrame, scenario: Scenario, src_y_offset: float, src_n: int):
    """Grid covering the global domain's bounding box in frame coordinates.

    Row positions are snapped so the source samples land exactly on grid
    rows. Returns (grid, source_row_offset) or None when the half-space
    ahead of the source line does not intersect the domain.
    """
    g = scenario.grid
    corners = np.array(
        [[0.0, g.y0], [0.0, -g.y0], [g.Lx, g.y0], [g.Lx, -g.y0]]
    )
    local = frame.to_local(corners)
    x_max = float(local[:, 0].max())
    if x_max <= 0.0:
        return None
    y_lo = float(local[:, 1].min())
    y_hi = float(local[:, 1].max())
    y_lo = min(y_lo, src_y_offset)
    y_hi = max(y_hi, src_y_offset + (src_n - 1) * g.dy)
    m = int(math.ceil((src_y_offset - y_lo) / g.dy - 1e-9))
    y0 = src_y_offset - m * g.dy
    Ny = int(math.ceil((y_hi - y0) / g.dy - 1e-9)) + 1
    Kx = int(math.floor(x_max / g.dx + 1e-9)) + 1
    return LocalGrid(dx=g.dx, dy=g.dy, Kx=Kx, Ny=max(Ny, 2), y0=y0), m


def sweep_virtual_source(
    vs: VirtualSource, scenario: Scenario, exclude_id: Optional[str] = None
) -> Optional[CoverageMap]:
    """Propagate a virtual source across its half-space in its own frame.

    The global object list (minus the source's own parent segment) is
    re-rasterized into the frame, and the march runs along the frame's
    x-axis with the ordinary on-axis transfer function; the frame rotation
    itself carries the tilt. Returns None when nothing lies ahead.
    """
    if exclude_id is None:
        exclude_id = vs.parent_object
    fld = vs.field
    sized = local_domain_grid(vs.frame, scenario, fld.y_offset, fld.samples.size)
    if sized is None:
        return None
    grid, row = sized
    source = np.zeros(grid.Ny, dtype=np.complex128)
    source[row : row + fld.samples.size] = fld.samples
    mask = rasterize_blockers(
        obstacles_for(scenario, exclude_id),
        grid,
        to_global=vs.frame.to_global,
        to_local=vs.frame.to_local,
    )
    return propagate_sweep(
        ComplexField(samples=source, dy=grid.dy, y_offset=grid.y0),
        mask,
        grid,
        scenario.physical,
        theta=0.0,
        padding_factor=scenario.solver.padding_factor,
        apodization_width=scenario.solver.apodization_width,
    )


# Sub-cell refinement factors for map resampling. The carrier oscillates at
# one wavelength while the grid samples at lambda/2, so direct bilinear
# resampling is useless; an 8x spectrally refined lattice keeps bilinear
# phase error around 0.02 rad.
_OVERSAMPLE = 8


def _refined_lines(spec: np.ndarray, H_steps: np.ndarray, ov: int) -> np.ndarray:
    """Sub-step/fine-y field lattice from one column's padded spectrum.

    Row t is the column propagated by t/ov of a step, transversely refined
    ov-fold by mid-spectrum zero padding (Nyquist bin split across both
    halves).
    """
    P = spec.size
    n_steps = H_steps.shape[0]
    padded = np.zeros((n_steps, ov * P), dtype=np.complex128)
    stepped = spec[None, :] * H_steps
    half = P // 2
    padded[:, :half] = stepped[:, :half]
    padded[:, half] = 0.5 * stepped[:, half]
    padded[:, ov * P - half] = 0.5 * stepped[:, half]
    padded[:, ov * P - half + 1 :] = stepped[:, half + 1 :]
    return np.fft.ifft(padded, axis=1) * ov


def accumulate_into_global(
    local: CoverageMap,
    frame: LocalFrame,
    target: CoverageMap,
    wavelength: float,
) -> CoverageMap:
    """Add a local-frame map into the global map (in place) and return it.

    Global cells inside the local half-space domain receive the resampled
    local field; cells outside are untouched. Aligned identity frames
    reduce to plain cell-wise addition; rotated frames go through a
    spectrally oversampled lattice with bilinear gathers.
    """
    lg, gg = local.grid, target.grid

    if frame.is_identity:
        ox, oy = frame.origin
        kf = ox / gg.dx
        jf = (oy + lg.y0 - gg.y0) / gg.dy
        k0, j0 = round(kf), round(jf)
        if abs(kf - k0) < 1e-9 and abs(jf - j0) < 1e-9 and abs(lg.dx - gg.dx) < 1e-15 and abs(lg.dy - gg.dy) < 1e-15:
            ks = max(0, k0)
            ke = min(gg.Kx, k0 + lg.Kx)
            js = max(0, j0)
            je = min(gg.Ny, j0 + lg.Ny)
            if ks < ke and js < je:
                target.columns[ks:ke, js:je] += local.columns[
                    ks - k0 : ke - k0, js - j0 : je - j0
                ]
            return target

    # General path: restrict to the global bbox of the local domain.
    lx_max = (lg.Kx - 1) * lg.dx
    ly_max = lg.y0 + (lg.Ny - 1) * lg.dy
    corners_l = np.array([[0, lg.y0], [0, ly_max], [lx_max, lg.y0], [lx_max, ly_max]])
    corners_g = frame.to_global(corners_l)
    k_lo = max(0, int(np.floor(corners_g[:, 0].min() / gg.dx)))
    k_hi = min(gg.Kx - 1, int(np.ceil(corners_g[:, 0].max() / gg.dx)))
    j_lo = max(0, int(np.floor((corners_g[:, 1].min() - gg.y0) / gg.dy)))
    j_hi = min(gg.Ny - 1, int(np.ceil((corners_g[:, 1].max() - gg.y0) / gg.dy)))
    if k_hi < k_lo or j_hi < j_lo:
        return target

    xs = gg.dx * np.arange(k_lo, k_hi + 1)
    yy = gg.y0 + gg.dy * np.arange(j_lo, j_hi + 1)
    gx, gy = np.meshgrid(xs, yy, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    loc = frame.to_local(pts)
    inside = (
        (loc[:, 0] >= 0.0)
        & (loc[:, 0] <= lx_max + 1e-9 * lg.dx)
        & (loc[:, 1] >= lg.y0 - 1e-9 * lg.dy)
        & (loc[:, 1] <= ly_max + 1e-9 * lg.dy)
    )
    if not inside.any():
        return target

    ov = _OVERSAMPLE
    P = next_pow2(2 * lg.Ny)
    fy = np.fft.fftfreq(P, d=lg.dy)
    u = wavelength * fy
    prop_band = np.abs(u) <= 1.0
    root_p = np.sqrt(np.maximum(0.0, 1.0 - u**2))
    root_e = np.sqrt(np.maximum(0.0, u**2 - 1.0))
    scale = 2.0 * math.pi / wavelength
    deltas = (np.arange(ov + 1) * lg.dx / ov)[:, None]
    H_steps = np.where(
        prop_band[None, :],
        np.exp(-1j * scale * deltas * root_p[None, :]),
        np.exp(-scale * deltas * root_e[None, :]),
    )

    xl = loc[inside, 0]
    yl = loc[inside, 1]
    kf = np.clip(np.floor(xl / lg.dx + 1e-12).astype(int), 0, lg.Kx - 1)
    sub = (xl - kf * lg.dx) / (lg.dx / ov)
    s0 = np.clip(np.floor(sub).astype(int), 0, ov - 1)
    wx = sub - s0
    yf = (yl - lg.y0) / (lg.dy / ov)
    j0 = np.clip(np.floor(yf).astype(int), 0, ov * P - 2)
    wy = yf - j0

    vals = np.empty(xl.size, dtype=np.complex128)
    for k in np.unique(kf):
        sel = np.flatnonzero(kf == k)
        spec = np.fft.fft(local.columns[k], n=P)
        lines = _refined_lines(spec, H_steps, ov)
        a, b = s0[sel], s0[sel] + 1
        j, w = j0[sel], wy[sel]
        top = lines[a, j] * (1.0 - w) + lines[a, j + 1] * w
        bot = lines[b, j] * (1.0 - w) + lines[b, j + 1] * w
        vals[sel] = top * (1.0 - wx[sel]) + bot * wx[sel]

    block = target.columns[k_lo : k_hi + 1, j_lo : j_hi + 1]
    flat = block.reshape(-1)
    np.add.at(flat, np.flatnonzero(inside), vals)
    target.columns[k_lo : k_hi + 1, j_lo : j_hi + 1] = flat.reshape(block.shape)
    return target
