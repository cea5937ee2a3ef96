import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nearfield.scenario import (
    Blocker,
    FieldGrid,
    PhaseModel,
    Reflector,
    RisPanel,
    RoughnessProfile,
    scenario_from_dict,
)
from nearfield.spectral import ComplexField, CoverageMap
from nearfield.propagation import BlockerMask, propagate_sweep, rasterize_blockers
from nearfield.scatterers import (
    LocalFrame,
    LocalGrid,
    VirtualSource,
    accumulate_into_global,
    incident_side,
    make_ris_source,
    make_rough_source,
    make_specular_source,
    sample_incident_field,
    segment_frame,
    segment_offsets,
    surface_heights,
    sweep_virtual_source,
)
from nearfield.analysis import normalized_correlation

from conftest import gaussian_line, minimal_scenario_dict


def reflector(center=(0.2, 0.0), length=0.06, orientation=0.0, gamma=1.0, rough=None):
    return Reflector(center=center, length=length, orientation=orientation,
                     reflection_coefficient=gamma, roughness=rough)


@settings(max_examples=50, deadline=None)
@given(
    ox=st.floats(-2, 2), oy=st.floats(-2, 2),
    rot=st.floats(-math.pi + 1e-6, math.pi),
    seed=st.integers(0, 10_000),
)
def test_frame_roundtrip(ox, oy, rot, seed):
    frame = LocalFrame(origin=(ox, oy), rotation=rot)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, size=(200, 2))
    back = frame.to_global(frame.to_local(pts))
    assert np.max(np.abs(back - pts)) < 1e-12


def test_frame_rotation_wrapped():
    f = LocalFrame(origin=(0, 0), rotation=3 * math.pi / 2)
    assert -math.pi < f.rotation <= math.pi


def test_segment_frames_oppose():
    r = reflector(orientation=0.3)
    fp = segment_frame(r, 1)
    fm = segment_frame(r, -1)
    # outward normals point opposite ways; transverse axes reverse
    np_p = fp.to_global([[1.0, 0.0]])[0] - np.array(r.center)
    np_m = fm.to_global([[1.0, 0.0]])[0] - np.array(r.center)
    assert np.allclose(np_p, -np_m, atol=1e-12)
    ty_p = fp.to_global([[0.0, 1.0]])[0] - np.array(r.center)
    ty_m = fm.to_global([[0.0, 1.0]])[0] - np.array(r.center)
    assert np.allclose(ty_p, -ty_m, atol=1e-12)


def test_incident_side_detection():
    r = reflector(orientation=0.0)  # segment along y; +1 normal points +x
    assert incident_side(r, (0.5, 0.0)) == 1
    assert incident_side(r, (0.0, 0.0)) == -1
    assert incident_side(r, (0.2, 5.0)) == 0


def plane_wave_map(grid, phys):
    k = phys.wavenumber
    xs = grid.x_coords()
    cols = np.exp(-1j * k * xs)[:, None] * np.ones(grid.Ny)[None, :]
    return CoverageMap(columns=cols.astype(complex), grid=grid)


def test_sample_incident_plane_wave(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.3, Ly=0.2, dy=lam100 / 2)
    cmap = plane_wave_map(grid, phys100)
    r = reflector(center=(0.2, 0.0), length=0.05, orientation=0.25)
    inc = sample_incident_field(cmap, r, -1, lam100)
    # expected value at each sample point on the segment
    frame = segment_frame(r, -1)
    offs = segment_offsets(r, grid.dy)
    pts = frame.to_global(np.column_stack([np.zeros(offs.size), offs]))
    expected = np.exp(-1j * phys100.wavenumber * pts[:, 0])
    err = np.abs(inc.samples - expected) / np.abs(expected)
    assert np.max(err) < 1e-3


def test_sample_incident_point_source_phase(phys100, lam100):
    # map synthesised directly from the outgoing-wave kernel of a point source
    grid = FieldGrid.from_extents(Lx=0.35, Ly=0.25, dy=lam100 / 2)
    k = phys100.wavenumber
    xs, ys = grid.x_coords(), grid.y_coords()
    src = (0.0, 0.0)
    rr = np.sqrt((xs[:, None] - src[0]) ** 2 + (ys[None, :] - src[1]) ** 2)
    rr = np.maximum(rr, grid.dy)
    cmap = CoverageMap(columns=np.exp(-1j * k * rr) / np.sqrt(rr), grid=grid)
    r = reflector(center=(0.25, 0.02), length=0.04, orientation=0.35)
    inc = sample_incident_field(cmap, r, -1, lam100)
    frame = segment_frame(r, -1)
    offs = segment_offsets(r, grid.dy)
    pts = frame.to_global(np.column_stack([np.zeros(offs.size), offs]))
    dist = np.hypot(pts[:, 0] - src[0], pts[:, 1] - src[1])
    diff = np.angle(inc.samples * np.exp(1j * k * dist))
    diff -= np.median(diff)  # common bias from the 1/sqrt(r) amplitude model
    assert np.max(np.abs(diff)) < 0.05


def test_sample_incident_in_full_shadow(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.3, Ly=0.2, dy=lam100 / 2)
    src = ComplexField(gaussian_line(grid, 0.03), dy=grid.dy, y_offset=grid.y0)
    blocker = Blocker(center=(0.1, 0.0), length=0.25, thickness=0.01,
                      orientation=0.0, attenuation=0.0)
    mask = rasterize_blockers([blocker], grid)
    cmap = propagate_sweep(src, mask, grid, phys100)
    r = reflector(center=(0.2, 0.0), length=0.05)
    inc = sample_incident_field(cmap, r, -1, lam100)
    peak = np.abs(cmap.columns).max()
    assert np.abs(inc.samples).max() <= 1e-6 * peak


def test_specular_zero_gamma(lam100):
    inc = ComplexField(np.ones(32, dtype=complex), dy=lam100 / 2, y_offset=-0.02)
    vs = make_specular_source(inc, reflector(gamma=0.0), -1)
    assert np.all(vs.field.samples == 0)


def test_rough_zero_height_reduces_to_specular(lam100):
    rng = np.random.default_rng(0)
    inc = ComplexField(rng.standard_normal(40) + 1j * rng.standard_normal(40),
                       dy=lam100 / 2, y_offset=-0.03)
    r = reflector(gamma=0.8, rough=RoughnessProfile(h_rms=0.0, correlation_length=3e-3, seed=4))
    spec = make_specular_source(inc, replace(r, roughness=None), -1)
    rough = make_rough_source(inc, r, -1, lam100)
    assert np.max(np.abs(rough.field.samples - spec.field.samples)) < 1e-12


def test_surface_heights_statistics():
    prof = RoughnessProfile(h_rms=0.5e-3, correlation_length=3e-3, seed=12)
    ds = 0.75e-3
    h = surface_heights(4000, ds, prof)
    assert np.std(h) == pytest.approx(0.5e-3, rel=1e-12)
    # autocorrelation 1/e lag of the implied Gaussian ACF exp(-t^2/(2 Lc^2))
    # is sqrt(2) * Lc
    hn = h / np.std(h)
    ac = np.correlate(hn, hn, mode="full")[h.size - 1 :] / h.size
    lag = np.argmax(ac < math.exp(-1.0)) * ds
    assert lag == pytest.approx(math.sqrt(2.0) * 3e-3, rel=0.2)


def test_surface_heights_deterministic():
    prof = RoughnessProfile(h_rms=0.4e-3, correlation_length=2e-3, seed=99)
    a = surface_heights(512, 1e-3, prof)
    b = surface_heights(512, 1e-3, prof)
    assert np.array_equal(a, b)


def test_rough_phase_models_apply_documented_factors(lam100):
    inc = ComplexField(np.ones(64, dtype=complex), dy=lam100 / 2, y_offset=-0.02)
    base = RoughnessProfile(h_rms=0.2e-3, correlation_length=3e-3, seed=5)
    h = surface_heights(64, lam100 / 2, base)
    a = make_rough_source(inc, reflector(rough=base), -1, lam100).field.samples
    b = make_rough_source(
        inc, reflector(rough=replace(base, phase_model=PhaseModel.TWO_WAY)), -1, lam100
    ).field.samples
    assert np.max(np.abs(a - np.exp(1j * (2 * math.pi) ** 2 * h / lam100))) < 1e-12
    assert np.max(np.abs(b - np.exp(1j * 4 * math.pi * h / lam100))) < 1e-12


def test_ris_identity_mask_matches_specular(lam100):
    rng = np.random.default_rng(1)
    inc = ComplexField(rng.standard_normal(50) + 1j * rng.standard_normal(50),
                       dy=lam100 / 2, y_offset=-0.03)
    panel = RisPanel(center=(0.2, 0.0), length=0.06, orientation=0.0, element_count=8,
                     phases=np.zeros(8), amplitudes=np.ones(8))
    mirror = reflector(center=(0.2, 0.0), length=0.06, gamma=1.0)
    a = make_ris_source(inc, panel, -1).field.samples
    b = make_specular_source(inc, mirror, -1).field.samples
    assert np.array_equal(a, b)


def test_ris_zero_amplitude_contributes_nothing(phys100, lam100):
    d = minimal_scenario_dict(
        ris=[{"center_m": [0.2, 0.0], "length_m": 0.05, "element_count": 8,
              "phases_deg": [0.0] * 8, "amplitudes": [0.0] * 8}]
    )
    sc = scenario_from_dict(d)
    from nearfield.solver import solve

    rep = solve(sc)
    assert len(rep.per_bounce) >= 2
    assert np.all(rep.per_bounce[1].columns == 0)


def test_ris_mask_selects_element_by_extent(lam100):
    inc = ComplexField(np.ones(60, dtype=complex), dy=1e-3, y_offset=-0.0295)
    panel = RisPanel(center=(0.2, 0.0), length=0.06, orientation=0.0, element_count=3,
                     phases=np.array([0.0, math.pi / 2, math.pi]),
                     amplitudes=np.array([1.0, 0.5, 0.25]))
    vs = make_ris_source(inc, panel, -1)
    s = vs.field.samples
    assert np.allclose(s[:18], 1.0)
    assert np.allclose(s[22:38], 0.5j)
    assert np.allclose(s[43:], -0.25)


def test_sweep_virtual_source_identity_equals_sweep(phys100, lam100):
    d = minimal_scenario_dict()
    d["grid"] = {"x_extent_m": 0.3, "y_extent_m": 0.2}
    sc = scenario_from_dict(d)
    g = sc.grid
    n = 101
    y_off = -((n - 1) / 2.0) * g.dy
    samples = gaussian_line(
        LocalGrid(dx=g.dx, dy=g.dy, Kx=1, Ny=n, y0=y_off), 0.015
    )
    vs = VirtualSource(
        field=ComplexField(samples, g.dy, y_off),
        frame=LocalFrame(origin=(0.0, 0.0), rotation=0.0),
    )
    local = sweep_virtual_source(vs, sc)
    lg = local.grid
    src = np.zeros(lg.Ny, dtype=complex)
    row = int(round((y_off - lg.y0) / lg.dy))
    src[row : row + n] = samples
    ref = propagate_sweep(
        ComplexField(src, lg.dy, lg.y0), BlockerMask(), lg, phys100,
        padding_factor=sc.solver.padding_factor,
        apodization_width=sc.solver.apodization_width,
    )
    assert np.array_equal(local.columns, ref.columns)


def test_sweep_virtual_source_blocked_downstream(phys100, lam100):
    d = minimal_scenario_dict(
        blockers=[{"center_m": [0.15, 0.0], "length_m": 0.2, "thickness_m": 0.01,
                   "attenuation": 0.0}]
    )
    d["grid"] = {"x_extent_m": 0.3, "y_extent_m": 0.2}
    sc = scenario_from_dict(d)
    g = sc.grid
    n = 81
    y_off = -((n - 1) / 2.0) * g.dy
    vs = VirtualSource(
        field=ComplexField(np.ones(n, dtype=complex), g.dy, y_off),
        frame=LocalFrame(origin=(0.0, 0.0), rotation=0.0),
    )
    local = sweep_virtual_source(vs, sc)
    k_beyond = int(round(0.18 / g.dx))
    # the blocker spans the whole transverse domain; at most one grid row
    # at the snapped local-domain edge can leak around it
    peak = np.abs(local.columns).max()
    assert np.abs(local.columns[k_beyond:]).max() <= 1e-6 * peak


def _zero_map(grid):
    return CoverageMap(columns=np.zeros((grid.Kx, grid.Ny), dtype=complex), grid=grid)


def test_accumulate_zero_local_map(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.1, Ly=0.1, dy=lam100 / 2)
    target = _zero_map(grid)
    local = _zero_map(grid)
    accumulate_into_global(local, LocalFrame((0, 0), 0.0), target, lam100)
    assert np.all(target.columns == 0)


def test_accumulate_identity_frame_exact(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.1, Ly=0.1, dy=lam100 / 2)
    rng = np.random.default_rng(8)
    vals = rng.standard_normal((grid.Kx, grid.Ny)) + 1j * rng.standard_normal((grid.Kx, grid.Ny))
    local = CoverageMap(columns=vals.copy(), grid=grid)
    target = _zero_map(grid)
    accumulate_into_global(local, LocalFrame((0.0, 0.0), 0.0), target, lam100)
    assert np.array_equal(target.columns, vals)


def test_accumulate_opposite_phase_cancels(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.15, Ly=0.15, dy=lam100 / 2)
    src = ComplexField(gaussian_line(grid, 0.02), dy=grid.dy, y_offset=grid.y0)
    local = propagate_sweep(src, BlockerMask(), grid, phys100)
    frame = LocalFrame(origin=(0.01, 0.005), rotation=0.4)
    target = _zero_map(grid)
    accumulate_into_global(local, frame, target, lam100)
    neg = CoverageMap(columns=-local.columns, grid=local.grid)
    accumulate_into_global(neg, frame, target, lam100)
    peak = np.abs(local.columns).max()
    assert np.abs(target.columns).max() <= 1e-10 * peak


def test_specular_mirror_reproduces_image_source(phys100, lam100):
    """45 degree mirror: reflected sweep vs a direct sweep of the mirrored source."""
    d = {
        "physical": {"frequency_ghz": 100.0},
        "grid": {"x_extent_m": 0.5, "y_extent_m": 0.5},
        "tx": [{"center_m": [0.0, 0.0], "length_m": 0.08,
                "wavefront": {"kind": "gaussian", "w0_m": 0.015}}],
        "reflectors": [{"center_m": [0.3, 0.0], "length_m": 0.16,
                        "orientation_deg": 45.0, "reflection_coefficient": 1.0}],
    }
    sc = scenario_from_dict(d)
    from nearfield.solver import solve

    rep = solve(sc)
    g = sc.grid

    # image of the aperture across the mirror line: at (0.3, 0.3) radiating -y
    sc_free = replace(sc, reflectors=())
    from nearfield.wavefronts import synth_gaussian, rasterize_excitation

    tx_img = replace(sc.tx[0], center=(0.3, 0.3))
    exc = synth_gaussian(tx_img, 0.015)
    n = max(2, int(math.floor(tx_img.length / g.dy)) + 1)
    y_off = -((n - 1) / 2.0) * g.dy
    samples = rasterize_excitation(exc, n, g.dy, y_off)
    vs = VirtualSource(field=ComplexField(samples, g.dy, y_off),
                       frame=LocalFrame(origin=(0.3, 0.3), rotation=-math.pi / 2))
    local = sweep_virtual_source(vs, sc_free)
    oracle = _zero_map(g)
    accumulate_into_global(local, vs.frame, oracle, lam100)

    ks = slice(int(0.24 / g.dx), int(0.36 / g.dx))
    js = slice(int((-0.2 - g.y0) / g.dy), int((-0.06 - g.y0) / g.dy))
    got = rep.per_bounce[1].columns[ks, js]
    want = oracle.columns[ks, js]
    assert normalized_correlation(got, want) >= 0.99
