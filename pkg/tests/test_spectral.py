import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nearfield.scenario import FieldGrid
from nearfield.spectral import (
    ComplexField,
    apply_propagator,
    direct_rs_field,
    eval_columns_at_points,
    make_propagator,
    next_pow2,
    spectrum,
)
from nearfield.propagation import BlockerMask, propagate_sweep

from conftest import gaussian_line


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(N^2) direct-sum reference transform."""
    n = x.size
    m = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(m, m) / n)
    return kernel @ x


def test_spectrum_dc_field():
    f = ComplexField(np.ones(64, dtype=complex), dy=1e-3)
    spec = spectrum(f, 64)
    assert abs(spec[0] - 64.0) < 1e-12
    assert np.max(np.abs(spec[1:])) < 1e-12


def test_spectrum_impulse_linear_phase():
    n, j = 64, 9
    x = np.zeros(n, dtype=complex)
    x[j] = 1.0
    spec = spectrum(ComplexField(x, dy=1e-3), n)
    m = np.arange(n)
    expected = np.exp(-2j * np.pi * j * m / n)
    assert np.max(np.abs(spec - expected)) < 1e-12


@pytest.mark.parametrize("n", [17, 64, 256])
def test_spectrum_matches_naive_dft(n):
    rng = np.random.default_rng(7 + n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spec = spectrum(ComplexField(x, dy=1e-3), n)
    assert np.max(np.abs(spec - naive_dft(x))) < 1e-10


def test_spectrum_rejects_short_padding():
    f = ComplexField(np.ones(64, dtype=complex), dy=1e-3)
    with pytest.raises(ValueError):
        spectrum(f, 32)


def test_spectrum_parseval_with_documented_normalisation():
    rng = np.random.default_rng(3)
    n, p = 100, 256
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = ComplexField(x, dy=1.3e-3)
    spec = spectrum(f, p)
    df = 1.0 / (p * f.dy)
    lhs = np.sum(np.abs(x) ** 2) * f.dy
    rhs = f.dy**2 * np.sum(np.abs(spec) ** 2) * df
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_propagator_on_axis_phase(lam100):
    dx = 0.01
    p = make_propagator(dx, 0.0, lam100, 128, lam100 / 2)
    assert p.H[0] == pytest.approx(np.exp(-2j * np.pi * dx / lam100), abs=1e-14)


def test_tilted_reduces_to_untilted(lam100):
    p0 = make_propagator(5e-3, 0.0, lam100, 256, lam100 / 2)
    # the tilted expression evaluated at theta = 0, written out explicitly
    fy = np.fft.fftfreq(256, lam100 / 2)
    u = lam100 * fy
    prop = np.abs(u) <= 1
    href = np.empty(256, dtype=complex)
    href[prop] = np.exp(-1j * 2 * np.pi * (5e-3 / lam100) * np.sqrt(1 - u[prop] ** 2))
    href[~prop] = np.exp(-2 * np.pi * (5e-3 / lam100) * np.sqrt(u[~prop] ** 2 - 1))
    assert np.array_equal(p0.H, href)


def test_evanescent_decay_value(lam100):
    # |lambda * f_y| = 2 at one-step distance of one wavelength
    dy = lam100 / 4
    p = make_propagator(lam100, 0.0, lam100, 64, dy)
    fy = np.fft.fftfreq(64, dy)
    idx = int(np.argmin(np.abs(np.abs(lam100 * fy) - 2.0)))
    assert abs(lam100 * fy[idx]) == pytest.approx(2.0, rel=1e-12)
    assert abs(p.H[idx]) == pytest.approx(math.exp(-2 * math.pi * math.sqrt(3.0)), rel=1e-12)


def test_propagator_magnitudes(lam100):
    p = make_propagator(0.03, 0.3, lam100, 512, lam100 / 2)
    fy = np.fft.fftfreq(512, lam100 / 2)
    u = np.abs(lam100 * fy * math.cos(0.3))
    assert np.allclose(np.abs(p.H[u <= 1]), 1.0, atol=1e-14)
    assert np.all(np.abs(p.H[u > 1]) < 1.0)


def test_propagator_rejects_steep_tilt(lam100):
    with pytest.raises(ValueError):
        make_propagator(0.01, math.pi / 2, lam100, 64, lam100 / 2)


def test_apply_zero_field(lam100):
    p = make_propagator(0.01, 0.0, lam100, 256, lam100 / 2)
    f = ComplexField(np.zeros(256, dtype=complex), dy=lam100 / 2)
    out = apply_propagator(f, p)
    assert np.all(out.samples == 0)


def test_semigroup_on_padded_grid(lam100):
    rng = np.random.default_rng(11)
    n = 512
    dy = lam100 / 2
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    f = ComplexField(x, dy=dy)
    p1 = make_propagator(5e-3, 0.0, lam100, n, dy)
    p2 = make_propagator(10e-3, 0.0, lam100, n, dy)
    twice = apply_propagator(apply_propagator(f, p1), p1)
    once = apply_propagator(f, p2)
    assert np.max(np.abs(twice.samples - once.samples)) < 1e-12 * np.abs(x).max()


def _band_limit(x: np.ndarray, dy: float, lam: float) -> np.ndarray:
    spec = np.fft.fft(x)
    fy = np.fft.fftfreq(x.size, dy)
    spec[np.abs(lam * fy) >= 0.95] = 0.0
    return np.fft.ifft(spec)


def test_invertibility_band_limited(lam100):
    rng = np.random.default_rng(5)
    n, dy = 512, lam100 / 2
    x = _band_limit(rng.standard_normal(n) + 1j * rng.standard_normal(n), dy, lam100)
    f = ComplexField(x, dy=dy)
    fwd = make_propagator(0.02, 0.0, lam100, n, dy)
    back = make_propagator(-0.02, 0.0, lam100, n, dy)
    out = apply_propagator(apply_propagator(f, fwd), back)
    assert np.max(np.abs(out.samples - x)) < 1e-10


def test_unitarity_on_propagating_band(lam100):
    rng = np.random.default_rng(6)
    n, dy = 512, lam100 / 2
    x = _band_limit(rng.standard_normal(n) + 1j * rng.standard_normal(n), dy, lam100)
    f = ComplexField(x, dy=dy)
    p = make_propagator(0.04, 0.0, lam100, n, dy)
    out = apply_propagator(f, p)
    e_in = np.sum(np.abs(np.fft.fft(x)) ** 2)
    e_out = np.sum(np.abs(np.fft.fft(out.samples)) ** 2)
    assert e_out == pytest.approx(e_in, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    a_re=st.floats(-2, 2), a_im=st.floats(-2, 2),
    b_re=st.floats(-2, 2), b_im=st.floats(-2, 2),
    seed=st.integers(0, 1000),
)
def test_linearity(a_re, a_im, b_re, b_im, seed):
    lam100 = 299792458.0 / 100e9
    rng = np.random.default_rng(seed)
    n, dy = 128, lam100 / 2
    e1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    e2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a = complex(a_re, a_im)
    b = complex(b_re, b_im)
    p = make_propagator(7e-3, 0.0, lam100, 256, dy)
    lhs = apply_propagator(ComplexField(a * e1 + b * e2, dy=dy), p).samples
    rhs = a * apply_propagator(ComplexField(e1, dy=dy), p).samples + b * apply_propagator(
        ComplexField(e2, dy=dy), p
    ).samples
    scale = max(1.0, np.abs(lhs).max())
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * scale * 10


def test_gaussian_waist_after_one_rayleigh_range(phys100, lam100):
    w0 = 0.02
    x_r = math.pi * w0**2 / lam100
    grid = FieldGrid.from_extents(Lx=x_r * 1.05, Ly=0.4, dy=lam100 / 2)
    src = ComplexField(gaussian_line(grid, w0), dy=grid.dy, y_offset=grid.y0)
    cmap = propagate_sweep(src, BlockerMask(), grid, phys100, apodization_width=0.0)
    k = int(round(x_r / grid.dx))
    intensity = np.abs(cmap.columns[k]) ** 2
    ys = grid.y_coords()
    mean = np.sum(intensity * ys) / intensity.sum()
    w_est = 2.0 * math.sqrt(np.sum(intensity * (ys - mean) ** 2) / intensity.sum())
    assert w_est == pytest.approx(w0 * math.sqrt(2.0), rel=0.01)


def test_rs_point_source_phase(lam100):
    k = 2 * math.pi / lam100
    n, dy = 64, lam100 / 2
    x = np.zeros(n, dtype=complex)
    j = 31
    x[j] = 1.0
    src = ComplexField(x, dy=dy, y_offset=-(n // 2) * dy)
    r = 0.25
    target_y = src.y_offset + j * dy
    out = direct_rs_field(src, 0.0, [(r, target_y)], k)
    expected_phase = -k * r + np.angle(1j * k + 1.0 / r)
    diff = (np.angle(out[0]) - expected_phase + math.pi) % (2 * math.pi) - math.pi
    assert abs(diff) < 1e-9


def test_rs_zero_source(lam100):
    src = ComplexField(np.zeros(32, dtype=complex), dy=lam100 / 2)
    out = direct_rs_field(src, 0.0, [(0.1, 0.0), (0.2, 0.05)], 2 * math.pi / lam100)
    assert np.all(out == 0)


def test_rs_rejects_targets_behind_source(lam100):
    src = ComplexField(np.ones(32, dtype=complex), dy=lam100 / 2)
    with pytest.raises(ValueError):
        direct_rs_field(src, 0.5, [(0.4, 0.0)], 2 * math.pi / lam100)


def test_eval_columns_matches_grid_nodes(phys100, lam100):
    grid = FieldGrid.from_extents(Lx=0.1, Ly=0.2, dy=lam100 / 2)
    src = ComplexField(gaussian_line(grid, 0.03), dy=grid.dy, y_offset=grid.y0)
    cmap = propagate_sweep(src, BlockerMask(), grid, phys100, apodization_width=0.0)
    ks = [3, 17, 40]
    js = [10, 80, 100]
    pts = [(k * grid.dx, grid.y0 + j * grid.dy) for k in ks for j in js]
    vals = eval_columns_at_points(cmap.columns, grid.dx, grid.dy, grid.y0, lam100, pts)
    expected = np.array([cmap.columns[k, j] for k in ks for j in js])
    assert np.max(np.abs(vals - expected)) < 1e-9 * np.abs(expected).max()


def test_next_pow2():
    assert next_pow2(1) == 1
    assert next_pow2(2) == 2
    assert next_pow2(3) == 4
    assert next_pow2(1024) == 1024
    assert next_pow2(1025) == 2048
