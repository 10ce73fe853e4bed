"""Phase-screen generation and statistics tests."""

import numpy as np
import pytest

from ipfe.grid import FrequencyGrid
from ipfe.phase_screen import (ScreenRealization, draw_screen,
                               phase_screen_position, screen_statistics)
from ipfe.spectrum import SpectrumKind, TurbulenceModel, psd_lattice

GRID = FrequencyGrid(1, 32, 0.25, 1.55e-6)
MODEL = TurbulenceModel(SpectrumKind.VON_KARMAN, 9.2e-15, 1.0)
DZ = 31.25


def test_zero_cn2_screen_is_zero():
    model = TurbulenceModel(SpectrumKind.VON_KARMAN, 0.0, 1.0)
    screen = draw_screen(model, GRID, DZ, 1)
    assert np.all(screen.n_tilde_hat == 0.0)
    assert np.all(phase_screen_position(screen, GRID.wavenumber) == 0.0)


def test_determinism():
    a = draw_screen(MODEL, GRID, DZ, 42)
    b = draw_screen(MODEL, GRID, DZ, 42)
    assert np.array_equal(a.n_tilde_hat, b.n_tilde_hat)
    c = draw_screen(MODEL, GRID, DZ, 43)
    assert not np.array_equal(a.n_tilde_hat, c.n_tilde_hat)


def test_kolmogorov_rejected():
    with pytest.raises(ValueError, match="divergent"):
        draw_screen(TurbulenceModel(SpectrumKind.KOLMOGOROV, 1e-14),
                    GRID, DZ, 0)


def test_dz_must_be_positive():
    with pytest.raises(ValueError, match="dz"):
        draw_screen(MODEL, GRID, 0.0, 0)


def test_outer_scale_warning():
    big_l0 = TurbulenceModel(SpectrumKind.VON_KARMAN, 9.2e-15, 100.0)
    with pytest.warns(UserWarning, match="outer scale"):
        draw_screen(big_l0, GRID, DZ, 0)


def test_hermitian_symmetry_exact():
    for dim, n in ((1, 32), (2, 16)):
        grid = FrequencyGrid(dim, n, 0.25, 1.55e-6)
        screen = draw_screen(MODEL, grid, DZ, 11)
        coeff = screen.n_tilde_hat
        idx = np.indices(grid.shape)
        mirror = tuple((n - i) % n for i in idx)
        assert np.array_equal(coeff, np.conj(coeff[mirror]))
        phi = phase_screen_position(screen, grid.wavenumber)
        assert np.isrealobj(phi)


def test_per_mode_variance_monte_carlo():
    target = psd_lattice(MODEL, GRID) * DZ * GRID.delta_weight
    site = 20  # a generic non-self-conjugate mode
    n = 2000
    samples = np.array([
        np.abs(draw_screen(MODEL, GRID, DZ, 1000 + s).n_tilde_hat[site]) ** 2
        for s in range(n)])
    mean = samples.mean()
    se = samples.std(ddof=1) / np.sqrt(n)
    assert abs(mean - target[site]) < 4.0 * se


def test_single_pair_cosine_oracle():
    site = 20
    n = GRID.n
    mirror = (n - site) % n
    c = 0.3e-9 * np.exp(0.4j)
    coeff = np.zeros(n, dtype=complex)
    coeff[site] = c
    coeff[mirror] = np.conj(c)
    screen = ScreenRealization(GRID, coeff, DZ, 0)
    k = GRID.wavenumber
    phi = phase_screen_position(screen, k)
    a0 = GRID.axis_frequencies()[site]
    x = GRID.axis_positions()
    oracle = 2.0 * k * abs(c) * GRID.cell * np.cos(2.0 * np.pi * a0 * x
                                                   - np.angle(c))
    assert np.allclose(phi, oracle, atol=1e-12 * np.max(np.abs(oracle)))


def test_rms_scales_with_sqrt_cn2():
    double = TurbulenceModel(SpectrumKind.VON_KARMAN, 2 * MODEL.cn2, 1.0)
    n = 1000
    rms1 = np.empty(n)
    rms2 = np.empty(n)
    for s in range(n):
        p1 = phase_screen_position(draw_screen(MODEL, GRID, DZ, 5000 + s),
                                   GRID.wavenumber)
        p2 = phase_screen_position(draw_screen(double, GRID, DZ, 5000 + s),
                                   GRID.wavenumber)
        rms1[s] = np.sqrt(np.mean(p1 ** 2))
        rms2[s] = np.sqrt(np.mean(p2 ** 2))
    ratio = rms2.mean() / rms1.mean()
    se = ratio * np.sqrt((rms2.std(ddof=1) / rms2.mean()) ** 2
                         + (rms1.std(ddof=1) / rms1.mean()) ** 2) / np.sqrt(n)
    assert abs(ratio - np.sqrt(2.0)) < 3.0 * se


def test_hermitian_violation_detected():
    coeff = np.zeros(GRID.n, dtype=complex)
    coeff[20] = 1e-9  # no mirror partner
    screen = ScreenRealization(GRID, coeff, DZ, 0)
    with pytest.raises(ValueError, match="Hermitian-symmetry violation"):
        phase_screen_position(screen, GRID.wavenumber)


def test_screen_statistics_contract():
    with pytest.raises(ValueError, match="n_samples"):
        screen_statistics(MODEL, GRID, DZ, 50, 0)
    stats = screen_statistics(MODEL, GRID, DZ, 400, 123)
    assert stats.n_samples == 400
    assert stats.max_rel_deviation < 0.5  # loose bound at 400 samples
    assert len(stats.cross_pairs) == 64
    zero = TurbulenceModel(SpectrumKind.VON_KARMAN, 0.0, 1.0)
    stats0 = screen_statistics(zero, GRID, DZ, 400, 123)
    assert np.all(stats0.sample_variance == 0.0)
