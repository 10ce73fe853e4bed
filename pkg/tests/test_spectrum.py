"""Spectrum-model tests against independent high-precision oracles."""

import mpmath
import numpy as np
import pytest

from ipfe.grid import FrequencyGrid
from ipfe.spectrum import (DivergentLambdaError, SpectrumKind,
                           TurbulenceModel, lambda_grid, lambda_total,
                           lambda_total_1d, psd_3d, psd_lattice,
                           psd_transverse)

KOL = TurbulenceModel(SpectrumKind.KOLMOGOROV, 1e-14)
VK = TurbulenceModel(SpectrumKind.VON_KARMAN, 1e-14, 10.0)


def test_kolmogorov_power_law_ratio():
    ratio = (psd_3d(KOL, [0.0, 0.0, 2.0]) / psd_3d(KOL, [0.0, 0.0, 1.0]))
    assert ratio == pytest.approx(2.0 ** (-11.0 / 3.0), rel=1e-12)


def test_zero_cn2_is_zero_everywhere():
    model = TurbulenceModel(SpectrumKind.KOLMOGOROV, 0.0)
    assert psd_3d(model, [0.3, -1.2, 0.7]) == 0.0
    assert psd_transverse(model, 0.0) == 0.0
    vk0 = TurbulenceModel(SpectrumKind.VON_KARMAN, 0.0, 10.0)
    assert lambda_total(vk0) == 0.0
    assert lambda_total_1d(vk0) == 0.0


def test_von_karman_value_mpmath_oracle():
    # independent arbitrary-precision evaluation at |k| = 1 rad/m
    mpmath.mp.dps = 40
    cn2 = mpmath.mpf("1e-14")
    kappa0 = 2 * mpmath.pi / 10
    expected = (mpmath.mpf("0.033") * (2 * mpmath.pi) ** 3 * cn2
                * (1 + kappa0 ** 2) ** (mpmath.mpf(-11) / 6))
    got = psd_3d(VK, [1.0, 0.0, 0.0])
    assert got == pytest.approx(float(expected), rel=1e-13)


def test_transverse_is_3d_slice():
    for a in (0.1, 0.8, 3.0):
        assert psd_transverse(KOL, a) == pytest.approx(
            psd_3d(KOL, [2.0 * np.pi * a, 0.0, 0.0]), rel=1e-14)


def test_von_karman_finite_at_dc():
    expected = (0.033 * (2.0 * np.pi) ** 3 * VK.cn2
                * (2.0 * np.pi / 10.0) ** (-11.0 / 3.0))
    assert psd_transverse(VK, 0.0) == pytest.approx(expected, rel=1e-13)


def test_kolmogorov_singular_at_origin():
    with pytest.raises(ValueError, match="singular at zero frequency"):
        psd_3d(KOL, [0.0, 0.0, 0.0])


def test_lambda_divergent_for_kolmogorov():
    with pytest.raises(DivergentLambdaError, match="divergent"):
        lambda_total(KOL)
    with pytest.raises(DivergentLambdaError):
        lambda_total_1d(KOL)


def test_lambda_total_closed_form():
    kappa0 = 2.0 * np.pi / 10.0
    closed = (0.033 * (2.0 * np.pi) ** 2 * (3.0 / 5.0) * VK.cn2
              * kappa0 ** (-5.0 / 3.0))
    assert lambda_total(VK) == pytest.approx(closed, rel=1e-8)


def test_lambda_total_1d_mpmath_oracle():
    mpmath.mp.dps = 30
    cn2 = mpmath.mpf("1e-14")
    kappa0 = 2 * mpmath.pi / 10

    def integrand(a):
        return (mpmath.mpf("0.033") * (2 * mpmath.pi) ** 3 * cn2
                * ((2 * mpmath.pi * a) ** 2 + kappa0 ** 2)
                ** (mpmath.mpf(-11) / 6))

    oracle = 2 * mpmath.quad(integrand, [0, kappa0 / (2 * mpmath.pi),
                                         mpmath.inf])
    assert lambda_total_1d(VK) == pytest.approx(float(oracle), rel=1e-8)


def test_isotropy_random_rotations():
    rng = np.random.default_rng(7)
    for _ in range(100):
        k = rng.standard_normal(3)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert psd_3d(VK, k) == pytest.approx(psd_3d(VK, q @ k), rel=1e-12)


def test_von_karman_monotonic_in_k():
    k = np.linspace(0.0, 50.0, 400)
    values = VK.psd_magnitude(k)
    assert np.all(np.diff(values) < 0.0)


def test_cn2_scaling_and_linearity():
    double = TurbulenceModel(SpectrumKind.VON_KARMAN, 2e-14, 10.0)
    k = np.array([0.3, 1.0, 12.0])
    assert np.allclose(double.psd_magnitude(k), 2.0 * VK.psd_magnitude(k),
                       rtol=1e-15)
    assert lambda_total(double) == pytest.approx(2.0 * lambda_total(VK),
                                                 rel=1e-12)


def test_inner_scale_rolloff():
    with_l0 = TurbulenceModel(SpectrumKind.VON_KARMAN, 1e-14, 10.0,
                              inner_scale=0.01)
    k = 30.0
    expected = VK.psd_magnitude(k) * np.exp(-k ** 2 * 0.01 ** 2 / 35.0)
    assert with_l0.psd_magnitude(k) == pytest.approx(expected, rel=1e-14)


def test_model_validation():
    with pytest.raises(ValueError):
        TurbulenceModel(SpectrumKind.VON_KARMAN, 1e-14)  # missing L0
    with pytest.raises(ValueError):
        TurbulenceModel(SpectrumKind.KOLMOGOROV, -1.0)
    with pytest.raises(ValueError):
        TurbulenceModel(SpectrumKind.VON_KARMAN, 1e-14, 10.0,
                        inner_scale=-1.0)


def test_lattice_sum_converges_to_continuum():
    coarse = FrequencyGrid(1, 64, 0.25, 1.55e-6)
    fine = FrequencyGrid(1, 512, 0.0625, 1.55e-6)
    target = lambda_total_1d(VK)
    err_coarse = abs(lambda_grid(VK, coarse) / target - 1.0)
    err_fine = abs(lambda_grid(VK, fine) / target - 1.0)
    assert err_fine < err_coarse
    assert err_fine < 1e-3


def test_psd_lattice_matches_pointwise():
    grid = FrequencyGrid(1, 8, 0.5, 1.55e-6)
    values = psd_lattice(VK, grid)
    for j, a in enumerate(grid.axis_frequencies()):
        assert values[j] == pytest.approx(psd_transverse(VK, a), rel=1e-14)
