"""
Тесты специальных функций полуцелого порядка и сферических гармоник.
Эталоны: scipy.special и замкнутые формы.
"""

import math

import numpy as np
import pytest
from scipy import special

from shellnls.core.errors import DomainError, OrderError
from shellnls.core.specfun import (
    L_MAX_SUPPORTED,
    HalfIntOrder,
    bessel_ik_half,
    bessel_ik_product,
    bessel_j_half,
    bessel_j_half_series,
    bessel_j_half_table,
    legendre_index,
    legendre_table,
    log_bessel_k_half,
    sph_harm,
    spherical_jn_downward,
    spherical_jn_table,
    spherical_jn_upward,
)


class TestBesselJ:
    """J_{ℓ+1/2} и таблицы сферических функций Бесселя."""

    def test_order_zero_closed_form(self):
        """J_{1/2}(x) = √(2/(πx)) sin x."""
        x = np.array([0.1, 1.0, 3.0, 25.0])
        expected = np.sqrt(2.0 / (np.pi * x)) * np.sin(x)
        assert np.allclose(bessel_j_half(0, x), expected, rtol=1e-13, atol=0)

    @pytest.mark.parametrize("ell", [0, 1, 5, 20, 60])
    def test_against_scipy(self, ell):
        """Совпадение с scipy.special.jv на широком диапазоне аргументов."""
        x = np.geomspace(1e-2, 500.0, 400)
        expected = special.jv(ell + 0.5, x)
        scale = np.maximum(np.abs(expected), 1e-300)
        mask = np.abs(expected) > 1e-250
        assert np.max(np.abs(bessel_j_half(ell, x) - expected)[mask] / scale[mask]) < 1e-10

    def test_scalar_returns_float(self):
        assert isinstance(bessel_j_half(3, 2.5), float)

    def test_half_int_order_accepted(self):
        assert bessel_j_half(HalfIntOrder(2), 1.3) == pytest.approx(special.jv(2.5, 1.3), rel=1e-12)

    def test_table_shape(self):
        x = np.linspace(0.5, 4.0, 7)
        assert bessel_j_half_table(6, x).shape == (7, 7)

    def test_table_matches_scipy_spherical(self):
        x = np.geomspace(1e-3, 200.0, 300)
        table = spherical_jn_table(30, x)
        for ell in (0, 7, 30):
            expected = special.spherical_jn(ell, x)
            mask = np.abs(expected) > 1e-250
            rel = np.abs(table[ell] - expected)[mask] / np.abs(expected)[mask]
            assert rel.max() < 1e-10

    def test_upward_and_downward_agree_in_overlap(self):
        """Обе рекурсии совпадают там, где восходящая устойчива (ℓ ≤ x)."""
        x = np.array([20.0, 35.0, 50.0])
        up = spherical_jn_upward(15, x)
        down = spherical_jn_downward(15, x)
        assert np.allclose(up, down, rtol=1e-10, atol=1e-14)

    def test_series_small_argument(self):
        assert bessel_j_half_series(3, 0.5) == pytest.approx(special.jv(3.5, 0.5), rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, np.inf, np.nan])
    def test_non_positive_argument(self, x):
        with pytest.raises(DomainError, match="Аргумент"):
            bessel_j_half(1, x)

    def test_order_above_limit(self):
        with pytest.raises(OrderError, match="превышает предел"):
            bessel_j_half(L_MAX_SUPPORTED + 1, 1.0)

    def test_negative_order(self):
        with pytest.raises(OrderError):
            HalfIntOrder(-1)


class TestModifiedBessel:
    """I_{ℓ+1/2}, K_{ℓ+1/2} и их слитое произведение."""

    @pytest.mark.parametrize("ell", [0, 1, 4, 10])
    @pytest.mark.parametrize("z", [0.05, 1.0, 7.5, 40.0])
    def test_product_against_scipy(self, ell, z):
        expected = special.iv(ell + 0.5, z) * special.kv(ell + 0.5, z)
        assert bessel_ik_product(ell, z) == pytest.approx(expected, rel=1e-11)

    def test_order_zero_closed_form(self):
        """I_{1/2}(z)K_{1/2}(z) = (1 − e^{−2z})/(2z)."""
        z = np.array([0.3, 1.0, 5.0])
        assert np.allclose(bessel_ik_product(0, z), (1.0 - np.exp(-2.0 * z)) / (2.0 * z), rtol=1e-13)

    def test_split_product(self):
        zi, zo = 0.8, 2.3
        expected = special.iv(2.5, zi) * special.kv(2.5, zo)
        assert bessel_ik_product(2, zi, zo) == pytest.approx(expected, rel=1e-11)

    def test_product_large_argument_finite(self):
        """При z = 2000 I и K по отдельности не представимы, произведение ≈ 1/(2z)."""
        value = bessel_ik_product(3, 2000.0)
        assert value == pytest.approx(1.0 / 4000.0, rel=1e-3)

    def test_split_requires_order(self):
        with pytest.raises(DomainError, match="z_in ≤ z_out"):
            bessel_ik_product(0, 2.0, 1.0)

    def test_log_k(self):
        assert log_bessel_k_half(3, 2.0) == pytest.approx(math.log(special.kv(3.5, 2.0)), rel=1e-12)

    def test_pair(self):
        i_val, k_val = bessel_ik_half(1, 1.5)
        assert i_val == pytest.approx(special.iv(1.5, 1.5), rel=1e-11)
        assert k_val == pytest.approx(special.kv(1.5, 1.5), rel=1e-11)

    def test_pair_overflow(self):
        with pytest.raises(OverflowError, match="bessel_ik_product"):
            bessel_ik_half(0, 1000.0)

    def test_split_product_large_arguments(self):
        """e^{z_in − z_out} сокращает экспоненты: I(600)·K(650) без переполнения."""
        expected = special.ive(1.5, 600.0) * special.kve(1.5, 650.0) * math.exp(-50.0)
        assert bessel_ik_product(1, 600.0, 650.0) == pytest.approx(expected, rel=1e-13)

    def test_overflow_reported_not_saturated(self):
        with pytest.raises(OverflowError, match="диапазон double"):
            bessel_ik_product(200, 1e-3)
        with pytest.raises(OverflowError, match="диапазон double"):
            log_bessel_k_half(200, 1e-3)


class TestSphericalHarmonics:
    """Лежандр и Y_{ℓm}."""

    def test_y00(self):
        assert sph_harm(0, 0, 0.3, 1.1) == pytest.approx(1.0 / math.sqrt(4.0 * math.pi))

    def test_y10(self):
        theta = 0.7
        expected = math.sqrt(3.0 / (4.0 * math.pi)) * math.cos(theta)
        assert sph_harm(1, 0, theta, 0.0) == pytest.approx(expected)

    def test_condon_shortley_phase(self):
        """Y_{11} = −√(3/8π) sin θ e^{iφ}."""
        theta, phi = 0.9, 0.4
        expected = -math.sqrt(3.0 / (8.0 * math.pi)) * math.sin(theta) * np.exp(1j * phi)
        assert sph_harm(1, 1, theta, phi) == pytest.approx(expected)

    def test_negative_m_symmetry(self):
        theta, phi = 1.2, 2.1
        assert sph_harm(3, -2, theta, phi) == pytest.approx(np.conj(sph_harm(3, 2, theta, phi)))

    def test_legendre_orthonormality(self):
        """∫ P̄_{ℓm} P̄_{ℓ'm} dx · 2π = δ_{ℓℓ'} для всех m."""
        L = 12
        x, w = np.polynomial.legendre.leggauss(L + 1)
        table = legendre_table(L, x)
        for m in range(L + 1):
            for ell in range(m, L + 1):
                for ell2 in range(m, L + 1):
                    value = 2.0 * np.pi * np.sum(
                        w * table[legendre_index(ell, m)] * table[legendre_index(ell2, m)]
                    )
                    assert value == pytest.approx(1.0 if ell == ell2 else 0.0, abs=1e-12)

    def test_invalid_m(self):
        with pytest.raises(DomainError, match="превышает"):
            sph_harm(2, 3, 0.1, 0.1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
