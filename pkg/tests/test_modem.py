import numpy as np
import pytest

from otfssim.errors import ConfigurationError
from otfssim.grid_ops import vectorize
from otfssim.modem import add_awgn, cp_add_matrix, cp_remove_matrix, otfs_demodulate, otfs_modulate


class TestModulate:
    def test_impulse_no_cp(self):
        grid = np.zeros((2, 2), dtype=complex)
        grid[0, 0] = 1.0
        s = otfs_modulate(grid, 0)
        np.testing.assert_allclose(s, [1 / np.sqrt(2), 0, 1 / np.sqrt(2), 0], atol=1e-14)

    def test_round_trip_exact(self):
        rng = np.random.default_rng(0)
        m, n, m_cp = 8, 4, 3
        grid = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        y = otfs_demodulate(otfs_modulate(grid, m_cp), m, n, m_cp)
        np.testing.assert_allclose(y, vectorize(grid), atol=1e-13)

    def test_cp_energy_overhead(self):
        rng = np.random.default_rng(1)
        m, n, m_cp = 8, 4, 2
        ratios = []
        for _ in range(300):
            grid = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
            s = otfs_modulate(grid, m_cp)
            ratios.append(np.linalg.norm(s) ** 2 / np.linalg.norm(grid) ** 2)
        assert abs(np.mean(ratios) - (1 + m_cp / m)) < 0.02

    def test_cp_too_long(self):
        with pytest.raises(ConfigurationError):
            otfs_modulate(np.zeros((4, 2), dtype=complex), 4)

    def test_cp_matrices_compose_to_identity(self):
        m, m_cp = 6, 2
        np.testing.assert_array_equal(
            cp_remove_matrix(m, m_cp) @ cp_add_matrix(m, m_cp), np.eye(m)
        )


class TestDemodulate:
    def test_zero_in_zero_out(self):
        y = otfs_demodulate(np.zeros(4 * (8 + 2), dtype=complex), 8, 4, 2)
        np.testing.assert_array_equal(y, np.zeros(32))

    def test_norm_non_expansive(self):
        rng = np.random.default_rng(2)
        r = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        y = otfs_demodulate(r, 8, 4, 2)
        assert np.linalg.norm(y) <= np.linalg.norm(r) + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            otfs_demodulate(np.zeros(10), 8, 4, 2)


class TestAwgn:
    def test_zero_variance_is_identity(self):
        s = np.ones(10, dtype=complex)
        np.testing.assert_array_equal(add_awgn(s, 0.0, 1), s)

    def test_sample_variance(self):
        sigma2 = 0.37
        noisy = add_awgn(np.zeros(10**6, dtype=complex), sigma2, 42)
        assert abs(np.mean(np.abs(noisy) ** 2) / sigma2 - 1) < 0.01

    def test_circular_symmetry(self):
        sigma2 = 2.0
        noisy = add_awgn(np.zeros(10**6, dtype=complex), sigma2, 43)
        assert abs(np.var(noisy.real) / (sigma2 / 2) - 1) < 0.01
        assert abs(np.var(noisy.imag) / (sigma2 / 2) - 1) < 0.01

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            add_awgn(np.zeros(4, dtype=complex), -1.0, 0)


def test_noise_stays_white_through_demodulation():
    # eta_DD = (F_N kron R_cp) eta_DT keeps variance sigma^2 per entry
    rng = np.random.default_rng(3)
    m, n, m_cp = 32, 8, 4
    sigma2 = 0.8
    samples = []
    for _ in range(40):
        eta = add_awgn(np.zeros(n * (m + m_cp), dtype=complex), sigma2, rng)
        samples.append(otfs_demodulate(eta, m, n, m_cp))
    var = np.mean(np.abs(np.concatenate(samples)) ** 2)
    assert abs(var / sigma2 - 1) < 0.02
