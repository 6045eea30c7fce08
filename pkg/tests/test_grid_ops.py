import numpy as np
import pytest

from otfssim.errors import StructureError
from otfssim.grid_ops import (
    bccb_from_tf_diagonal,
    bccb_project,
    bccb_to_tf_diagonal,
    block_offset_mask,
    devectorize,
    is_bccb,
    kron_dft_apply,
    kron_dft_matrix,
    vectorize,
)


class TestVectorize:
    def test_column_stacking_2x2(self):
        grid = np.array([[1, 2], [3, 4]], dtype=complex)
        np.testing.assert_array_equal(vectorize(grid), [1, 3, 2, 4])

    def test_zero_grid(self):
        np.testing.assert_array_equal(vectorize(np.zeros((3, 5))), np.zeros(15))

    def test_round_trip_exact(self):
        rng = np.random.default_rng(0)
        grid = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        np.testing.assert_array_equal(devectorize(vectorize(grid), 4, 2), grid)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            devectorize(np.zeros(5), 2, 2)


class TestKronDft:
    def test_impulse_gives_flat_output(self):
        v = np.zeros(4, dtype=complex)
        v[0] = 1.0
        out = kron_dft_apply(v, 2, 2, "forward")
        np.testing.assert_allclose(out, np.full(4, 0.5), atol=1e-14)

    def test_unitary_round_trip(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        back = kron_dft_apply(kron_dft_apply(v, 8, 4, "forward"), 8, 4, "inverse")
        assert np.abs(back - v).max() < 1e-12

    def test_norm_preserved(self):
        rng = np.random.default_rng(2)
        v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        out = kron_dft_apply(v, 8, 4, "forward")
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-12

    def test_matches_dense_matrix(self):
        rng = np.random.default_rng(3)
        m, n = 4, 3
        v = rng.standard_normal(m * n) + 1j * rng.standard_normal(m * n)
        f2 = kron_dft_matrix(m, n)
        np.testing.assert_allclose(kron_dft_apply(v, m, n, "forward"), f2 @ v, atol=1e-12)
        np.testing.assert_allclose(
            kron_dft_apply(v, m, n, "inverse"), f2.conj().T @ v, atol=1e-12
        )

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            kron_dft_apply(np.zeros(4), 2, 2, "sideways")


class TestBccb:
    def test_identity_has_flat_spectrum(self):
        diag = bccb_to_tf_diagonal(np.eye(12, dtype=complex), 4, 3)
        np.testing.assert_allclose(diag, np.ones(12), atol=1e-12)

    def test_circulant_case_matches_dense_product(self):
        # N = 1 reduces BCCB to a plain circulant
        rng = np.random.default_rng(4)
        m, n = 4, 1
        col = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        h = np.empty((m, m), dtype=complex)
        idx = np.arange(m)
        h[idx[:, None], idx[None, :]] = 0
        for i in range(m):
            for j in range(m):
                h[i, j] = col[(i - j) % m]
        f2 = kron_dft_matrix(m, n)
        dense_diag = np.diag(f2 @ h @ f2.conj().T)
        np.testing.assert_allclose(bccb_to_tf_diagonal(h, m, n), dense_diag, atol=1e-12)

    def test_random_bccb_diagonalizes(self):
        rng = np.random.default_rng(5)
        m = n = 4
        spec = rng.standard_normal(m * n) + 1j * rng.standard_normal(m * n)
        h = bccb_from_tf_diagonal(spec, m, n)
        f2 = kron_dft_matrix(m, n)
        tf = f2 @ h @ f2.conj().T
        off = tf - np.diag(np.diag(tf))
        assert np.abs(off).max() < 1e-10
        np.testing.assert_allclose(np.diag(tf), bccb_to_tf_diagonal(h, m, n), atol=1e-10)

    def test_non_bccb_rejected(self):
        rng = np.random.default_rng(6)
        h = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        assert not is_bccb(h, 4, 2)
        with pytest.raises(StructureError):
            bccb_to_tf_diagonal(h, 4, 2)

    def test_projection_is_identity_on_bccb(self):
        rng = np.random.default_rng(7)
        spec = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        h = bccb_from_tf_diagonal(spec, 4, 4)
        np.testing.assert_allclose(bccb_project(h, 4, 4), spec, atol=1e-10)

    def test_projection_is_frobenius_nearest(self):
        # projecting then perturbing any kernel entry moves away from H
        rng = np.random.default_rng(8)
        m = n = 3
        h = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        spec = bccb_project(h, m, n)
        base = np.linalg.norm(h - bccb_from_tf_diagonal(spec, m, n))
        for trial in range(5):
            delta = np.zeros(m * n, dtype=complex)
            delta[rng.integers(0, m * n)] = 0.05 * (1 + 1j)
            perturbed = np.linalg.norm(h - bccb_from_tf_diagonal(spec + np.fft.fft2(
                devectorize(delta, m, n)).reshape(-1, order="F"), m, n))
            assert perturbed >= base


def test_block_offset_mask():
    mask = block_offset_mask(2, 4, np.array([0, 1, 3]))
    # block (i, j) kept iff (i - j) mod 4 in {0, 1, 3}
    for bi in range(4):
        for bj in range(4):
            expected = (bi - bj) % 4 in (0, 1, 3)
            assert mask[2 * bi, 2 * bj] == expected
