import numpy as np
import pytest

from otfssim.channel import (
    ChannelPath,
    ChannelRealization,
    build_dd_matrix,
    build_dt_matrix,
    eva_profile,
    load_profile,
    max_doppler_hz,
    sample_paths,
    truncate,
    truncation_bandwidth,
)
from otfssim.errors import ConfigurationError
from otfssim.grid_ops import devectorize, is_bccb, vectorize
from otfssim.modem import cp_add_matrix, cp_remove_matrix, otfs_demodulate, otfs_modulate

TS = 370.3e-9
FC = 5.9e9


def eva_realization(m, n, rng, doppler_mode="sample", velocity_kmh=500.0):
    prof = eva_profile()
    paths = sample_paths(prof, max_doppler_hz(FC, velocity_kmh), rng)
    return ChannelRealization(
        paths=tuple(paths), m=m, n=n, m_cp=prof.min_cp_length(TS), ts_s=TS,
        doppler_mode=doppler_mode,
    )


def dense_dd_from_dt(ch):
    """Oracle: the (F_N kron R_cp) H_DT (F_N^H kron A_cp) triple product."""
    f_n = np.fft.fft(np.eye(ch.n), norm="ortho")
    left = np.kron(f_n, cp_remove_matrix(ch.m, ch.m_cp))
    right = np.kron(f_n.conj().T, cp_add_matrix(ch.m, ch.m_cp))
    return left @ build_dt_matrix(ch) @ right


class TestProfilesAndPaths:
    def test_max_doppler_paper_value(self):
        assert abs(max_doppler_hz(FC, 500.0) / 2730.0 - 1) < 0.01

    def test_degenerate_single_tap(self):
        from otfssim.channel import PowerDelayProfile

        prof = PowerDelayProfile("flat", (0.0,), (0.0,))
        paths = sample_paths(prof, 0.0, 7)
        assert len(paths) == 1
        assert paths[0].doppler_hz == 0.0

    def test_unit_power_normalization(self):
        rng = np.random.default_rng(0)
        prof = eva_profile()
        total = 0.0
        reps = 10**4
        for _ in range(reps):
            total += sum(abs(p.gain) ** 2 for p in sample_paths(prof, 2730.0, rng))
        assert 0.97 < total / reps < 1.03

    def test_doppler_bounded_by_fdmax(self):
        paths = sample_paths(eva_profile(), 2730.0, 3)
        assert all(abs(p.doppler_hz) <= 2730.0 for p in paths)

    def test_profile_file_round_trip(self, tmp_path):
        path = tmp_path / "prof.txt"
        path.write_text("# delay_ns power_db\n0 0.0\n300 -3.0\n")
        prof = load_profile(path)
        assert prof.delays_ns == (0.0, 300.0)
        assert prof.powers_db == (0.0, -3.0)

    def test_delay_beyond_cp_rejected(self):
        paths = (ChannelPath(gain=1.0, delay_s=5 * TS, doppler_hz=0.0),)
        with pytest.raises(ConfigurationError):
            ChannelRealization(paths=paths, m=16, n=4, m_cp=2, ts_s=TS)


class TestDtMatrix:
    def test_flat_channel_is_identity(self):
        paths = (ChannelPath(gain=1.0, delay_s=0.0, doppler_hz=0.0),)
        ch = ChannelRealization(paths=paths, m=4, n=2, m_cp=1, ts_s=TS)
        np.testing.assert_allclose(build_dt_matrix(ch), np.eye(2 * 5), atol=1e-14)

    def test_pure_delay_shifts(self):
        l = 2
        paths = (ChannelPath(gain=1.0, delay_s=l * TS, doppler_hz=0.0),)
        ch = ChannelRealization(paths=paths, m=6, n=2, m_cp=3, ts_s=TS)
        h = build_dt_matrix(ch)
        rng = np.random.default_rng(1)
        s = rng.standard_normal(2 * 9) + 1j * rng.standard_normal(2 * 9)
        shifted = np.concatenate([np.zeros(l, dtype=complex), s[:-l]])
        np.testing.assert_allclose(h @ s, shifted, atol=1e-13)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(2)
        m, n = 8, 2
        prof_paths = (
            ChannelPath(gain=0.8 - 0.2j, delay_s=1 * TS, doppler_hz=1234.0),
            ChannelPath(gain=0.3 + 0.5j, delay_s=3 * TS, doppler_hz=-2100.0),
        )
        ch = ChannelRealization(paths=prof_paths, m=m, n=n, m_cp=3, ts_s=TS)
        h = build_dt_matrix(ch)
        s = rng.standard_normal(n * (m + 3)) + 1j * rng.standard_normal(n * (m + 3))
        # independent sample-by-sample simulator
        out = np.zeros_like(s)
        for idx in range(len(s)):
            for p in ch.paths:
                l = round(p.delay_s / TS)
                if idx - l >= 0:
                    out[idx] += p.gain * np.exp(
                        2j * np.pi * p.doppler_hz * (idx - l) * TS
                    ) * s[idx - l]
        assert np.abs(h @ s - out).max() < 1e-10


class TestDdMatrix:
    def test_flat_channel_identity(self):
        paths = (ChannelPath(gain=1.0, delay_s=0.0, doppler_hz=0.0),)
        ch = ChannelRealization(paths=paths, m=4, n=4, m_cp=1, ts_s=TS)
        np.testing.assert_allclose(build_dd_matrix(ch), np.eye(16), atol=1e-13)

    def test_single_path_twisted_permutation(self):
        m = n = 4
        m_cp = 1
        nu = 1.0 / (n * (m + m_cp) * TS)  # exactly one Doppler bin
        paths = (ChannelPath(gain=1.0, delay_s=TS, doppler_hz=nu),)
        ch = ChannelRealization(paths=paths, m=m, n=n, m_cp=m_cp, ts_s=TS)
        h = build_dd_matrix(ch)
        mags = np.abs(h)
        # one unit-magnitude entry per row/column, everything else zero
        assert np.allclose(np.sort(mags, axis=1)[:, -1], 1.0, atol=1e-12)
        assert mags.sum() == pytest.approx(m * n, abs=1e-9)
        np.testing.assert_allclose(h, dense_dd_from_dt(ch), atol=1e-12)

    def test_matches_dense_triple_product_eva(self):
        rng = np.random.default_rng(3)
        ch = eva_realization(8, 4, rng)
        np.testing.assert_allclose(build_dd_matrix(ch), dense_dd_from_dt(ch), atol=1e-12)

    def test_consistent_with_modem_path(self):
        rng = np.random.default_rng(4)
        ch = eva_realization(16, 4, rng)
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        via_matrix = build_dd_matrix(ch) @ x
        s = otfs_modulate(devectorize(x, 16, 4), ch.m_cp)
        via_modem = otfs_demodulate(build_dt_matrix(ch) @ s, 16, 4, ch.m_cp)
        assert np.abs(via_matrix - via_modem).max() < 1e-10

    def test_block_mode_is_bccb(self):
        rng = np.random.default_rng(5)
        ch = eva_realization(8, 4, rng, doppler_mode="block")
        assert is_bccb(build_dd_matrix(ch), 8, 4)

    def test_sample_mode_is_block_circulant_but_not_bccb(self):
        rng = np.random.default_rng(6)
        ch = eva_realization(8, 4, rng)
        h = build_dd_matrix(ch)
        blocks = h.reshape(4, 8, 4, 8).transpose(0, 2, 1, 3)
        for d in range(4):
            ref = blocks[d, 0]
            for bj in range(1, 4):
                np.testing.assert_allclose(blocks[(d + bj) % 4, bj], ref, atol=1e-12)
        assert not is_bccb(h, 8, 4)


class TestTruncation:
    def test_bandwidth_paper_values(self):
        assert truncation_bandwidth(2730.0, 64, 16, TS) == 2
        assert truncation_bandwidth(max_doppler_hz(FC, 500.0), 64, 16, TS) == 2
        assert truncation_bandwidth(2730.0, 64, 64, TS) == 5

    def test_bandwidth_vanishing_doppler(self):
        assert truncation_bandwidth(0.0, 64, 16, TS) == 0

    def test_full_window_keeps_everything(self):
        rng = np.random.default_rng(7)
        h = rng.standard_normal((4 * 5, 4 * 5))
        trunc = truncate(h, 2, 4, 5)  # B = (N-1)/2 with N = 5
        assert np.all(trunc.h_resid == 0)
        np.testing.assert_array_equal(trunc.h_sig, h)

    def test_b_zero_on_block_diagonal(self):
        m, n = 3, 4
        h = np.kron(np.eye(n), np.ones((m, m)))
        trunc = truncate(h, 0, m, n)
        assert np.all(trunc.h_resid == 0)
        np.testing.assert_array_equal(trunc.h_sig, h)

    def test_split_exact_and_band_count(self):
        rng = np.random.default_rng(8)
        m, n, b = 4, 8, 2
        h = rng.standard_normal((m * n, m * n)) + 1j * rng.standard_normal((m * n, m * n))
        trunc = truncate(h, b, m, n)
        assert np.abs(trunc.h_sig + trunc.h_resid - h).max() == 0.0
        blocks = trunc.h_sig.reshape(n, m, n, m).transpose(0, 2, 1, 3)
        nonzero_offsets = {
            (bi - bj) % n
            for bi in range(n)
            for bj in range(n)
            if np.any(blocks[bi, bj] != 0)
        }
        assert len(nonzero_offsets) == 2 * b + 1

    def test_b_out_of_range(self):
        with pytest.raises(ConfigurationError):
            truncate(np.zeros((8, 8)), 2, 2, 4)

    def test_energy_ordering_on_average(self):
        # off-diagonal block energy decays with cyclic distance (EVA, 500 km/h)
        rng = np.random.default_rng(9)
        m, n = 16, 8
        energy = np.zeros(n)
        for _ in range(200):
            ch = eva_realization(m, n, rng)
            h = build_dd_matrix(ch)
            blocks = h.reshape(n, m, n, m).transpose(0, 2, 1, 3)
            for d in range(n):
                energy[d] += np.linalg.norm(blocks[d, 0]) ** 2
        by_distance = [energy[0]] + [
            energy[d] + energy[n - d] for d in range(1, n // 2 + 1)
        ]
        assert all(a >= b for a, b in zip(by_distance, by_distance[1:]))
