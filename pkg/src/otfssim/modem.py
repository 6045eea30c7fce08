"""OTFS modulation and demodulation with a per-block cyclic prefix.

The transmit chain maps an M x N delay-Doppler grid X to the delay-time
signal S = A_cp X F_N^H, where A_cp prepends the last M_cp rows of each
column as a cyclic prefix; the serialized signal is s = vec(S).  The
receiver removes the prefixes and applies the N-point DFT across blocks:
y = (F_N kron R_cp) r.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .grid_ops import devectorize, vectorize

__all__ = ["otfs_modulate", "otfs_demodulate", "add_awgn", "cp_add_matrix", "cp_remove_matrix"]


def cp_add_matrix(m: int, m_cp: int) -> np.ndarray:
    """(M + M_cp) x M matrix stacking the last M_cp rows of I_M over I_M."""
    eye = np.eye(m)
    return np.vstack([eye[m - m_cp:], eye]) if m_cp else eye


def cp_remove_matrix(m: int, m_cp: int) -> np.ndarray:
    """M x (M + M_cp) matrix dropping the first M_cp samples of a block."""
    return np.hstack([np.zeros((m, m_cp)), np.eye(m)])


def otfs_modulate(grid: np.ndarray, m_cp: int) -> np.ndarray:
    """Vectorized transmit signal (F_N^H kron A_cp) vec(X), length N(M+M_cp)."""
    m, n = grid.shape
    if not 0 <= m_cp < m:
        raise ConfigurationError(f"M_cp={m_cp} must satisfy 0 <= M_cp < M={m}")
    blocks = np.fft.ifft(grid, axis=1, norm="ortho")  # X F_N^H
    if m_cp:
        blocks = np.vstack([blocks[m - m_cp:], blocks])
    return vectorize(blocks)


def otfs_demodulate(r: np.ndarray, m: int, n: int, m_cp: int) -> np.ndarray:
    """(F_N kron R_cp) r: strip prefixes, DFT across blocks, length MN."""
    r = np.asarray(r)
    if r.size != n * (m + m_cp):
        raise ValueError(f"length {r.size} does not match N(M+M_cp)={n * (m + m_cp)}")
    blocks = devectorize(r, m + m_cp, n)[m_cp:]
    return vectorize(np.fft.fft(blocks, axis=1, norm="ortho"))


def add_awgn(s: np.ndarray, sigma2: float, seed: int | np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of variance ``sigma2``
    per sample.  ``seed`` may be an integer or an existing Generator."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if sigma2 == 0:
        return np.asarray(s, dtype=complex)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s))
    return s + np.sqrt(sigma2 / 2) * noise
