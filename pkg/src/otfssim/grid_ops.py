"""Delay-Doppler grid primitives.

Column-major vectorization of M x N grids (delay index fastest), the unitary
Kronecker DFT pair that moves vectors between the delay-Doppler and
time-frequency domains, and helpers for block-circulant-with-circulant-blocks
(BCCB) matrices, which the 2-D DFT diagonalizes.
"""

from __future__ import annotations

import numpy as np

from .errors import StructureError

__all__ = [
    "vectorize",
    "devectorize",
    "kron_dft_apply",
    "kron_dft_matrix",
    "is_bccb",
    "bccb_to_tf_diagonal",
    "bccb_from_tf_diagonal",
    "bccb_project",
    "block_offset_mask",
]


def vectorize(grid: np.ndarray) -> np.ndarray:
    """Stack the columns of an M x N grid into a length-MN vector."""
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    return grid.reshape(-1, order="F")


def devectorize(vec: np.ndarray, m: int, n: int) -> np.ndarray:
    """Inverse of :func:`vectorize` for an M x N grid."""
    vec = np.asarray(vec)
    if vec.size != m * n:
        raise ValueError(f"length {vec.size} does not match {m}x{n}")
    return vec.reshape(m, n, order="F")


def kron_dft_apply(vec: np.ndarray, m: int, n: int, direction: str = "forward") -> np.ndarray:
    """Apply the unitary (F_N kron F_M) transform, or its Hermitian inverse.

    Computed as a 2-D FFT on the reshaped grid rather than by materializing
    the MN x MN matrix.  ``forward`` maps delay-Doppler to time-frequency.
    """
    grid = devectorize(vec, m, n)
    if direction == "forward":
        out = np.fft.fft2(grid, norm="ortho")
    elif direction == "inverse":
        out = np.fft.ifft2(grid, norm="ortho")
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return vectorize(out)


def kron_dft_matrix(m: int, n: int) -> np.ndarray:
    """Dense (F_N kron F_M) with unitary normalization, for oracle tests."""
    f_m = np.fft.fft(np.eye(m), norm="ortho")
    f_n = np.fft.fft(np.eye(n), norm="ortho")
    return np.kron(f_n, f_m)


# ---------------------------------------------------------------------------
# BCCB structure
# ---------------------------------------------------------------------------

def _as_blocks(h: np.ndarray, m: int, n: int) -> np.ndarray:
    """View an MN x MN matrix as an (N, N, M, M) array of blocks."""
    if h.shape != (m * n, m * n):
        raise ValueError(f"expected {m * n}x{m * n} matrix, got {h.shape}")
    return h.reshape(n, m, n, m).transpose(0, 2, 1, 3)


def is_bccb(h: np.ndarray, m: int, n: int, tol: float = 1e-10) -> bool:
    """Check that entry (i, j) depends only on the block-index difference
    mod N and the intra-block index difference mod M."""
    rebuilt = bccb_from_tf_diagonal(bccb_to_tf_diagonal(h, m, n, check=False), m, n)
    scale = max(np.abs(h).max(), 1.0)
    return bool(np.abs(h - rebuilt).max() <= tol * scale)


def bccb_to_tf_diagonal(h: np.ndarray, m: int, n: int, check: bool = True) -> np.ndarray:
    """Diagonal of (F_N kron F_M) H (F_N kron F_M)^H for BCCB H.

    Uses the 2-D DFT of the generating first column, O(MN log MN).
    """
    if h.shape != (m * n, m * n):
        raise ValueError(f"expected {m * n}x{m * n} matrix, got {h.shape}")
    kernel = devectorize(h[:, 0], m, n)
    diag = vectorize(np.fft.fft2(kernel))
    if check and not np.allclose(
        h, bccb_from_tf_diagonal(diag, m, n), atol=1e-10 * max(np.abs(h).max(), 1.0)
    ):
        raise StructureError("matrix is not BCCB")
    return diag


def bccb_from_tf_diagonal(diag: np.ndarray, m: int, n: int) -> np.ndarray:
    """Dense BCCB matrix with the given TF-domain spectrum."""
    kernel = np.fft.ifft2(devectorize(diag, m, n))
    blocks = np.empty((n, n, m, m), dtype=complex)
    row = np.arange(m)
    col_shift = (row[:, None] - row[None, :]) % m
    for bi in range(n):
        for bj in range(n):
            blocks[bi, bj] = kernel[col_shift, (bi - bj) % n]
    return blocks.transpose(0, 2, 1, 3).reshape(m * n, m * n)


def bccb_project(h: np.ndarray, m: int, n: int) -> np.ndarray:
    """TF spectrum of the nearest (Frobenius) BCCB matrix to H.

    Averages entries over each (block-offset, intra-offset) cyclic class.
    For an exactly BCCB input this returns its own spectrum.
    """
    blocks = _as_blocks(h, m, n)
    kernel = np.zeros((m, n), dtype=complex)
    row = np.arange(m)
    for d in range(n):
        # mean over the N blocks at block-offset d, then over each diagonal
        blk = blocks[(np.arange(n) + d) % n, np.arange(n)].mean(axis=0)
        for l in range(m):
            kernel[l, d] = blk[row, (row - l) % m].mean()
    return vectorize(np.fft.fft2(kernel))


def block_offset_mask(m: int, n: int, offsets: np.ndarray) -> np.ndarray:
    """Boolean MN x MN mask selecting the M x M blocks whose cyclic
    block offset (i - j) mod N lies in ``offsets``."""
    bi = np.arange(n)
    keep = np.isin((bi[:, None] - bi[None, :]) % n, offsets)
    return np.kron(keep, np.ones((m, m), dtype=bool))
