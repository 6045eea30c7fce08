"""Gray-labeled QAM mapping, max-log soft demapping, and soft remapping.

LLR sign convention throughout the package: L = ln P(bit=0) / P(bit=1),
so a positive LLR favours bit 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

__all__ = ["Constellation", "qam_constellation", "qam_map", "soft_demap", "soft_map"]

TANH_CLIP = 25.0


@dataclass(frozen=True)
class Constellation:
    """Unit-energy constellation points with their bit labels.

    ``labels`` is a (Q, r) array of {0,1}; ``points`` the matching complex
    values, normalized so the average symbol energy is one.
    """

    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @property
    def order(self) -> int:
        return len(self.points)

    def bit_sets(self, k: int, value: int) -> np.ndarray:
        """Points whose k-th label bit equals ``value``."""
        return self.points[self.labels[:, k] == value]

    def dump_table(self) -> str:
        """Human-readable label -> point table for audit."""
        lines = []
        for bits, q in zip(self.labels, self.points):
            lines.append("".join(map(str, bits)) + f" -> {q.real:+.6f}{q.imag:+.6f}j")
        return "\n".join(lines)


def _gray_levels(nbits: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis amplitude levels and Gray labels for 2^nbits levels."""
    count = 1 << nbits
    idx = np.arange(count)
    gray = idx ^ (idx >> 1)
    levels = 2 * idx - (count - 1)
    # place label `gray[i]` at amplitude level i
    label_of_level = np.zeros(count, dtype=int)
    label_of_level[:] = gray
    return levels.astype(float), label_of_level


def qam_constellation(order: int) -> Constellation:
    """Square Gray-mapped QAM of the given order (4 or 16).

    The first half of each label drives the in-phase axis, the second half
    the quadrature axis; bit 0 selects the positive side, matching
    (0,0) -> (1+1j)/sqrt(2) for 4-QAM.
    """
    if order not in (4, 16):
        raise ValueError(f"unsupported QAM order {order}")
    r = int(np.log2(order))
    half = r // 2
    levels, label_of_level = _gray_levels(half)
    # amplitude level i carries Gray label g(i); invert so a label value maps
    # to its amplitude, with label 0 on the most positive level
    amp_of_label = np.empty_like(levels)
    amp_of_label[label_of_level] = levels[::-1]
    points = np.empty(order, dtype=complex)
    labels = np.empty((order, r), dtype=int)
    for idx in range(order):
        bits = [(idx >> (r - 1 - j)) & 1 for j in range(r)]
        i_label = int("".join(map(str, bits[:half])), 2)
        q_label = int("".join(map(str, bits[half:])), 2)
        points[idx] = amp_of_label[i_label] + 1j * amp_of_label[q_label]
        labels[idx] = bits
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(points=points, labels=labels)


def qam_map(bits: np.ndarray, const: Constellation) -> np.ndarray:
    """Map coded bits (groups of r) onto constellation points."""
    bits = np.asarray(bits, dtype=int)
    r = const.bits_per_symbol
    if bits.size % r:
        raise ValueError(f"bit count {bits.size} not divisible by {r}")
    weights = 1 << np.arange(r - 1, -1, -1)
    idx = bits.reshape(-1, r) @ weights
    # constellation index == label value by construction
    order = np.empty(const.order, dtype=int)
    order[const.labels @ weights] = np.arange(const.order)
    return const.points[order[idx]]


def soft_demap(
    x_hat: np.ndarray,
    mu: np.ndarray,
    nu: np.ndarray,
    const: Constellation,
    prior: np.ndarray | None = None,
) -> np.ndarray:
    """Max-log extrinsic LLRs from equalizer output and per-symbol SINR.

    The estimate is normalized as x_hat/mu before the distance search and
    the distances are weighted by gamma = mu^2/nu.  A-priori LLRs of the
    *other* bits of each symbol enter the symbol metric; each bit's own
    prior is excluded, so the output is extrinsic.

    Returns one LLR per coded bit, symbol-major order.
    """
    x_hat = np.asarray(x_hat)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), x_hat.shape)
    nu = np.broadcast_to(np.asarray(nu, dtype=float), x_hat.shape)
    if np.any(nu <= 0):
        raise NumericalError("interference-plus-noise variance must be positive")
    r = const.bits_per_symbol
    n_sym = len(x_hat)
    if prior is None:
        prior = np.zeros(n_sym * r)
    prior = np.asarray(prior, dtype=float).reshape(n_sym, r)

    gamma = mu**2 / nu
    z = x_hat / mu
    # metric[n, q] = -gamma_n |z_n - q|^2 + 0.5 sum_j (1-2 a_qj) L_prior[n, j]
    dist2 = np.abs(z[:, None] - const.points[None, :]) ** 2
    sign = 1.0 - 2.0 * const.labels  # (Q, r)
    metric = -gamma[:, None] * dist2 + 0.5 * (prior @ sign.T)

    llr = np.empty((n_sym, r))
    for k in range(r):
        m_k = metric - 0.5 * prior[:, k, None] * sign[None, :, k]
        mask0 = const.labels[:, k] == 0
        llr[:, k] = m_k[:, mask0].max(axis=1) - m_k[:, ~mask0].max(axis=1)
    return llr.reshape(-1)


def soft_map(apriori: np.ndarray, const: Constellation) -> np.ndarray:
    """Expected symbol under per-bit a-priori LLRs.

    mu'[n] = sum_q q * prod_j P(bit_j = label_j(q)), with
    P(bit=b) = (1 + (1-2b) tanh(L/2)) / 2 under L = ln P(0)/P(1).
    """
    r = const.bits_per_symbol
    apriori = np.asarray(apriori, dtype=float)
    if apriori.size % r:
        raise ValueError(f"LLR count {apriori.size} not divisible by {r}")
    t = np.tanh(np.clip(apriori.reshape(-1, r), -TANH_CLIP, TANH_CLIP) / 2.0)
    sign = 1.0 - 2.0 * const.labels  # (Q, r)
    prob = 0.5 * (1.0 + t[:, None, :] * sign[None, :, :])  # (n, Q, r)
    return prob.prod(axis=2) @ const.points
