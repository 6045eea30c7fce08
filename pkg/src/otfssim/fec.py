"""Rate-1/2 convolutional code with a max-log BCJR decoder, plus interleaving.

The code is the standard (2,1,3) feedforward code with octal generators
(5,7), i.e. g0 = 1 + D^2 and g1 = 1 + D + D^2, terminated with two tail
bits so the trellis ends in the all-zero state.  LLRs follow the package
convention L = ln P(0)/P(1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CODE_RATE",
    "TAIL_BITS",
    "LLR_CLIP",
    "Interleaver",
    "random_interleaver",
    "interleave",
    "deinterleave",
    "conv_encode",
    "maxlog_map_decode",
]

CODE_RATE = 0.5
TAIL_BITS = 2
LLR_CLIP = 50.0
_NEG = -1e30  # stand-in for -inf that keeps differences finite

_N_STATES = 4


def _trellis_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """next_state[s, u], out0[s, u], out1[s, u] for state s=(b1<<1)|b2."""
    next_state = np.empty((_N_STATES, 2), dtype=int)
    out0 = np.empty((_N_STATES, 2), dtype=int)
    out1 = np.empty((_N_STATES, 2), dtype=int)
    for s in range(_N_STATES):
        b1, b2 = (s >> 1) & 1, s & 1
        for u in range(2):
            out0[s, u] = u ^ b2          # 1 + D^2
            out1[s, u] = u ^ b1 ^ b2     # 1 + D + D^2
            next_state[s, u] = (u << 1) | b1
    return next_state, out0, out1


_NEXT, _OUT0, _OUT1 = _trellis_tables()


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Encode info bits, appending two zero tail bits; output length 2*(K+2)."""
    bits = np.asarray(bits, dtype=int)
    coded = np.empty(2 * (bits.size + TAIL_BITS), dtype=int)
    state = 0
    for t, u in enumerate(np.concatenate([bits, np.zeros(TAIL_BITS, dtype=int)])):
        coded[2 * t] = _OUT0[state, u]
        coded[2 * t + 1] = _OUT1[state, u]
        state = _NEXT[state, u]
    return coded


def maxlog_map_decode(llr_in: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max-log forward/backward decoding of one terminated codeword.

    Parameters
    ----------
    llr_in : channel/extrinsic LLRs for all coded bits, length 2*(K+2).

    Returns
    -------
    posterior : a-posteriori LLRs of every coded bit (clipped to +-LLR_CLIP)
    info_bits : hard decisions on the K information bits
    """
    llr_in = np.clip(np.asarray(llr_in, dtype=float), -LLR_CLIP, LLR_CLIP)
    if llr_in.size % 2:
        raise ValueError("coded LLR count must be even")
    n_steps = llr_in.size // 2
    n_info = n_steps - TAIL_BITS
    if n_info < 1:
        raise ValueError("frame too short for termination")

    # branch metrics bm[t, s, u] = ((1-2c0) L0 + (1-2c1) L1) / 2
    l0 = llr_in[0::2][:, None, None]
    l1 = llr_in[1::2][:, None, None]
    bm = 0.5 * ((1 - 2 * _OUT0)[None] * l0 + (1 - 2 * _OUT1)[None] * l1)
    # tail steps carry known zero inputs
    bm[n_info:, :, 1] = _NEG

    alpha = np.full((n_steps + 1, _N_STATES), _NEG)
    alpha[0, 0] = 0.0
    flat_next = _NEXT.ravel()
    for t in range(n_steps):
        cand = (alpha[t][:, None] + bm[t]).ravel()
        np.maximum.at(alpha[t + 1], flat_next, cand)
        alpha[t + 1] -= alpha[t + 1].max()

    beta = np.full((n_steps + 1, _N_STATES), _NEG)
    beta[n_steps, 0] = 0.0
    for t in range(n_steps - 1, -1, -1):
        beta[t] = (bm[t] + beta[t + 1][_NEXT]).max(axis=1)
        beta[t] -= beta[t].max()

    # transition scores for every (t, s, u) at once
    score = alpha[:-1, :, None] + bm + beta[1:][:, _NEXT]

    posterior = np.empty(2 * n_steps)
    for j, out in enumerate((_OUT0, _OUT1)):
        m0 = np.where(out[None] == 0, score, _NEG).max(axis=(1, 2))
        m1 = np.where(out[None] == 1, score, _NEG).max(axis=(1, 2))
        posterior[j::2] = m0 - m1
    posterior = np.clip(posterior, -LLR_CLIP, LLR_CLIP)

    u0 = score[:n_info, :, 0].max(axis=1)
    u1 = score[:n_info, :, 1].max(axis=1)
    info_bits = (u1 > u0).astype(int)
    return posterior, info_bits


# ---------------------------------------------------------------------------
# Interleaving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interleaver:
    """A fixed permutation; interleave reads input at permuted positions."""

    permutation: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.permutation)


def random_interleaver(length: int, seed: int) -> Interleaver:
    perm = np.random.default_rng(seed).permutation(length)
    return Interleaver(permutation=perm, seed=seed)


def interleave(values: np.ndarray, il: Interleaver) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != len(il):
        raise ValueError(f"length {values.shape[0]} does not match interleaver {len(il)}")
    return values[il.permutation]


def deinterleave(values: np.ndarray, il: Interleaver) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != len(il):
        raise ValueError(f"length {values.shape[0]} does not match interleaver {len(il)}")
    out = np.empty_like(values)
    out[il.permutation] = values
    return out
