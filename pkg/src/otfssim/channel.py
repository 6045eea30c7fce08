"""Linear time-varying multipath channels on the OTFS grid.

Generates random channel realizations from a power-delay profile (EVA
built in), builds the delay-time and delay-Doppler channel matrices for
the per-block-CP OTFS system, and splits the DD matrix into significant
and insignificant Doppler block-diagonals.

Two time-variation models are supported.  The default ``sample`` mode
rotates each path's phasor at every sample, which is the physical model;
the resulting DD matrix is block circulant across Doppler but its blocks
are twisted (not circulant).  The ``block`` mode freezes the phasor over
each CP-extended block, which makes the DD matrix exactly BCCB; it exists
so that the BCCB-based recursions can be tested against dense oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid_ops import block_offset_mask

__all__ = [
    "SPEED_OF_LIGHT",
    "PowerDelayProfile",
    "ChannelPath",
    "ChannelRealization",
    "TruncatedChannel",
    "eva_profile",
    "load_profile",
    "max_doppler_hz",
    "sample_paths",
    "build_dt_matrix",
    "build_dd_matrix",
    "truncation_bandwidth",
    "truncate",
]

SPEED_OF_LIGHT = 299792458.0  # m/s

# 3GPP Extended Vehicular A power-delay profile
_EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
_EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-tap delays and average powers, normalized to unit total power."""

    name: str
    delays_ns: tuple[float, ...]
    powers_db: tuple[float, ...]

    def __post_init__(self):
        if len(self.delays_ns) != len(self.powers_db) or not self.delays_ns:
            raise ConfigurationError("profile needs matching, non-empty delay/power lists")

    @property
    def powers_linear(self) -> np.ndarray:
        lin = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return lin / lin.sum()

    def delay_taps(self, ts_s: float) -> np.ndarray:
        """Tap delays rounded to the nearest sampling-grid index."""
        return np.rint(np.asarray(self.delays_ns) * 1e-9 / ts_s).astype(int)

    def min_cp_length(self, ts_s: float) -> int:
        return int(self.delay_taps(ts_s).max())


def eva_profile() -> PowerDelayProfile:
    return PowerDelayProfile("EVA", _EVA_DELAYS_NS, _EVA_POWERS_DB)


def load_profile(path: str | Path, name: str | None = None) -> PowerDelayProfile:
    """Read a profile from a text file of ``delay_ns power_db`` lines.

    Blank lines and ``#`` comments are ignored.
    """
    path = Path(path)
    delays, powers = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigurationError(f"{path}:{lineno}: expected 'delay_ns power_db'")
        delays.append(float(parts[0]))
        powers.append(float(parts[1]))
    return PowerDelayProfile(name or path.stem, tuple(delays), tuple(powers))


def get_profile(name: str) -> PowerDelayProfile:
    """Look up a built-in profile by name, or load from a file path."""
    if name.upper() == "EVA":
        return eva_profile()
    if Path(name).is_file():
        return load_profile(name)
    raise ConfigurationError(f"unknown channel profile {name!r}")


def max_doppler_hz(fc_hz: float, velocity_kmh: float) -> float:
    """Maximum Doppler shift f_c * v / c."""
    return fc_hz * (velocity_kmh / 3.6) / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ChannelPath:
    """One propagation path: complex gain, delay, Doppler shift."""

    gain: complex
    delay_s: float
    doppler_hz: float


def sample_paths(
    profile: PowerDelayProfile,
    f_dmax_hz: float,
    seed: int | np.random.Generator,
) -> list[ChannelPath]:
    """Draw one random realization of the profile.

    Gains are complex Gaussian with variance equal to the normalized tap
    power; each path's Doppler is f_Dmax * cos(theta) with theta uniform
    on [0, 2*pi) (isotropic scattering).
    """
    if f_dmax_hz < 0:
        raise ConfigurationError("f_dmax_hz must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    powers = profile.powers_linear
    gains = np.sqrt(powers / 2) * (rng.standard_normal(len(powers)) + 1j * rng.standard_normal(len(powers)))
    thetas = rng.uniform(0.0, 2 * np.pi, len(powers))
    dopplers = f_dmax_hz * np.cos(thetas)
    return [
        ChannelPath(gain=g, delay_s=d * 1e-9, doppler_hz=nu)
        for g, d, nu in zip(gains, profile.delays_ns, dopplers)
    ]


@dataclass(frozen=True)
class ChannelRealization:
    """A path list bound to one OTFS frame geometry.

    ``doppler_mode`` selects sample-level (physical) or block-level
    (exactly-BCCB) phasor evolution.
    """

    paths: tuple[ChannelPath, ...]
    m: int
    n: int
    m_cp: int
    ts_s: float
    doppler_mode: str = "sample"

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.doppler_mode not in ("sample", "block"):
            raise ConfigurationError(f"unknown doppler_mode {self.doppler_mode!r}")
        taps = self.delay_taps
        if taps.min() < 0:
            raise ConfigurationError("negative path delay")
        if taps.max() > self.m_cp:
            raise ConfigurationError(
                f"delay tap {taps.max()} exceeds CP length {self.m_cp}"
            )
        if taps.max() >= self.m:
            raise ConfigurationError("delay spread exceeds the delay grid")

    @property
    def delay_taps(self) -> np.ndarray:
        return np.array([round(p.delay_s / self.ts_s) for p in self.paths], dtype=int)

    @property
    def block_len(self) -> int:
        return self.m + self.m_cp


def build_dt_matrix(ch: ChannelRealization) -> np.ndarray:
    """Delay-time channel matrix acting on the CP-bearing signal.

    Square of size N*(M+M_cp); output sample n is
    sum_p h_p exp(j 2 pi nu_p (n - l_p) Ts) s[n - l_p], with samples
    before the frame treated as zero (the per-block CP makes them
    irrelevant after CP removal).
    """
    nt = ch.n * ch.block_len
    h = np.zeros((nt, nt), dtype=complex)
    taps = ch.delay_taps
    sample_idx = np.arange(nt)
    for path, l in zip(ch.paths, taps):
        rows = sample_idx[l:]
        if ch.doppler_mode == "sample":
            phase = np.exp(2j * np.pi * path.doppler_hz * (rows - l) * ch.ts_s)
        else:
            block_of = rows // ch.block_len
            phase = np.exp(2j * np.pi * path.doppler_hz * block_of * ch.block_len * ch.ts_s)
        h[rows, rows - l] += path.gain * phase
    return h


def _doppler_coupling(f_cycles: float, n: int) -> np.ndarray:
    """g[d] = (1/N) sum_i exp(j 2 pi i (d/N + f)), the circulant coupling
    between Doppler bins separated by d for per-block phase advance f."""
    d = np.arange(n)
    phase = d / n + f_cycles
    denom = np.exp(2j * np.pi * phase) - 1.0
    num = np.exp(2j * np.pi * n * f_cycles) - 1.0
    g = np.where(np.abs(denom) > 1e-12, num / np.where(denom == 0, 1, denom) / n, 1.0)
    return g.astype(complex)


def build_dd_matrix(ch: ChannelRealization) -> np.ndarray:
    """Effective MN x MN delay-Doppler channel matrix.

    Equals (F_N kron R_cp) H_DT (F_N^H kron A_cp) but is assembled in
    closed form: each path contributes kron(G_p, T_p) with G_p the
    circulant Doppler-coupling matrix and T_p a (twisted) cyclic delay
    shift.  The dense triple product is kept as a test oracle.
    """
    m, n = ch.m, ch.n
    taps = ch.delay_taps
    g_stack = np.empty((len(ch.paths), n, n), dtype=complex)
    t_stack = np.zeros((len(ch.paths), m, m), dtype=complex)
    rows = np.arange(m)
    bi = np.arange(n)
    offset = (bi[None, :] - bi[:, None]) % n  # (bj - bi) mod N
    for p, (path, l) in enumerate(zip(ch.paths, taps)):
        f = path.doppler_hz * ch.ts_s * ch.block_len
        g_stack[p] = _doppler_coupling(f, n)[offset]
        if ch.doppler_mode == "sample":
            twist = np.exp(2j * np.pi * path.doppler_hz * ch.ts_s * (ch.m_cp + rows - l))
        else:
            twist = np.ones(m)
        t_stack[p, rows, (rows - l) % m] = path.gain * twist
    h4 = np.einsum("pij,pmn->imjn", g_stack, t_stack)
    return np.ascontiguousarray(h4).reshape(m * n, m * n)


def truncation_bandwidth(f_dmax_hz: float, m: int, n: int, ts_s: float) -> int:
    """Truncation bandwidth B = ceil(f_Dmax * M * N * Ts).

    A vanishing Doppler spread (f_Dmax = 0) keeps only the block diagonal,
    B = 0.
    """
    if min(m, n, ts_s) <= 0 or f_dmax_hz < 0:
        raise ConfigurationError("grid parameters must be positive and f_Dmax >= 0")
    return int(np.ceil(f_dmax_hz * m * n * ts_s))


@dataclass(frozen=True)
class TruncatedChannel:
    """Exact additive split of H_DD into significant and residual parts.

    ``h_sig`` keeps the 2B+1 cyclic block-diagonals at block offsets
    {-B..B} mod N; ``h_resid`` is the complement, so
    h_sig + h_resid == h_full exactly.
    """

    h_full: np.ndarray
    h_sig: np.ndarray
    h_resid: np.ndarray
    b: int
    m: int
    n: int

    @property
    def b_prime(self) -> int:
        return 2 * self.b + 1

    @property
    def significant_offsets(self) -> np.ndarray:
        return np.unique(np.arange(-self.b, self.b + 1) % self.n)

    @property
    def insignificant_offsets(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), self.significant_offsets)


def truncate(h_dd: np.ndarray, b: int, m: int, n: int) -> TruncatedChannel:
    """Split H_DD by cyclic block offset into significant/insignificant parts."""
    if not 0 <= b <= (n - 1) // 2:
        raise ConfigurationError(f"B={b} outside [0, {(n - 1) // 2}] for N={n}")
    offsets = np.unique(np.arange(-b, b + 1) % n)
    mask = block_offset_mask(m, n, offsets)
    h_sig = np.where(mask, h_dd, 0.0)
    return TruncatedChannel(h_full=h_dd, h_sig=h_sig, h_resid=h_dd - h_sig, b=b, m=m, n=n)
