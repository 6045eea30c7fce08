"""Monte-Carlo BER sweeps, the complexity calculator, and results export.

Frames are seeded per (master_seed, snr_index, frame_index), so every
detection method at a given SNR point sees identical channels, bits and
noise (paired comparison), and repeated runs with the same master seed are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .channel import (
    ChannelRealization,
    build_dd_matrix,
    get_profile,
    max_doppler_hz,
    sample_paths,
    truncate,
    truncation_bandwidth,
)
from .errors import ConfigurationError
from .modem import add_awgn
from .receiver import (
    LinkContext,
    TteSicConfig,
    make_link_context,
    mmse_benchmark_detect,
    transmit,
    tte_sic_detect,
)

__all__ = [
    "SimConfig",
    "BerRecord",
    "ComplexityParams",
    "run_ber_sweep",
    "complexity_report",
    "export_results",
    "export_diagnostics",
    "load_results",
]

KNOWN_METHODS = ("tte-sic", "mmse")


@dataclass
class SimConfig:
    """Full description of one BER sweep."""

    m: int = 64
    n: int = 16
    m_cp: int | None = None          # None: smallest CP covering the profile
    mod_order: int = 4
    profile: str = "EVA"
    fc_hz: float = 5.9e9
    ts_s: float = 370.3e-9
    velocity_kmh: float = 500.0
    snr_grid_db: list = field(default_factory=lambda: [8.0, 10.0, 12.0])
    frames_per_point: int = 100
    target_bit_errors: int = 200
    methods: list = field(default_factory=lambda: ["tte-sic", "mmse"])
    b: int | None = None             # None: truncation criterion
    sic_iterations: int = 2
    lsqr_max_iter: int = 20
    lsqr_eps: float | None = None
    sic_reference: str = "from-original"
    master_seed: int = 1
    doppler_mode: str = "sample"

    @classmethod
    def from_json(cls, path: str | Path) -> "SimConfig":
        raw = json.loads(Path(path).read_text())
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def validate(self) -> dict:
        """Resolve derived quantities and reject infeasible setups.

        Returns a dict with the resolved profile, f_dmax, m_cp and b.
        """
        if min(self.m, self.n, self.fc_hz, self.ts_s) <= 0 or self.velocity_kmh < 0:
            raise ConfigurationError("physical parameters must be positive")
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db must be non-empty")
        for meth in self.methods:
            if meth not in KNOWN_METHODS:
                raise ConfigurationError(f"unknown method {meth!r}; known: {KNOWN_METHODS}")
        profile = get_profile(self.profile)
        f_dmax = max_doppler_hz(self.fc_hz, self.velocity_kmh)
        m_cp = profile.min_cp_length(self.ts_s) if self.m_cp is None else self.m_cp
        if m_cp < profile.min_cp_length(self.ts_s):
            raise ConfigurationError(
                f"M_cp={m_cp} shorter than the profile delay spread "
                f"({profile.min_cp_length(self.ts_s)} taps)"
            )
        if m_cp >= self.m:
            raise ConfigurationError(f"M_cp={m_cp} must be < M={self.m}")
        if f_dmax > 0:
            b = truncation_bandwidth(f_dmax, self.m, self.n, self.ts_s) if self.b is None else self.b
        else:
            b = 0 if self.b is None else self.b
        if not 0 <= b <= (self.n - 1) // 2:
            raise ConfigurationError(f"B={b} outside [0, {(self.n - 1) // 2}]")
        return {"profile": profile, "f_dmax_hz": f_dmax, "m_cp": m_cp, "b": b}


@dataclass(frozen=True)
class BerRecord:
    method: str
    snr_db: float
    b: int
    sic_iterations: int
    bits_simulated: int
    bit_errors: int
    ber: float
    frames: int
    seed: int


@dataclass(frozen=True)
class ComplexityParams:
    """Inputs of the complexity comparison (counts of complex multiplies)."""

    m: int = 64
    n: int = 16
    l: int = 7
    q: int = 4
    b: int = 2
    i_lsqr: int = 20
    i_mp: int = 30
    i_lsmr: int = 20
    i_sic_lsmr: int = 5
    i_sic_prop: int = 3

    def __post_init__(self):
        if min(asdict(self).values()) <= 0:
            raise ConfigurationError("all complexity parameters must be positive")
        if 2 * self.b + 1 > self.n:
            raise ConfigurationError("B' = 2B+1 must not exceed N")


def complexity_report(p: ComplexityParams) -> dict[str, float]:
    """Evaluate each method's complex-multiplication count (leading constants 1)."""
    bp = 2 * p.b + 1
    proposed_inner = (
        bp * p.l * p.i_lsqr
        + 2 * p.q
        + p.n
        - bp
        + 4
        - (bp / p.n) * np.log2(p.m)
        + np.log2(p.n)
    )
    return {
        "full-mmse": float(p.m**3 * p.n**3),
        "mp": float(p.m * p.n**2 * p.l * p.q * p.i_mp),
        "lsmr-sic": float(p.m * p.n**2 * p.l * p.i_lsmr * p.i_sic_lsmr),
        "tte-sic": float(p.m * p.n * p.i_sic_prop * proposed_inner),
    }


# ---------------------------------------------------------------------------
# BER sweep
# ---------------------------------------------------------------------------

def _run_frame(
    cfg: SimConfig,
    resolved: dict,
    ctx: LinkContext,
    sic_cfg: TteSicConfig,
    snr_idx: int,
    frame_idx: int,
    collect_diagnostics: bool,
) -> tuple[dict[str, int], list[dict]]:
    """One paired frame; returns per-method bit-error counts."""
    rng = np.random.default_rng(
        np.random.SeedSequence((cfg.master_seed, snr_idx, frame_idx))
    )
    snr_db = cfg.snr_grid_db[snr_idx]
    sigma2 = 10.0 ** (-snr_db / 10.0)

    paths = sample_paths(resolved["profile"], resolved["f_dmax_hz"], rng)
    ch = ChannelRealization(
        paths=tuple(paths), m=cfg.m, n=cfg.n, m_cp=resolved["m_cp"],
        ts_s=cfg.ts_s, doppler_mode=cfg.doppler_mode,
    )
    h_dd = build_dd_matrix(ch)
    info = rng.integers(0, 2, ctx.n_info_bits)
    x, coded = transmit(info, ctx)
    y = add_awgn(h_dd @ x, sigma2, rng)

    errors: dict[str, int] = {}
    diag_rows: list[dict] = []
    for method in cfg.methods:
        if method == "tte-sic":
            trunc = truncate(h_dd, resolved["b"], cfg.m, cfg.n)
            decoded, diag = tte_sic_detect(
                y, trunc, sic_cfg, ctx, sigma2,
                true_coded_bits=coded if collect_diagnostics else None,
            )
            if collect_diagnostics:
                for entry in diag:
                    diag_rows.append(
                        {"method": method, "snr_db": snr_db, "frame": frame_idx, **entry}
                    )
        else:
            decoded = mmse_benchmark_detect(y, h_dd, ctx, sigma2)
        errors[method] = int(np.sum(decoded != info))
    return errors, diag_rows


def run_ber_sweep(
    cfg: SimConfig,
    collect_diagnostics: bool = False,
    progress: bool = False,
) -> tuple[list[BerRecord], list[dict]]:
    """Simulate every (method, SNR) cell until the frame budget or the
    bit-error target is reached; all methods share each frame's channel,
    bits and noise."""
    resolved = cfg.validate()
    ctx = make_link_context(cfg.m, cfg.n, cfg.mod_order, seed=cfg.master_seed)
    sic_cfg = TteSicConfig(
        sic_iterations=cfg.sic_iterations,
        lsqr_max_iter=cfg.lsqr_max_iter,
        lsqr_eps=cfg.lsqr_eps,
        b=resolved["b"],
        sic_reference=cfg.sic_reference,
    )

    records: list[BerRecord] = []
    all_diag: list[dict] = []
    for snr_idx, snr_db in enumerate(cfg.snr_grid_db):
        errors = {meth: 0 for meth in cfg.methods}
        frames = 0
        while frames < cfg.frames_per_point:
            if errors and min(errors.values()) >= cfg.target_bit_errors:
                break
            frame_errors, diag_rows = _run_frame(
                cfg, resolved, ctx, sic_cfg, snr_idx, frames, collect_diagnostics
            )
            for meth, cnt in frame_errors.items():
                errors[meth] += cnt
            all_diag.extend(diag_rows)
            frames += 1
        bits = frames * ctx.n_info_bits
        for meth in cfg.methods:
            records.append(
                BerRecord(
                    method=meth,
                    snr_db=float(snr_db),
                    b=resolved["b"],
                    sic_iterations=cfg.sic_iterations if meth == "tte-sic" else 0,
                    bits_simulated=bits,
                    bit_errors=errors[meth],
                    ber=errors[meth] / bits if bits else 0.0,
                    frames=frames,
                    seed=cfg.master_seed,
                )
            )
        if progress:
            summary = "  ".join(f"{m}:{errors[m] / bits:.2e}" for m in cfg.methods)
            print(f"SNR {snr_db:5.1f} dB  frames={frames:4d}  BER  {summary}")
    return records, all_diag


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

CSV_HEADER = ["method", "snr_db", "B", "sic_iters", "bits", "bit_errors", "ber", "frames", "seed"]


def export_results(records: list[BerRecord], path: str | Path, config: SimConfig | None = None) -> Path:
    """Write the records as CSV plus a JSON metadata sidecar.

    The byte content is a pure function of the records, so identical runs
    produce identical files.
    """
    if not records:
        raise ValueError("no records to export")
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(
            [r.method, repr(r.snr_db), r.b, r.sic_iterations, r.bits_simulated,
             r.bit_errors, repr(r.ber), r.frames, r.seed]
        )
    path.write_text(buf.getvalue())
    meta = {
        "config": asdict(config) if config is not None else None,
        "snr_definition": "symbol-energy SNR: E[|x|^2]/sigma^2 = 1/sigma^2 at the demodulator",
        "ebn0_conversion_db": "Eb/N0 = SNR - 10*log10(rate * bits_per_symbol)",
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def export_diagnostics(diag_rows: list[dict], path: str | Path) -> Path:
    """Long-format per-iteration diagnostics (one row per SIC iteration)."""
    if not diag_rows:
        raise ValueError("no diagnostics to export")
    path = Path(path)
    cols = ["method", "snr_db", "frame", "iteration", "residual_norm",
            "lsqr_iterations", "mean_gamma", "cancellation_cms", "coded_ber"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in diag_rows:
        writer.writerow([repr(row[c]) if isinstance(row.get(c), float) else row.get(c, "")
                         for c in cols])
    path.write_text(buf.getvalue())
    return path


def load_results(path: str | Path) -> list[BerRecord]:
    """Parse a CSV written by :func:`export_results`."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                BerRecord(
                    method=row["method"],
                    snr_db=float(row["snr_db"]),
                    b=int(row["B"]),
                    sic_iterations=int(row["sic_iters"]),
                    bits_simulated=int(row["bits"]),
                    bit_errors=int(row["bit_errors"]),
                    ber=float(row["ber"]),
                    frames=int(row["frames"]),
                    seed=int(row["seed"]),
                )
            )
    return records
