"""Coded OTFS link simulation with a truncated turbo equalizer and SIC.

The package builds delay-Doppler channel models for high-mobility links,
equalizes them with a damped LSQR solver that tracks post-equalization
SINR through a TF-domain diagonal recursion, and wraps the soft-in/soft-out
demap/decode/cancel loop plus a full MMSE benchmark in a reproducible
Monte-Carlo harness.
"""

from .channel import (
    ChannelPath,
    ChannelRealization,
    PowerDelayProfile,
    TruncatedChannel,
    build_dd_matrix,
    build_dt_matrix,
    eva_profile,
    load_profile,
    max_doppler_hz,
    sample_paths,
    truncate,
    truncation_bandwidth,
)
from .equalizer import (
    BlockBandedOperator,
    EqualizerOutput,
    mlsqr_equalize,
    mmse_equalize,
    sinr_from_omega,
)
from .errors import ConfigurationError, NumericalError, StructureError
from .fec import Interleaver, conv_encode, deinterleave, interleave, maxlog_map_decode, random_interleaver
from .grid_ops import bccb_to_tf_diagonal, devectorize, is_bccb, kron_dft_apply, vectorize
from .harness import (
    BerRecord,
    ComplexityParams,
    SimConfig,
    complexity_report,
    export_results,
    load_results,
    run_ber_sweep,
)
from .mapping import Constellation, qam_constellation, qam_map, soft_demap, soft_map
from .modem import add_awgn, otfs_demodulate, otfs_modulate
from .receiver import (
    LinkContext,
    TfResidualChannel,
    TteSicConfig,
    make_link_context,
    mmse_benchmark_detect,
    sic_cancel_tf,
    transmit,
    tte_sic_detect,
)

__version__ = "0.1.0"
