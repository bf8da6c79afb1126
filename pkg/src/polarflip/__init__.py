"""CRC-aided polar codes with SC, SC-Flip, thresholded SC-Flip and fast
special-node decoders, plus GA analysis and Monte-Carlo tooling."""

__version__ = "0.1.0"

from .construction import (
    PolarCode,
    build_code,
    crc_check,
    crc_compute,
    encode,
    polar_transform,
)
from .sc import LlrFrame, SCDecoder, combine, f_kernel, g_kernel, leaf_llr_of, sc_decode, sc_oracle_decode
from .flip import (
    FlipPlan,
    build_critical_set,
    flip_and_redecode,
    omega_star,
    scf_decode,
    tscf_decode,
)
from .tree import DecodeTree, Kind, classify_tree, full_tree
from .fast import (
    TopFlipCandidate,
    decode_rate1,
    decode_rep,
    decode_spc,
    fast_flip_decode,
    fast_sc_decode,
    flip_candidates_rate1,
    flip_candidates_rep,
    flip_candidates_spc,
    steps_per_iteration,
)
from .analysis import fer_hypothetical, fer_theoretical, ga_evolve, omega_sweep, pi_of
from .sim import ChannelConfig, DecoderSpec, SimResult, StopRule, channel_transmit, emit_results, run_experiment, sweep
