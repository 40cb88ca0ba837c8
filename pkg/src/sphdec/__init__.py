"""Polar/Reed-Muller coding with maximum-likelihood stack sphere decoding."""

from .channel import ChannelParams, bpsk_map, ebn0_to_params, transmit, trial_rng
from .codes import (
    CodeSpec,
    Encoded,
    GeneratorMatrix,
    bhattacharyya_profile,
    bit_reverse_permute,
    build_generator,
    construct_polar,
    construct_rm,
    encode,
    polar_transform,
    rm_dimensions,
    scramble,
    spec_from_json,
    spec_to_json,
    unscramble,
)
from .decoder import (
    DecodeResult,
    DecodeStats,
    StackLimitExceeded,
    ml_oracle,
    stack_sphere_decode,
)
from .metrics import (
    MetricKind,
    MetricTable,
    build_metric_table,
    high_snr_metric,
    log_cosh,
    log_cosh_correction,
    low_snr_metric,
    marginal_likelihood,
    ml_metric,
    path_length_metric,
    sed_extend,
)
from .sim import (
    SweepConfig,
    SweepRecord,
    format_records,
    parse_records,
    read_records,
    run_sweep,
    sweep_header,
    write_records,
)

__version__ = "0.1.0"
