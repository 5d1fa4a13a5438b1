"""Sparse regression codes over complex AWGN channels.

Encoding, AMP decoding with online noise tracking, state-evolution
prediction, iterative power allocation, DFT/circulant/Gaussian/spatially
coupled design operators, CRC-concatenated list decoding, and a reproducible
Monte-Carlo simulation harness.
"""

__version__ = "0.1.0"

from .params import (
    SparcParams,
    MessageVector,
    position_map,
    position_unmap,
    bits_to_positions,
    positions_to_bits,
    build_message,
    message_to_bits,
    awgn_channel,
)
from .sequences import (
    PerfectSequence,
    UnsupportedLengthError,
    frank_sequence,
    milewski_sequence,
    periodic_autocorrelation,
    autocorrelation_profile,
    sequence_for_length,
)
from .power import (
    PowerAllocation,
    InfeasibleAllocationError,
    flat_allocation,
    iterative_allocation,
    asymptotic_x,
    nu,
)
from .coupled import BaseMatrix, ScParams, base_matrix, sc_build_message, sc_decode
from .operators import (
    GaussianOperator,
    DftBlockOperator,
    CirculantOperator,
    CoupledOperator,
    gaussian_operator,
    dft_block_operator,
    circulant_operator,
    sc_operator,
    operator_from_config,
)
from .amp import (
    AmpConfig,
    AmpTrace,
    DivergenceError,
    denoise_section,
    denoise_sections,
    amp_step,
    amp_decode,
    hard_decision,
)
from .state_evolution import SeSchedule, se_x, se_trajectory, predict_decodable
from .outercode import (
    CrcSpec,
    GroupingLayout,
    ListConfig,
    ListDecodeResult,
    PipelineResult,
    ErrorMetrics,
    crc_compute,
    crc_remainder,
    crc_check,
    crc_group_encode,
    strip_check_sections,
    section_to_bit_posteriors,
    bit_posteriors,
    list_decode_codeword,
    decode_pipeline,
    error_metrics,
)
from .sim import (
    ExperimentConfig,
    SimPoint,
    SimResult,
    snr_to_sigma2,
    sigma2_to_snr_db,
    binomial_ci,
    run_experiment,
    write_csv,
)
