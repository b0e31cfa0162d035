"""Adaptive noise-statistics matching for LDPC-coded 16-QAM over WDM links."""

__version__ = "0.1.0"

from .constellation import Constellation, build_16qam
from .ldpc import LdpcCode, construct_code
from .matching import DecoderConfig, DecodeResult, make_nominal, ml_estimate, turbo_decode
from .mlc import MlcFrame, NoiseEstimate, decide_upper, llr_level0, mlc_encode, remap
from .surrogate import (
    ChannelState,
    NlinParams,
    calibrate_kappa,
    effective_snr,
    mi_uniform,
    transmit,
)

__all__ = [
    "Constellation",
    "build_16qam",
    "LdpcCode",
    "construct_code",
    "DecoderConfig",
    "DecodeResult",
    "make_nominal",
    "ml_estimate",
    "turbo_decode",
    "MlcFrame",
    "NoiseEstimate",
    "decide_upper",
    "llr_level0",
    "mlc_encode",
    "remap",
    "ChannelState",
    "NlinParams",
    "calibrate_kappa",
    "effective_snr",
    "mi_uniform",
    "transmit",
    "__version__",
]
