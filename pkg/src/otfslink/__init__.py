"""Delay-Doppler link simulation and bound analysis toolkit."""

__version__ = "0.1.0"

from .channel import ChannelProfile, ChannelRealization, sample_channel
from .coding import CODE_REGISTRY, ConvCode, get_code
from .config import load_config, parse_config
from .ddmatrix import CodewordDifferenceMatrix, OtfsGrid, codeword_difference, effective_channel
from .errors import (
    ConfigError,
    ContractViolationError,
    DimensionError,
    InfeasibleError,
    LinkError,
    NumericalError,
    RankDeficientError,
)
from .modem import NoiseSpec, transmit
from .montecarlo import SimConfig, SweepResult, run_ofdm_baseline, run_sweep

__all__ = [
    "__version__",
    "ChannelProfile",
    "ChannelRealization",
    "CodewordDifferenceMatrix",
    "CODE_REGISTRY",
    "ConfigError",
    "ContractViolationError",
    "ConvCode",
    "DimensionError",
    "InfeasibleError",
    "LinkError",
    "NoiseSpec",
    "NumericalError",
    "OtfsGrid",
    "RankDeficientError",
    "SimConfig",
    "SweepResult",
    "codeword_difference",
    "effective_channel",
    "get_code",
    "load_config",
    "parse_config",
    "run_ofdm_baseline",
    "run_sweep",
    "sample_channel",
    "transmit",
]
