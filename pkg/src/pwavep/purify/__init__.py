from pwavep.purify.pipeline import (
    CoefficientEdit,
    PurificationResult,
    PWavePPurifier,
    build_wavelet_operators,
    pwavep,
    write_result_bundle,
)
from pwavep.purify.baselines import gft_lowpass_defense, ror, ror_radius, sor

__all__ = [
    "CoefficientEdit",
    "PurificationResult",
    "PWavePPurifier",
    "build_wavelet_operators",
    "pwavep",
    "write_result_bundle",
    "gft_lowpass_defense",
    "ror",
    "ror_radius",
    "sor",
]
