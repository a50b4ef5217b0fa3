from pwavep.spectral.basis import (
    GraphSignal,
    SpectralBasis,
    eigendecompose,
    smoothness,
    spectral_smoothness,
    edge_smoothness,
)
from pwavep.spectral.filters import (
    BandPerturbation,
    band_slices,
    gft_lowpass,
    inject_band_perturbation,
)

__all__ = [
    "GraphSignal",
    "SpectralBasis",
    "eigendecompose",
    "smoothness",
    "spectral_smoothness",
    "edge_smoothness",
    "BandPerturbation",
    "band_slices",
    "gft_lowpass",
    "inject_band_perturbation",
]
