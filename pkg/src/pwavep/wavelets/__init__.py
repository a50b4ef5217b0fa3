from pwavep.wavelets.kernels import KernelBank, design_kernel_bank, mexican_hat, meyer_nu
from pwavep.wavelets.chebyshev import chebyshev_apply, chebyshev_coefficients, shifted_laplacian
from pwavep.wavelets.operators import (
    FrameBounds,
    WaveletOperators,
    build_operators_chebyshev,
    build_operators_exact,
    frame_bounds,
)
from pwavep.wavelets.transform import WaveletCoefficients, gwt, igwt

__all__ = [
    "KernelBank",
    "design_kernel_bank",
    "mexican_hat",
    "meyer_nu",
    "chebyshev_apply",
    "chebyshev_coefficients",
    "shifted_laplacian",
    "FrameBounds",
    "WaveletOperators",
    "build_operators_chebyshev",
    "build_operators_exact",
    "frame_bounds",
    "WaveletCoefficients",
    "gwt",
    "igwt",
]
