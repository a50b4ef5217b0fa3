"""
Wavelet kernel banks.

A bank holds a low-pass scaling function phi and S band-pass kernels g_1..g_S
on [0, lambda_max]. Index j = S is the highest-frequency band.

    mexican-hat  g(x) = x e^(1-x), dilated so the band peaks are log-spaced in
                 (lambda_max/40, 0.95 lambda_max]; phi(l) = exp(-(l / 0.4 lambda_max)^4).
                 Not tight; reconstruction uses the pseudo-inverse.
    meyer        Partition of unity built from the Meyer auxiliary polynomial,
                 phi^2 + sum g_j^2 = 1 exactly (Parseval tight frame).
"""

from dataclasses import dataclass
from functools import partial
from typing import Callable, Tuple

import numpy as np

from pwavep.core.errors import InvalidParameterError

Kernel = Callable[[np.ndarray], np.ndarray]

FAMILIES = ("mexican-hat", "meyer")


def mexican_hat(x: np.ndarray) -> np.ndarray:
    """x e^(1-x): zero at 0, unit peak at x = 1."""
    x = np.asarray(x, dtype=np.float64)
    return x * np.exp(1.0 - x)


def _mexican_band(lam: np.ndarray, scale: float) -> np.ndarray:
    return mexican_hat(scale * np.asarray(lam, dtype=np.float64))


def _mexican_scaling(lam: np.ndarray, lambda_max: float) -> np.ndarray:
    return np.exp(-((np.asarray(lam, dtype=np.float64) / (0.4 * lambda_max)) ** 4))


def meyer_nu(x: np.ndarray) -> np.ndarray:
    """Meyer auxiliary polynomial x^4 (35 - 84x + 70x^2 - 20x^3) on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


def _meyer_step(lam: np.ndarray, edge: float) -> np.ndarray:
    """Squared cutoff: 1 below edge, 0 above 2*edge, smooth in between."""
    t = (np.asarray(lam, dtype=np.float64) - edge) / edge
    return np.cos(0.5 * np.pi * meyer_nu(t)) ** 2


def _meyer_scaling(lam: np.ndarray, edges: Tuple[float, ...]) -> np.ndarray:
    return np.sqrt(_meyer_step(lam, edges[0]))


def _meyer_band(lam: np.ndarray, edges: Tuple[float, ...], j: int) -> np.ndarray:
    upper = _meyer_step(lam, edges[j]) if j < len(edges) else 1.0
    lower = _meyer_step(lam, edges[j - 1])
    return np.sqrt(np.clip(upper - lower, 0.0, None))


@dataclass(frozen=True, eq=False)
class KernelBank:
    """
    Scaling function and band-pass kernels.

    Attributes:
        family: "mexican-hat", "meyer" or a custom tag
        scale_count: S
        scales: (S,) dilation parameters s_j
        centers: (S,) band centers (argmax of g_j), increasing with j
        scaling_fn: phi
        band_fns: g_1..g_S
        lambda_max: Upper end of the spectral domain
        is_tight: Whether phi^2 + sum g_j^2 == 1 on [0, lambda_max]
    """

    family: str
    scale_count: int
    scales: np.ndarray
    centers: np.ndarray
    scaling_fn: Kernel
    band_fns: Tuple[Kernel, ...]
    lambda_max: float
    is_tight: bool

    def responses(self, lam: np.ndarray) -> np.ndarray:
        """(S+1, len(lam)) kernel values; row 0 is phi, row j is g_j."""
        lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
        rows = [self.scaling_fn(lam)] + [g(lam) for g in self.band_fns]
        return np.vstack([np.broadcast_to(r, lam.shape) for r in rows])

    def tightness_error(self, grid: int = 1000) -> float:
        """max over a grid on [0, lambda_max] of |phi^2 + sum g^2 - 1|."""
        lam = np.linspace(0.0, self.lambda_max, grid)
        return float(np.max(np.abs(np.sum(self.responses(lam) ** 2, axis=0) - 1.0)))


def design_kernel_bank(family: str, scale_count: int, lambda_max: float) -> KernelBank:
    """
    Design a wavelet bank on [0, lambda_max].

    Args:
        family: "mexican-hat" or "meyer"
        scale_count: S, even and >= 2
        lambda_max: Spectral upper bound (e.g. LaplacianPair.lambda_max_estimate)

    Returns:
        KernelBank

    Raises:
        InvalidParameterError: Odd or too-small scale_count, unknown family,
            non-positive lambda_max
    """
    if scale_count < 2 or scale_count % 2:
        raise InvalidParameterError(
            f"scale_count must be even and at least 2, got {scale_count}. The hybrid score "
            "sums the upper half of the bands, so S has to split evenly."
        )
    if lambda_max <= 0:
        raise InvalidParameterError(f"lambda_max must be positive, got {lambda_max}.")

    if family == "mexican-hat":
        ratio = 38.0 ** (1.0 / scale_count)
        centers = (lambda_max / 40.0) * ratio ** np.arange(1, scale_count + 1)
        scales = 1.0 / centers
        return KernelBank(
            family=family,
            scale_count=scale_count,
            scales=scales,
            centers=centers,
            scaling_fn=partial(_mexican_scaling, lambda_max=lambda_max),
            band_fns=tuple(partial(_mexican_band, scale=s) for s in scales),
            lambda_max=float(lambda_max),
            is_tight=False,
        )

    if family == "meyer":
        top = 0.375 * lambda_max
        edges = tuple(top / 2.0 ** (scale_count - 1 - j) for j in range(scale_count))
        # g_j peaks at edges[j]; the last band is flat from 2 * edges[-1]
        centers = np.array(edges[1:] + (2.0 * edges[-1],))
        return KernelBank(
            family=family,
            scale_count=scale_count,
            scales=1.0 / centers,
            centers=centers,
            scaling_fn=partial(_meyer_scaling, edges=edges),
            band_fns=tuple(partial(_meyer_band, edges=edges, j=j) for j in range(1, scale_count + 1)),
            lambda_max=float(lambda_max),
            is_tight=True,
        )

    raise InvalidParameterError(f"Unknown kernel family {family!r}; choose one of {FAMILIES}.")
