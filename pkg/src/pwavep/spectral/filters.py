"""
Spectral filtering and band-limited perturbations.

gft_lowpass is the Fourier-domain purification baseline; band injection
synthesizes perturbations of fixed Frobenius energy confined to one
index-uniform band of the spectrum (the DC index is never perturbed).
"""

from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np

from pwavep.core.errors import DataError, InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.spectral.basis import SpectralBasis

# Eigenvalues within this distance of the cutoff count as passed
CUTOFF_TOLERANCE = 1e-10

DEFAULT_LOWPASS_CUTOFF = 0.67


def lowpass_response(
    eigenvalues: np.ndarray, cutoff: float, shape: Literal["hard", "linear"] = "hard"
) -> np.ndarray:
    if shape == "hard":
        return (eigenvalues <= cutoff + CUTOFF_TOLERANCE).astype(np.float64)
    if shape == "linear":
        if cutoff <= 0:
            return (eigenvalues <= CUTOFF_TOLERANCE).astype(np.float64)
        return np.clip(1.0 - eigenvalues / cutoff, 0.0, 1.0)
    raise InvalidParameterError(f"Unknown low-pass shape {shape!r}; use 'hard' or 'linear'.")


def gft_lowpass(
    cloud: PointCloud,
    basis: SpectralBasis,
    cutoff: float = DEFAULT_LOWPASS_CUTOFF,
    shape: Literal["hard", "linear"] = "hard",
) -> PointCloud:
    """
    Replace coordinates by U phi(Lambda) U^T h.

    Args:
        cloud: Cloud the basis was built on
        basis: Eigenbasis of the cloud's own K-NN graph
        cutoff: Eigenvalue threshold in [0, 2]
        shape: "hard" passes lambda <= cutoff; "linear" uses max(0, 1 - lambda/cutoff)

    Returns:
        Filtered cloud with the same ids
    """
    if not 0.0 <= cutoff <= 2.0:
        raise InvalidParameterError(f"cutoff must lie in [0, 2], got {cutoff}.")
    if basis.n != cloud.n:
        raise DataError(f"Basis has {basis.n} nodes but the cloud has {cloud.n} points.")
    response = lowpass_response(basis.eigenvalues, cutoff, shape)
    return cloud.with_points(basis.apply_response(response, cloud.points))


@dataclass(frozen=True, eq=False)
class BandPerturbation:
    """
    A perturbation supported on one spectral band.

    Attributes:
        band_index: 1-based band b
        band_count: Number of bands B
        energy: Target Frobenius norm
        delta: (N, 3) spatial perturbation
        delta_hat: (N, 3) spectral image, zero outside the band rows
        rows: Eigenvalue indices of the band
    """

    band_index: int
    band_count: int
    energy: float
    delta: np.ndarray
    delta_hat: np.ndarray
    rows: np.ndarray


def band_slices(n: int, band_count: int) -> List[np.ndarray]:
    """
    Partition eigen-indices 1..n-1 (0-based, DC excluded) into band_count
    contiguous bands of near-equal size.

    Raises:
        InvalidParameterError: If some band would be empty
    """
    if band_count < 1:
        raise InvalidParameterError(f"band_count must be at least 1, got {band_count}.")
    if band_count > n - 1:
        raise InvalidParameterError(
            f"band_count={band_count} leaves empty bands on a {n}-node graph "
            f"(at most {n - 1} non-DC eigenvalues)."
        )
    return np.array_split(np.arange(1, n), band_count)


def inject_band_perturbation(
    cloud: PointCloud,
    basis: SpectralBasis,
    band_index: int,
    band_count: int,
    energy: float,
    seed: int = 0,
) -> Tuple[PointCloud, BandPerturbation]:
    """
    Add a Gaussian perturbation confined to one spectral band.

    Args:
        cloud: Clean cloud
        basis: Eigenbasis of the cloud's K-NN graph
        band_index: 1-based band to perturb
        band_count: Number of index-uniform bands
        energy: Frobenius norm of the perturbation (>= 0)
        seed: Random seed

    Returns:
        (perturbed cloud, BandPerturbation)
    """
    if basis.n != cloud.n:
        raise DataError(f"Basis has {basis.n} nodes but the cloud has {cloud.n} points.")
    bands = band_slices(cloud.n, band_count)
    if not 1 <= band_index <= band_count:
        raise InvalidParameterError(
            f"band_index must lie in 1..{band_count}, got {band_index}."
        )
    if energy < 0:
        raise InvalidParameterError(f"energy must be non-negative, got {energy}.")

    rows = bands[band_index - 1]
    delta_hat = np.zeros((cloud.n, 3))
    if energy > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((rows.size, 3))
        delta_hat[rows] = noise * (energy / np.linalg.norm(noise))
    delta = basis.eigenvectors @ delta_hat

    perturbation = BandPerturbation(
        band_index=band_index,
        band_count=band_count,
        energy=float(energy),
        delta=delta,
        delta_hat=delta_hat,
        rows=rows,
    )
    return cloud.with_points(cloud.points + delta), perturbation
