"""
Graph Fourier basis.

Dense eigendecomposition of a graph Laplacian, the forward/inverse GFT and
the smoothness functional h^T L h. Signals are (N, d) arrays, one column
per coordinate axis.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from loguru import logger

from pwavep.core.errors import CapacityError, DataError, NumericalError
from pwavep.core.settings import get_settings
from pwavep.geometry.graph import LaplacianPair

# (N, d) array; coordinates are three independent signals
GraphSignal = np.ndarray


def as_signal(values, n: int) -> np.ndarray:
    """
    Coerce to a float64 (n, d) signal.

    Raises:
        DataError: If the row count does not match n
    """
    signal = np.asarray(values, dtype=np.float64)
    if signal.ndim == 1:
        signal = signal[:, None]
    if signal.ndim != 2 or signal.shape[0] != n:
        raise DataError(f"Signal of shape {signal.shape} does not match a graph with {n} nodes.")
    return signal


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    Eigenpairs of a Laplacian.

    Attributes:
        eigenvalues: (N,) non-decreasing
        eigenvectors: (N, N) orthonormal, columns are the Fourier basis
        which: "normalized" or "combinatorial"
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    which: str = "normalized"

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def gft(self, signal: GraphSignal) -> np.ndarray:
        """h_hat = U^T h"""
        return self.eigenvectors.T @ as_signal(signal, self.n)

    def igft(self, spectrum: np.ndarray) -> np.ndarray:
        """h = U h_hat"""
        return self.eigenvectors @ as_signal(spectrum, self.n)

    def apply_response(self, response: np.ndarray, signal: GraphSignal) -> np.ndarray:
        """U diag(response) U^T h"""
        return self.eigenvectors @ (np.asarray(response)[:, None] * self.gft(signal))

    def operator(self, response: np.ndarray) -> np.ndarray:
        """Dense U diag(response) U^T, symmetrized."""
        op = (self.eigenvectors * np.asarray(response)[None, :]) @ self.eigenvectors.T
        return 0.5 * (op + op.T)


def eigendecompose(lap: LaplacianPair, which: str = "normalized") -> SpectralBasis:
    """
    Full eigendecomposition of L_hat (default) or L.

    Each eigenvector's sign is fixed so its largest-magnitude entry is
    positive, which makes the basis deterministic.

    Raises:
        CapacityError: If N exceeds settings.dense_cap
    """
    settings = get_settings()
    n = lap.n
    if n > settings.dense_cap:
        raise CapacityError(
            f"Dense eigendecomposition of {n} nodes exceeds dense_cap={settings.dense_cap}. "
            "Use Chebyshev operators (mode='chebyshev') or raise the cap with "
            "configure(dense_cap=...) / PWAVEP_DENSE_CAP."
        )

    matrix = lap.matrix(which).toarray()
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)

    pivot = np.argmax(np.abs(eigenvectors), axis=0)
    signs = np.sign(eigenvectors[pivot, np.arange(n)])
    signs[signs == 0] = 1.0
    eigenvectors = eigenvectors * signs[None, :]

    logger.debug(
        f"eigendecompose({which}): n={n} lambda_min={eigenvalues[0]:.3e} "
        f"lambda_max={eigenvalues[-1]:.6f}"
    )
    return SpectralBasis(eigenvalues=eigenvalues, eigenvectors=eigenvectors, which=which)


def edge_smoothness(lap: LaplacianPair, signal: GraphSignal, which: str = "combinatorial") -> np.ndarray:
    """
    Sum over edges of squared signal differences, per axis.

    For the normalized Laplacian the differences are degree-scaled:
    (h_i / sqrt(d_i) - h_j / sqrt(d_j))^2.
    """
    h = as_signal(signal, lap.n)
    if which == "normalized":
        h = h / np.sqrt(lap.degrees)[:, None]
    adjacency = lap.combinatorial.copy()
    adjacency.setdiag(0)
    upper = adjacency.tocoo()
    mask = upper.row < upper.col
    rows, cols = upper.row[mask], upper.col[mask]
    weights = -upper.data[mask]
    diff = h[rows] - h[cols]
    return np.einsum("e,ed->d", weights, diff**2)


def spectral_smoothness(basis: SpectralBasis, signal: GraphSignal) -> np.ndarray:
    """sum_k lambda_k h_hat_k^2 per axis."""
    spectrum = basis.gft(signal)
    return np.einsum("k,kd->d", basis.eigenvalues, spectrum**2)


def smoothness(
    lap: LaplacianPair,
    signal: GraphSignal,
    basis: Optional[SpectralBasis] = None,
    which: str = "combinatorial",
) -> np.ndarray:
    """
    h^T L h per axis, cross-checked between the edge and spectral forms.

    Args:
        lap: Laplacians of the graph
        signal: (N, d) signal
        basis: Eigenbasis of the same Laplacian; computed when omitted and
            N is within the dense cap
        which: "combinatorial" (L = D - A) or "normalized"

    Returns:
        (d,) smoothness per axis (edge form)

    Raises:
        NumericalError: If the two forms disagree beyond 1e-8 relative
    """
    edge = edge_smoothness(lap, signal, which)
    if basis is None:
        if lap.n > get_settings().dense_cap:
            logger.debug("smoothness: spectral cross-check skipped above dense cap")
            return edge
        basis = eigendecompose(lap, which)
    elif basis.which != which:
        raise DataError(f"Basis is for the {basis.which} Laplacian, not {which}.")

    spectral = spectral_smoothness(basis, signal)
    scale = max(1.0, float(np.abs(edge).max()))
    if np.max(np.abs(edge - spectral)) > 1e-8 * scale:
        raise NumericalError(
            f"Smoothness forms disagree: edge={edge.tolist()} spectral={spectral.tolist()}"
        )
    return edge
