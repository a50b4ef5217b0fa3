"""
Shifted Chebyshev approximation of spectral kernels.

A kernel g on [0, lambda_max] is approximated by

    g(L_hat) ~ c_0 / 2 + sum_{z=1..Z} c_z T_z(L_shift),  L_shift = (2 / lambda_max) L_hat - I

with T_0 = I, T_1 = L_shift, T_z = 2 L_shift T_{z-1} - T_{z-2}. Applying the
approximation costs Z sparse mat-vecs per signal.
"""

from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

from pwavep.core.errors import InvalidParameterError
from pwavep.wavelets.kernels import Kernel

QUADRATURE_POINTS = 2048


def chebyshev_coefficients(kernel: Kernel, order: int, lambda_max: float) -> np.ndarray:
    """
    c_z = (2 / pi) * integral_0^pi cos(z theta) g(lambda_max/2 (cos theta + 1)) d theta

    Args:
        kernel: Function on [0, lambda_max]
        order: Z >= 1
        lambda_max: Domain upper bound

    Returns:
        (Z+1,) coefficients c_0..c_Z
    """
    if order < 1:
        raise InvalidParameterError(f"Chebyshev order must be at least 1, got {order}.")
    theta = np.linspace(0.0, np.pi, QUADRATURE_POINTS)
    values = np.asarray(kernel(0.5 * lambda_max * (np.cos(theta) + 1.0)), dtype=np.float64)
    values = np.broadcast_to(values, theta.shape)
    z = np.arange(order + 1)[:, None]
    return (2.0 / np.pi) * trapezoid(np.cos(z * theta[None, :]) * values[None, :], theta, axis=1)


def coefficient_table(kernels: Sequence[Kernel], order: int, lambda_max: float) -> np.ndarray:
    """(len(kernels), Z+1) table, one row per kernel."""
    return np.vstack([chebyshev_coefficients(g, order, lambda_max) for g in kernels])


def shifted_laplacian(normalized: sp.spmatrix, lambda_max: float) -> sp.csr_matrix:
    """(2 / lambda_max) L_hat - I"""
    n = normalized.shape[0]
    return ((2.0 / lambda_max) * normalized - sp.identity(n, format="csr")).tocsr()


def chebyshev_apply(
    shifted: sp.spmatrix, table: np.ndarray, signal: np.ndarray
) -> np.ndarray:
    """
    Apply every kernel of a coefficient table to a signal in one recursion.

    Args:
        shifted: Output of shifted_laplacian
        table: (K, Z+1) coefficients
        signal: (N, d)

    Returns:
        (K, N, d) filtered signals
    """
    signal = np.asarray(signal, dtype=np.float64)
    table = np.atleast_2d(table)
    order = table.shape[1] - 1

    prev = signal
    out = 0.5 * table[:, 0][:, None, None] * prev[None]
    if order == 0:
        return out
    cur = shifted @ signal
    out = out + table[:, 1][:, None, None] * cur[None]
    for z in range(2, order + 1):
        prev, cur = cur, 2.0 * (shifted @ cur) - prev
        out = out + table[:, z][:, None, None] * cur[None]
    return out


def chebyshev_eval(table: np.ndarray, lam: np.ndarray, lambda_max: float) -> np.ndarray:
    """Scalar evaluation of the truncated series at eigenvalues lam, (K, len(lam))."""
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    x = np.clip(2.0 * lam / lambda_max - 1.0, -1.0, 1.0)
    table = np.atleast_2d(table).copy()
    table[:, 0] *= 0.5
    return np.polynomial.chebyshev.chebval(x, table.T)
