"""
Wavelet analysis and synthesis operators.

Both modes expose the same surface: analyze() stacks T_phi h, T_1 h, ..., T_S h
into an (S+1, N, d) array and synthesize() maps such a stack back to a signal.
Tight banks synthesize with the adjoint; other banks apply the pseudo-inverse
(W^T W)^-1 W^T of the stacked operator.

    exact      Dense T_k = U g_k(Lambda) U^T from a full eigendecomposition.
    chebyshev  Coefficient tables plus the sparse shifted Laplacian; nothing
               N x N is materialized and non-tight synthesis runs CG on W^T W.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse.linalg import LinearOperator, cg

from pwavep.core.errors import (
    ConditioningError,
    DataError,
    InvalidParameterError,
    NumericalError,
    UnsupportedModeError,
)
from pwavep.geometry.graph import LaplacianPair
from pwavep.spectral.basis import SpectralBasis, as_signal
from pwavep.wavelets.chebyshev import (
    chebyshev_apply,
    chebyshev_eval,
    coefficient_table,
    shifted_laplacian,
)
from pwavep.wavelets.kernels import KernelBank

CONDITION_LIMIT = 1e10
CG_TOLERANCE = 1e-12


class FrameBounds(NamedTuple):
    lower: float
    upper: float
    is_degenerate: bool


@dataclass(frozen=True, eq=False)
class WaveletOperators:
    """
    Immutable analysis/synthesis operators for one graph.

    Attributes:
        mode: "exact" or "chebyshev"
        bank: Kernel bank the operators realize
        n: Node count
        analysis: (S+1, N, N) dense stack (exact mode)
        basis: Eigenbasis the dense stack was built from (exact mode)
        gram_pinv: Pseudo-inverse of W^T W (exact mode, non-tight banks)
        gram_condition: Condition number of W^T W (exact mode)
        table: (S+1, Z+1) Chebyshev coefficients (chebyshev mode)
        shifted: Sparse (2 / lambda_max) L_hat - I (chebyshev mode)
        order: Z (chebyshev mode)
    """

    mode: str
    bank: KernelBank
    n: int
    analysis: Optional[np.ndarray] = None
    basis: Optional[SpectralBasis] = None
    gram_pinv: Optional[np.ndarray] = None
    gram_condition: Optional[float] = None
    table: Optional[np.ndarray] = None
    shifted: Optional[sp.csr_matrix] = None
    order: Optional[int] = None

    @property
    def scale_count(self) -> int:
        return self.bank.scale_count

    @property
    def is_tight(self) -> bool:
        return self.bank.is_tight

    def _check(self, signal) -> np.ndarray:
        return as_signal(signal, self.n)

    def analyze(self, signal) -> np.ndarray:
        """(S+1, N, d) stack [T_phi h, T_1 h, ..., T_S h]."""
        h = self._check(signal)
        if self.mode == "exact":
            return np.einsum("kij,jd->kid", self.analysis, h)
        return chebyshev_apply(self.shifted, self.table, h)

    def apply_band(self, index: int, signal) -> np.ndarray:
        """T_index h for a single kernel (0 is phi, S the highest band)."""
        if not 0 <= index <= self.scale_count:
            raise InvalidParameterError(f"Kernel index must lie in 0..{self.scale_count}, got {index}.")
        h = self._check(signal)
        if self.mode == "exact":
            return self.analysis[index] @ h
        return chebyshev_apply(self.shifted, self.table[index : index + 1], h)[0]

    def adjoint(self, stack: np.ndarray) -> np.ndarray:
        """W^T c = sum_k T_k c_k (every T_k is symmetric)."""
        stack = np.asarray(stack, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[0] != self.scale_count + 1 or stack.shape[1] != self.n:
            raise DataError(
                f"Coefficient stack of shape {stack.shape} does not match "
                f"({self.scale_count + 1}, {self.n}, d)."
            )
        if self.mode == "exact":
            return np.einsum("kij,kjd->id", self.analysis, stack)
        out = np.zeros(stack.shape[1:])
        for k in range(stack.shape[0]):
            out += chebyshev_apply(self.shifted, self.table[k : k + 1], stack[k])[0]
        return out

    def gram_apply(self, signal) -> np.ndarray:
        """W^T W h"""
        return self.adjoint(self.analyze(signal))

    def solve_gram(self, signal) -> np.ndarray:
        """(W^T W)^+ h; the identity for tight banks."""
        h = self._check(signal)
        if self.is_tight:
            return h
        if self.mode == "exact":
            return self.gram_pinv @ h
        return self._cg_solve(h)

    def synthesize(self, stack: np.ndarray) -> np.ndarray:
        """Map an (S+1, N, d) coefficient stack back to an (N, d) signal."""
        return self.solve_gram(self.adjoint(stack))

    def _cg_solve(self, rhs: np.ndarray) -> np.ndarray:
        gram = LinearOperator(
            (self.n, self.n),
            matvec=lambda v: self.gram_apply(v.reshape(-1, 1))[:, 0],
            dtype=np.float64,
        )
        out = np.zeros_like(rhs)
        for axis in range(rhs.shape[1]):
            b = rhs[:, axis]
            if not np.any(b):
                continue
            x, info = cg(gram, b, rtol=CG_TOLERANCE, atol=0.0, maxiter=10 * self.n)
            if info < 0:
                raise NumericalError(f"CG breakdown while synthesizing axis {axis} (info={info}).")
            if info > 0:
                logger.warning(f"CG did not reach tolerance on axis {axis} after {info} iterations")
            out[:, axis] = x
        return out

    def synthesis_column(self, index: int, node: int) -> np.ndarray:
        """
        Reconstruction produced by a unit coefficient at (kernel index, node).

        Returns:
            (N,) column of the synthesis operator
        """
        if not 0 <= node < self.n:
            raise InvalidParameterError(f"node must lie in 0..{self.n - 1}, got {node}.")
        stack = np.zeros((self.scale_count + 1, self.n, 1))
        stack[index, node, 0] = 1.0
        return self.synthesize(stack)[:, 0]

    def kernel_responses(self) -> np.ndarray:
        """
        (S+1, N) kernel values at the graph eigenvalues as realized by the operators.

        Exact mode only; chebyshev responses are the truncated series.
        """
        if self.mode != "exact":
            raise UnsupportedModeError("Kernel responses at eigenvalues require exact operators.")
        return self.bank.responses(self.basis.eigenvalues)


def _gram_pseudo_inverse(basis: SpectralBasis, gram_spectrum: np.ndarray):
    upper = float(gram_spectrum.max())
    lower = float(gram_spectrum.min())
    condition = np.inf if lower <= 0 else upper / lower
    cutoff = upper / CONDITION_LIMIT
    inverse = np.zeros_like(gram_spectrum)
    kept = gram_spectrum > cutoff
    inverse[kept] = 1.0 / gram_spectrum[kept]
    return basis.operator(inverse), condition


def build_operators_exact(
    bank: KernelBank, basis: SpectralBasis, require_invertible: bool = True
) -> WaveletOperators:
    """
    Dense operators T_k = U g_k(Lambda) U^T.

    Args:
        bank: Kernel bank, designed on the same lambda_max as the basis' Laplacian
        basis: Eigenbasis of the normalized Laplacian
        require_invertible: Reject stacks whose W^T W condition number exceeds 1e10

    Returns:
        WaveletOperators in exact mode

    Raises:
        ConditioningError: If the stacked operator is rank deficient and
            require_invertible is set
    """
    responses = bank.responses(basis.eigenvalues)
    analysis = np.stack([basis.operator(r) for r in responses])

    gram_spectrum = np.sum(responses**2, axis=0)
    gram_pinv, condition = _gram_pseudo_inverse(basis, gram_spectrum)
    if require_invertible and condition > CONDITION_LIMIT:
        raise ConditioningError(
            f"Stacked wavelet operator is ill-conditioned (cond(W^T W) = {condition:.3e} > "
            f"{CONDITION_LIMIT:.0e}). Some graph frequency is covered by no kernel; "
            "use a bank whose scaling function and bands span [0, lambda_max]."
        )

    logger.debug(
        f"exact operators: family={bank.family} S={bank.scale_count} n={basis.n} "
        f"cond={condition:.3e}"
    )
    return WaveletOperators(
        mode="exact",
        bank=bank,
        n=basis.n,
        analysis=analysis,
        basis=basis,
        gram_pinv=None if bank.is_tight else gram_pinv,
        gram_condition=float(condition),
    )


def build_operators_chebyshev(bank: KernelBank, lap: LaplacianPair, order: int) -> WaveletOperators:
    """
    Chebyshev-approximated operators on the normalized Laplacian.

    Low orders are accepted; the approximation error is reported in the debug log.

    Args:
        bank: Kernel bank on [0, lap.lambda_max_estimate]
        lap: Laplacians of the graph
        order: Z >= 1

    Returns:
        WaveletOperators in chebyshev mode
    """
    kernels = (bank.scaling_fn,) + tuple(bank.band_fns)
    table = coefficient_table(kernels, order, bank.lambda_max)

    grid = np.linspace(0.0, bank.lambda_max, 512)
    fit = np.max(np.abs(chebyshev_eval(table, grid, bank.lambda_max) - bank.responses(grid)))
    logger.debug(
        f"chebyshev operators: family={bank.family} S={bank.scale_count} Z={order} "
        f"n={lap.n} max kernel error={fit:.3e}"
    )

    return WaveletOperators(
        mode="chebyshev",
        bank=bank,
        n=lap.n,
        table=table,
        shifted=shifted_laplacian(lap.normalized, bank.lambda_max),
        order=order,
    )


def frame_bounds(ops: WaveletOperators) -> FrameBounds:
    """
    Extreme eigenvalues of W^T W.

    Raises:
        UnsupportedModeError: For chebyshev operators
    """
    if ops.mode != "exact":
        raise UnsupportedModeError(
            "frame_bounds needs exact operators; rebuild with build_operators_exact."
        )
    spectrum = np.sum(ops.kernel_responses() ** 2, axis=0)
    lower, upper = float(spectrum.min()), float(spectrum.max())
    return FrameBounds(lower=lower, upper=upper, is_degenerate=lower <= upper / CONDITION_LIMIT)
