"""
Forward and inverse graph wavelet transform of point coordinates.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pwavep.core.errors import DataError, NumericalError
from pwavep.wavelets.operators import WaveletOperators

AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    """
    Scaling coefficients and per-band wavelet coefficients.

    Attributes:
        scaling: (N, d) low-pass coefficients
        bands: S arrays of shape (N, d); bands[j - 1] is band j, band S the highest
    """

    scaling: np.ndarray
    bands: Tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = self.scaling.shape
        for j, band in enumerate(self.bands, start=1):
            if band.shape != shape:
                raise DataError(f"Band {j} has shape {band.shape}, expected {shape}.")
        if not np.all(np.isfinite(self.stacked())):
            raise NumericalError("Wavelet coefficients contain non-finite values.")

    @property
    def scale_count(self) -> int:
        return len(self.bands)

    @property
    def n(self) -> int:
        return self.scaling.shape[0]

    def band(self, j: int) -> np.ndarray:
        """1-based band accessor."""
        return self.bands[j - 1]

    def stacked(self) -> np.ndarray:
        """(S+1, N, d) with the scaling coefficients first."""
        return np.stack((self.scaling,) + tuple(self.bands))

    @classmethod
    def from_stacked(cls, stack: np.ndarray) -> "WaveletCoefficients":
        stack = np.asarray(stack, dtype=np.float64)
        return cls(scaling=stack[0].copy(), bands=tuple(b.copy() for b in stack[1:]))

    def energy(self) -> float:
        """||delta||^2 + sum_s ||psi_s||^2"""
        return float(np.sum(self.stacked() ** 2))

    def with_band_rows(self, j: int, rows: np.ndarray, values: np.ndarray) -> "WaveletCoefficients":
        """Copy with band j's rows replaced by values."""
        stack = self.stacked()
        stack[j, rows] = values
        return WaveletCoefficients.from_stacked(stack)

    def to_frame(self, ids: Optional[Sequence[int]] = None) -> pd.DataFrame:
        """Long format: point_id, axis, scale (0 = scaling), value."""
        stack = self.stacked()
        count, n, dims = stack.shape
        ids = np.arange(n) if ids is None else np.asarray(ids)
        scale, row, axis = np.meshgrid(np.arange(count), np.arange(n), np.arange(dims), indexing="ij")
        return pd.DataFrame(
            {
                "point_id": ids[row.ravel()],
                "axis": np.array(AXES[:dims] if dims <= 3 else range(dims))[axis.ravel()],
                "scale": scale.ravel(),
                "value": stack.ravel(),
            }
        )

    def save_csv(self, path: str, ids: Optional[Sequence[int]] = None) -> None:
        self.to_frame(ids).to_csv(path, index=False, float_format="%.10g")


def gwt(ops: WaveletOperators, signal: np.ndarray) -> WaveletCoefficients:
    """
    delta = T_phi h and psi_s = T_s h per axis.

    Args:
        ops: Operators of the signal's graph
        signal: (N, d) node signal, usually point coordinates

    Returns:
        WaveletCoefficients
    """
    return WaveletCoefficients.from_stacked(ops.analyze(signal))


def igwt(ops: WaveletOperators, coeffs: WaveletCoefficients) -> np.ndarray:
    """
    Reconstruct a signal; adjoint for tight banks, pseudo-inverse otherwise.

    Raises:
        DataError: If the coefficients do not match the operators
    """
    if coeffs.scale_count != ops.scale_count or coeffs.n != ops.n:
        raise DataError(
            f"Coefficients (S={coeffs.scale_count}, N={coeffs.n}) do not match "
            f"operators (S={ops.scale_count}, N={ops.n})."
        )
    return ops.synthesize(coeffs.stacked())
