"""
Point saliency.

    spectral score  sum over the high bands j = S/2..S of ||dL/dpsi_{j,i}||_2
                    (norm over the three coordinate axes)
    LSS             (d_i - d_bar)^2, d_i the mean distance from p_i to its
                    graph neighbors and d_bar the mean of d_i
    hybrid          spectral score + beta * LSS
    best band       the high band with the largest gradient norm, ties to the
                    higher band
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pwavep.core.errors import DataError, InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import KnnGraph


@dataclass(frozen=True, eq=False)
class SaliencyReport:
    """
    Per-point saliency, row-aligned with the cloud.

    Attributes:
        ids: (N,) point ids
        spectral_score: (N,) high-band gradient energy
        lss: (N,) local sparsity scores
        hybrid: (N,) combined score used for ranking
        best_band: (N,) 1-based band in S/2..S
        d_bar: Cloud-wide mean neighbor distance
        band_norms: (S, N) gradient norm per band and point
    """

    ids: np.ndarray
    spectral_score: np.ndarray
    lss: np.ndarray
    hybrid: np.ndarray
    best_band: np.ndarray
    d_bar: float
    band_norms: np.ndarray

    @property
    def n(self) -> int:
        return self.hybrid.shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "point_id": self.ids,
                "spectral_score": self.spectral_score,
                "lss": self.lss,
                "hybrid": self.hybrid,
                "best_band": self.best_band,
            }
        )

    def save_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.10g")


def neighbor_mean_distances(cloud: PointCloud, graph: KnnGraph) -> np.ndarray:
    """d_i over the symmetrized adjacency; the divisor is the node degree."""
    if graph.n != cloud.n:
        raise DataError(f"Graph has {graph.n} nodes but the cloud has {cloud.n} points.")
    adjacency = graph.adjacency
    rows = np.repeat(np.arange(graph.n), np.diff(adjacency.indptr))
    cols = adjacency.indices
    lengths = np.linalg.norm(cloud.points[rows] - cloud.points[cols], axis=1)
    sums = np.bincount(rows, weights=lengths, minlength=graph.n)
    degrees = np.maximum(graph.degrees, 1)
    return sums / degrees


def local_sparsity_scores(cloud: PointCloud, graph: KnnGraph) -> Tuple[np.ndarray, float]:
    """
    Local Sparsity Score of every point.

    Returns:
        (scores (N,), d_bar)
    """
    d = neighbor_mean_distances(cloud, graph)
    d_bar = float(d.mean())
    return (d - d_bar) ** 2, d_bar


def high_band_range(scale_count: int) -> range:
    """1-based bands S/2..S."""
    if scale_count < 2 or scale_count % 2:
        raise InvalidParameterError(f"scale_count must be even and at least 2, got {scale_count}.")
    return range(scale_count // 2, scale_count + 1)


def hybrid_saliency(
    band_gradients: Sequence[np.ndarray],
    lss: np.ndarray,
    beta: float = 1.0,
    ids: Optional[np.ndarray] = None,
    d_bar: float = 0.0,
    use_spectral: bool = True,
    use_spatial: bool = True,
) -> SaliencyReport:
    """
    Fuse band gradients and LSS into the hybrid score.

    Args:
        band_gradients: S arrays (N, 3), element j - 1 for band j
        lss: (N,) local sparsity scores
        beta: LSS weight
        ids: Point ids; defaults to 0..N-1
        d_bar: Mean neighbor distance, carried into the report
        use_spectral: Include the gradient term in the hybrid score
        use_spatial: Include the LSS term in the hybrid score

    Returns:
        SaliencyReport
    """
    grads = np.stack([np.asarray(g, dtype=np.float64) for g in band_gradients])
    scale_count, n = grads.shape[0], grads.shape[1]
    lss = np.asarray(lss, dtype=np.float64)
    if lss.shape != (n,):
        raise DataError(f"LSS has shape {lss.shape}, expected ({n},).")

    band_norms = np.linalg.norm(grads, axis=2)
    high = high_band_range(scale_count)
    high_norms = band_norms[high.start - 1 : high.stop - 1]
    spectral = high_norms.sum(axis=0)
    # reversed so argmax's first hit is the highest band
    best_band = high.stop - 1 - np.argmax(high_norms[::-1], axis=0)

    hybrid = np.zeros(n)
    if use_spectral:
        hybrid = hybrid + spectral
    if use_spatial:
        hybrid = hybrid + beta * lss

    return SaliencyReport(
        ids=np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64),
        spectral_score=spectral,
        lss=lss,
        hybrid=hybrid,
        best_band=best_band.astype(np.int64),
        d_bar=float(d_bar),
        band_norms=band_norms,
    )
