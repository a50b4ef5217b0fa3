"""
Classic purification baselines: statistical and radius outlier removal, and
the graph Fourier low-pass filter.
"""

import numpy as np
from loguru import logger

from pwavep.core.errors import DataError, InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import build_knn_graph, build_laplacians, require_connected
from pwavep.geometry.knn_index import FAISSPointIndex
from pwavep.spectral.basis import eigendecompose
from pwavep.spectral.filters import DEFAULT_LOWPASS_CUTOFF, gft_lowpass


def sor(cloud: PointCloud, k: int = 20, sigma_mult: float = 1.1) -> PointCloud:
    """
    Statistical outlier removal.

    d_i is the mean distance to the k nearest neighbors; points with
    d_i > mean(d) + sigma_mult * std(d) are removed (sample std).

    Args:
        cloud: Input cloud
        k: Neighbors per point, k < N
        sigma_mult: Threshold in standard deviations

    Returns:
        Cloud with outliers removed, ids preserved
    """
    _, sq_dist = FAISSPointIndex(cloud).knn(k)
    d = np.sqrt(sq_dist).mean(axis=1)
    std = d.std(ddof=1) if cloud.n > 1 else 0.0
    threshold = d.mean() + sigma_mult * std
    keep = d <= threshold
    logger.debug(f"sor: k={k} sigma={sigma_mult} removed={int((~keep).sum())}/{cloud.n}")
    return cloud.subset(keep)


def ror(cloud: PointCloud, radius: float, min_neighbors: int = 4) -> PointCloud:
    """
    Radius outlier removal: drop points with fewer than min_neighbors other
    points within radius.

    Raises:
        InvalidParameterError: If radius <= 0
        DataError: If every point would be removed
    """
    if radius <= 0:
        raise InvalidParameterError(f"radius must be positive, got {radius}.")
    if min_neighbors <= 0:
        return cloud
    counts = FAISSPointIndex(cloud).range_count(radius)
    keep = counts >= min_neighbors
    if not keep.any():
        raise DataError(
            f"ROR with radius={radius} and min_neighbors={min_neighbors} removes every point. "
            "Increase the radius."
        )
    logger.debug(f"ror: radius={radius:.4g} min={min_neighbors} removed={int((~keep).sum())}/{cloud.n}")
    return cloud.subset(keep)


def ror_radius(cloud: PointCloud, factor: float = 2.5) -> float:
    """factor x mean nearest-neighbor spacing of the cloud."""
    return float(factor * FAISSPointIndex(cloud).nearest_distances().mean())


def gft_lowpass_defense(
    cloud: PointCloud, k: int = 20, cutoff: float = DEFAULT_LOWPASS_CUTOFF, shape: str = "hard"
) -> PointCloud:
    """Graph Fourier low-pass on the cloud's own normalized K-NN Laplacian."""
    graph = build_knn_graph(cloud, k)
    require_connected(graph)
    basis = eigendecompose(build_laplacians(graph), "normalized")
    return gft_lowpass(cloud, basis, cutoff, shape)
