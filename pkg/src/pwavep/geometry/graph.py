"""
K-NN graph and Laplacian assembly.

The graph is unweighted and symmetrized by union: i ~ j when either point
selects the other among its k nearest neighbors. Adjacency and degrees are
integers, so the combinatorial Laplacian has exactly zero row sums.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from loguru import logger

from pwavep.core.errors import GraphConstructionError
from pwavep.core.settings import get_settings
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.knn_index import FAISSPointIndex

LAMBDA_MAX_SAFETY = 1.01


@dataclass(frozen=True, eq=False)
class KnnGraph:
    """
    Symmetrized K-NN graph.

    Attributes:
        n: Node count
        k: Neighbors selected per node
        adjacency: (n, n) symmetric 0/1 csr matrix, zero diagonal
        degrees: (n,) int64 node degrees (>= k)
        neighbors: (n, k) directed neighbor rows, nearest first
        neighbor_distances: (n, k) Euclidean distances to `neighbors`
    """

    n: int
    k: int
    adjacency: sp.csr_matrix
    degrees: np.ndarray
    neighbors: np.ndarray
    neighbor_distances: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.nnz // 2)

    def component_count(self) -> int:
        count, _ = connected_components(self.adjacency, directed=False)
        return int(count)

    def is_connected(self) -> bool:
        return self.component_count() == 1


@dataclass(frozen=True, eq=False)
class LaplacianPair:
    """
    Combinatorial and normalized Laplacians of one graph.

    Attributes:
        combinatorial: L = D - A (csr, float64)
        normalized: L_hat = I - D^-1/2 A D^-1/2 (csr, float64)
        lambda_max_estimate: Upper bound on the largest eigenvalue of L_hat, <= 2
        degrees: (n,) float64 degrees
    """

    combinatorial: sp.csr_matrix
    normalized: sp.csr_matrix
    lambda_max_estimate: float
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.combinatorial.shape[0]

    def matrix(self, which: str = "normalized") -> sp.csr_matrix:
        if which == "normalized":
            return self.normalized
        if which == "combinatorial":
            return self.combinatorial
        raise ValueError(f"Unknown Laplacian {which!r}; use 'normalized' or 'combinatorial'.")


def build_knn_graph(cloud: PointCloud, k: int) -> KnnGraph:
    """
    Build the symmetrized K-NN graph of a cloud.

    Args:
        cloud: Input points
        k: Neighbors per point, 1 <= k < N

    Returns:
        KnnGraph

    Raises:
        InvalidParameterError: If k >= N or k < 1
    """
    index = FAISSPointIndex(cloud)
    rows, sq_dist = index.knn(k)

    n = cloud.n
    src = np.repeat(np.arange(n), k)
    directed = sp.csr_matrix(
        (np.ones(n * k, dtype=np.int64), (src, rows.reshape(-1))), shape=(n, n)
    )
    adjacency = ((directed + directed.T) > 0).astype(np.int64).tocsr()
    adjacency.sort_indices()
    degrees = np.asarray(adjacency.sum(axis=1)).reshape(-1).astype(np.int64)

    logger.debug(f"knn graph: n={n} k={k} edges={adjacency.nnz // 2}")

    return KnnGraph(
        n=n,
        k=k,
        adjacency=adjacency,
        degrees=degrees,
        neighbors=rows,
        neighbor_distances=np.sqrt(sq_dist),
    )


def estimate_lambda_max(normalized: sp.csr_matrix, iterations: int, seed: int = 0) -> float:
    """
    Power-iteration estimate of the top eigenvalue of a PSD matrix.

    Returns the Rayleigh quotient of the final iterate. It approaches the top
    eigenvalue from below; callers apply a safety factor.
    """
    n = normalized.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = normalized @ v
        previous, estimate = estimate, float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(estimate - previous) <= 1e-12 * max(1.0, abs(estimate)):
            break
    return estimate


def build_laplacians(graph: KnnGraph) -> LaplacianPair:
    """
    Assemble L = D - A and L_hat = I - D^-1/2 A D^-1/2.

    lambda_max_estimate is 1.01 x the power-iteration estimate, clamped to 2.

    Raises:
        GraphConstructionError: If a node is isolated
    """
    degrees = graph.degrees
    if np.any(degrees == 0):
        isolated = np.flatnonzero(degrees == 0)
        raise GraphConstructionError(
            f"{isolated.size} isolated node(s) (first: row {int(isolated[0])}); "
            "the normalized Laplacian is undefined. Increase k."
        )

    adjacency = graph.adjacency.astype(np.float64)
    deg = degrees.astype(np.float64)
    combinatorial = (sp.diags(deg) - adjacency).tocsr()

    inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
    normalized = (sp.identity(graph.n, format="csr") - inv_sqrt @ adjacency @ inv_sqrt).tocsr()

    settings = get_settings()
    raw = estimate_lambda_max(normalized, settings.power_iterations)
    lambda_max = min(2.0, LAMBDA_MAX_SAFETY * raw)

    logger.debug(f"laplacians: n={graph.n} lambda_max~{raw:.6f} -> {lambda_max:.6f}")

    return LaplacianPair(
        combinatorial=combinatorial,
        normalized=normalized,
        lambda_max_estimate=lambda_max,
        degrees=deg,
    )


def graph_from_adjacency(adjacency, k: int = 0) -> KnnGraph:
    """
    Wrap an explicit symmetric 0/1 adjacency as a KnnGraph (no geometry).

    Useful for closed-form graphs such as paths and triangles.
    """
    adjacency = sp.csr_matrix(adjacency, dtype=np.int64)
    if (adjacency != adjacency.T).nnz:
        raise GraphConstructionError("Adjacency must be symmetric.")
    adjacency.setdiag(0)
    adjacency.eliminate_zeros()
    adjacency.sort_indices()
    n = adjacency.shape[0]
    return KnnGraph(
        n=n,
        k=k,
        adjacency=adjacency,
        degrees=np.asarray(adjacency.sum(axis=1)).reshape(-1).astype(np.int64),
        neighbors=np.empty((n, 0), dtype=np.int64),
        neighbor_distances=np.empty((n, 0), dtype=np.float64),
    )


def require_connected(graph: KnnGraph) -> None:
    """
    Raises:
        GraphConstructionError: If the graph has more than one component
    """
    components = graph.component_count()
    if components != 1:
        raise GraphConstructionError(
            f"The K-NN graph has {components} connected components. Spectral purification "
            "needs a connected graph; increase k or remove far-away clusters first."
        )
