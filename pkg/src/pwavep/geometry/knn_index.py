"""
FAISS point index for PWaveP.

This module provides exact Euclidean neighbor search over 3D points using
FAISS. FAISS works in float32; neighbors are re-ranked in float64 with a
deterministic tie rule (distance, then lower point id), and the candidate
pool is widened until the float32 pre-selection provably contains every
float64 neighbor.
"""

from typing import Tuple

import faiss
import numpy as np

from pwavep.core.errors import InvalidParameterError
from pwavep.geometry.cloud import PointCloud

# Extra float32 candidates fetched beyond k before re-ranking
CANDIDATE_MARGIN = 8


class FAISSPointIndex:
    """
    A FAISS-backed exact L2 index over one point cloud.

    Attributes:
        index: The FAISS index (IndexFlatL2, squared distances)
        points: float64 copy of the indexed coordinates
        ids: Point ids, row-aligned with points (tie-break key)
    """

    def __init__(self, cloud: PointCloud):
        """
        Build the index.

        Args:
            cloud: Points to index
        """
        self.points = cloud.points
        self.ids = cloud.ids
        self.index = faiss.IndexFlatL2(3)
        self.index.add(np.ascontiguousarray(cloud.points, dtype=np.float32))

        # float32 round-off bound on squared distances
        scale = float(np.max(np.sum(cloud.points**2, axis=1)))
        self._tolerance = 1e-5 * (1.0 + 4.0 * scale)

    @property
    def count(self) -> int:
        """Number of indexed points."""
        return self.index.ntotal

    def _candidates(self, rows: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
        queries = np.ascontiguousarray(self.points[rows], dtype=np.float32)
        dist32, cand = self.index.search(queries, m)
        return dist32, cand

    def knn(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Exact k nearest neighbors of every indexed point, excluding itself.

        Ties in distance are broken by lower point id.

        Args:
            k: Neighbors per point, 1 <= k < N

        Returns:
            (rows, sq_dist): (N, k) neighbor row positions and float64 squared distances
        """
        n = self.count
        if k < 1 or k >= n:
            raise InvalidParameterError(
                f"k must satisfy 1 <= k < N, got k={k} for N={n}. "
                "Use a smaller k or a larger point cloud."
            )

        out_rows = np.empty((n, k), dtype=np.int64)
        out_dist = np.empty((n, k), dtype=np.float64)
        pending = np.arange(n)
        m = min(n, k + 1 + CANDIDATE_MARGIN)

        while pending.size:
            dist32, cand = self._candidates(pending, m)
            diff = self.points[cand] - self.points[pending][:, None, :]
            exact = np.einsum("ijk,ijk->ij", diff, diff)
            exact[cand == pending[:, None]] = np.inf

            order = np.lexsort((self.ids[cand], exact), axis=-1)
            sorted_cand = np.take_along_axis(cand, order, axis=-1)[:, :k]
            sorted_dist = np.take_along_axis(exact, order, axis=-1)[:, :k]

            if m >= n:
                ok = np.ones(pending.size, dtype=bool)
            else:
                # Anything outside the pool has float32 distance >= the last candidate's
                ok = sorted_dist[:, -1] + self._tolerance < dist32[:, -1]

            done = pending[ok]
            out_rows[done] = sorted_cand[ok]
            out_dist[done] = sorted_dist[ok]
            pending = pending[~ok]
            m = min(n, 2 * m)

        return out_rows, out_dist

    def range_count(self, radius: float) -> np.ndarray:
        """
        Number of other points strictly within `radius` of each point.

        Args:
            radius: Search radius (> 0)

        Returns:
            (N,) int64 neighbor counts, self excluded
        """
        if radius <= 0:
            raise InvalidParameterError(f"radius must be positive, got {radius}.")
        queries = np.ascontiguousarray(self.points, dtype=np.float32)
        lims, _, _ = self.index.range_search(queries, float(radius) ** 2)
        return np.diff(lims).astype(np.int64) - 1

    def nearest_distances(self) -> np.ndarray:
        """Euclidean distance from each point to its nearest other point."""
        _, sq = self.knn(1)
        return np.sqrt(sq[:, 0])
