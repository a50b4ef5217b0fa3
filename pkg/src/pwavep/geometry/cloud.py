"""
Point-cloud container.

A PointCloud is an immutable (N, 3) coordinate array paired with N stable
integer ids. Ids survive every removal; new points (point-addition attacks)
get fresh ids above the current maximum.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from pwavep.core.errors import DataError

ArrayLike = Union[np.ndarray, list, tuple]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    An ordered set of 3D points with stable ids.

    Attributes:
        points: (N, 3) float64 coordinates, read-only
        ids: (N,) int64 unique ids, read-only. Defaults to 0..N-1
        label: Optional class index
    """

    points: np.ndarray
    ids: Optional[np.ndarray] = None
    label: Optional[int] = field(default=None)

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise DataError(f"Point array must have shape (N, 3), got {points.shape}.")
        if points.shape[0] < 1:
            raise DataError("A point cloud needs at least one point.")
        finite = np.isfinite(points).all(axis=1)
        if not finite.all():
            row = int(np.flatnonzero(~finite)[0])
            raise DataError(f"Point {row} has a non-finite coordinate: {points[row].tolist()}")

        if self.ids is None:
            ids = np.arange(points.shape[0], dtype=np.int64)
        else:
            ids = np.array(self.ids, dtype=np.int64).reshape(-1)
            if ids.shape[0] != points.shape[0]:
                raise DataError(f"Got {ids.shape[0]} ids for {points.shape[0]} points.")
            if np.unique(ids).shape[0] != ids.shape[0]:
                raise DataError("Point ids must be unique.")

        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "ids", _readonly(ids))
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))

    @property
    def n(self) -> int:
        """Number of points."""
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def next_id(self) -> int:
        """Smallest id guaranteed unused by this cloud."""
        return int(self.ids.max()) + 1

    @property
    def bounding_box_diagonal(self) -> float:
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))

    @classmethod
    def from_points(cls, points: ArrayLike, label: Optional[int] = None) -> "PointCloud":
        """Build a cloud with default ids 0..N-1."""
        return cls(points=np.asarray(points, dtype=np.float64), label=label)

    def with_points(self, points: ArrayLike) -> "PointCloud":
        """Same ids and label, new coordinates (must be the same count)."""
        points = np.asarray(points, dtype=np.float64)
        if points.shape != self.points.shape:
            raise DataError(
                f"Replacement coordinates have shape {points.shape}, expected {self.points.shape}."
            )
        return PointCloud(points=points, ids=self.ids, label=self.label)

    def subset(self, rows: ArrayLike) -> "PointCloud":
        """Keep the given rows (index array or boolean mask), preserving ids."""
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        if rows.size == 0:
            raise DataError("Selection would leave an empty point cloud.")
        return PointCloud(points=self.points[rows], ids=self.ids[rows], label=self.label)

    def without_ids(self, ids: Iterable[int]) -> "PointCloud":
        """Drop the points carrying the given ids. Unknown ids are ignored."""
        drop = np.fromiter((int(i) for i in ids), dtype=np.int64)
        if drop.size == 0:
            return self
        return self.subset(~np.isin(self.ids, drop))

    def rows_of(self, ids: Iterable[int]) -> np.ndarray:
        """
        Row positions of the given ids, in the given order.

        Raises:
            DataError: If an id is not present
        """
        wanted = np.fromiter((int(i) for i in ids), dtype=np.int64)
        order = np.argsort(self.ids, kind="stable")
        pos = np.searchsorted(self.ids, wanted, sorter=order)
        pos = np.minimum(pos, self.n - 1)
        rows = order[pos]
        missing = self.ids[rows] != wanted
        if missing.any():
            raise DataError(f"Ids not in cloud: {wanted[missing][:10].tolist()}")
        return rows

    def append(self, points: ArrayLike) -> "PointCloud":
        """Add points with fresh ids (next_id, next_id + 1, ...)."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if points.shape[0] == 0:
            return self
        new_ids = np.arange(self.next_id, self.next_id + points.shape[0], dtype=np.int64)
        return PointCloud(
            points=np.vstack([self.points, points]),
            ids=np.concatenate([self.ids, new_ids]),
            label=self.label,
        )

    def permuted(self, order: ArrayLike) -> "PointCloud":
        """Reorder rows; ids travel with their points."""
        order = np.asarray(order, dtype=np.int64)
        return PointCloud(points=self.points[order], ids=self.ids[order], label=self.label)

    def __repr__(self) -> str:
        return f"PointCloud(n={self.n}, label={self.label})"
