"""
Point-set discrepancy metrics.

    chamfer  mean squared nearest-neighbor distance, summed over both directions
    emd      optimal transport between uniform masses, Euclidean ground cost,
             reported as the mean per-point transport distance
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import ot
import scipy.sparse as sp
from loguru import logger
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from pwavep.core.errors import InvalidParameterError, NumericalError
from pwavep.core.settings import get_settings
from pwavep.geometry.cloud import PointCloud
from pwavep.spectral.filters import BandPerturbation

CloudLike = Union[PointCloud, np.ndarray]

SINKHORN_REG_FRACTION = 0.01
SINKHORN_MAX_ITER = 20000
MARGINAL_TOLERANCE = 1e-6


def _points(cloud: CloudLike) -> np.ndarray:
    points = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise InvalidParameterError(f"Expected an (N, 3) point array, got shape {points.shape}.")
    if points.shape[0] == 0:
        raise InvalidParameterError("Distance between empty point sets is undefined.")
    return points


def chamfer(a: CloudLike, b: CloudLike) -> float:
    """
    Chamfer distance; each direction is normalized by its own cardinality.

    Raises:
        InvalidParameterError: If either cloud is empty
    """
    pa, pb = _points(a), _points(b)
    d_ab, _ = cKDTree(pb).query(pa, k=1)
    d_ba, _ = cKDTree(pa).query(pb, k=1)
    return float(np.mean(d_ab**2) + np.mean(d_ba**2))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Attributes:
        cost: Mean per-point transport distance
        coupling: Sparse (assignment) or dense (entropic) plan with uniform marginals
        solver: "hungarian-exact" or "sinkhorn"
        marginal_violation: Max absolute deviation of the plan's marginals
        converged: Marginals within 1e-6
    """

    cost: float
    coupling: Union[np.ndarray, sp.csr_matrix]
    solver: str
    marginal_violation: float = 0.0
    converged: bool = True


def _marginal_violation(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(max(np.abs(plan.sum(axis=1) - a).max(), np.abs(plan.sum(axis=0) - b).max()))


def hungarian_emd(pa: np.ndarray, pb: np.ndarray) -> TransportPlan:
    n = pa.shape[0]
    cost = cdist(pa, pb)
    rows, cols = linear_sum_assignment(cost)
    coupling = sp.csr_matrix((np.full(n, 1.0 / n), (rows, cols)), shape=(n, n))
    return TransportPlan(cost=float(cost[rows, cols].mean()), coupling=coupling, solver="hungarian-exact")


def sinkhorn_emd(
    pa: np.ndarray, pb: np.ndarray, reg: float = None, max_iter: int = SINKHORN_MAX_ITER
) -> TransportPlan:
    """
    Entropic OT in the log domain with reg = 0.01 * mean ground cost by default.

    Non-convergence is reported on the plan, not raised.
    """
    cost = cdist(pa, pb)
    a = ot.unif(pa.shape[0])
    b = ot.unif(pb.shape[0])
    if reg is None:
        reg = SINKHORN_REG_FRACTION * float(cost.mean())
    if reg <= 0:
        # coincident single points
        reg = SINKHORN_REG_FRACTION
    plan = ot.sinkhorn(a, b, cost, reg, method="sinkhorn_log", numItermax=max_iter, stopThr=1e-10,
                       warn=False)
    violation = _marginal_violation(plan, a, b)
    converged = violation <= MARGINAL_TOLERANCE
    if not converged:
        logger.warning(f"Sinkhorn did not converge: marginal violation {violation:.2e} after {max_iter} iterations")
    return TransportPlan(
        cost=float(np.sum(plan * cost)),
        coupling=plan,
        solver="sinkhorn",
        marginal_violation=violation,
        converged=converged,
    )


def emd(a: CloudLike, b: CloudLike, solver: str = "auto", reg: float = None) -> TransportPlan:
    """
    Earth mover's distance between two clouds with uniform masses.

    Args:
        a: First cloud
        b: Second cloud
        solver: "hungarian-exact", "sinkhorn" or "auto" (exact when the sizes
            match and N <= settings.hungarian_cap)
        reg: Sinkhorn regularization; defaults to 0.01 * mean ground cost

    Returns:
        TransportPlan

    Raises:
        InvalidParameterError: Exact solver on clouds of different sizes
    """
    pa, pb = _points(a), _points(b)
    cap = get_settings().hungarian_cap
    if solver == "auto":
        if pa.shape[0] != pb.shape[0]:
            solver = "sinkhorn"
        else:
            solver = "hungarian-exact"

    if solver == "hungarian-exact":
        if pa.shape[0] != pb.shape[0]:
            raise InvalidParameterError(
                f"The exact solver needs equal sizes, got {pa.shape[0]} and {pb.shape[0]}. "
                "Use solver='sinkhorn' for clouds of different sizes."
            )
        if pa.shape[0] > cap:
            logger.warning(
                f"EMD on {pa.shape[0]} points exceeds hungarian_cap={cap}; using Sinkhorn instead"
            )
            return sinkhorn_emd(pa, pb, reg)
        return hungarian_emd(pa, pb)
    if solver == "sinkhorn":
        return sinkhorn_emd(pa, pb, reg)
    raise InvalidParameterError(f"Unknown EMD solver {solver!r}; use 'hungarian-exact', 'sinkhorn' or 'auto'.")


def cd_bound_check(clean: CloudLike, delta: Union[np.ndarray, BandPerturbation]) -> Tuple[float, float]:
    """
    Chamfer distance of an index-aligned perturbation against 2 ||delta||_F^2 / N.

    Returns:
        (cd_actual, bound)

    Raises:
        NumericalError: If the bound is violated beyond 1e-9
    """
    points = _points(clean)
    delta = delta.delta if isinstance(delta, BandPerturbation) else np.asarray(delta, dtype=np.float64)
    if delta.shape != points.shape:
        raise InvalidParameterError(f"Perturbation shape {delta.shape} does not match {points.shape}.")
    n = points.shape[0]
    bound = 2.0 * float(np.sum(delta**2)) / n
    actual = chamfer(points, points + delta)
    if actual > bound + 1e-9:
        raise NumericalError(f"Chamfer distance {actual:.6e} exceeds its bound {bound:.6e}.")
    return actual, bound
