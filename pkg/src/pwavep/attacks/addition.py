"""
Point-addition attack.

M new points start at jittered copies of random existing points and climb
J = CE - w * CD(augmented, clean) by sign steps. Each added point stays in
an L-inf box of radius epsilon around its start; original points never move.
"""

from typing import Optional

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from pwavep.attacks.gradient import attack_target
from pwavep.core.config import AttackBudget
from pwavep.geometry.cloud import PointCloud
from pwavep.metrics.distances import chamfer
from pwavep.oracle.base import Oracle

INIT_JITTER = 0.02


def addition_init(cloud: PointCloud, budget: AttackBudget) -> np.ndarray:
    """
    Starting positions of the added points, deterministic in budget.seed.

    Returns:
        (M, 3) coordinates
    """
    m = budget.added_points
    rng = np.random.default_rng(budget.seed)
    rows = rng.choice(cloud.n, size=m, replace=m > cloud.n)
    sigma = INIT_JITTER * cloud.bounding_box_diagonal
    return cloud.points[rows] + rng.normal(0.0, sigma, size=(m, 3))


def _chamfer_gradient(added: np.ndarray, clean_tree: cKDTree, clean: np.ndarray, total: int) -> np.ndarray:
    # Only the augmented->clean direction depends on the added points;
    # every clean point keeps itself as nearest neighbor at distance 0.
    _, nearest = clean_tree.query(added, k=1)
    return 2.0 * (added - clean[nearest]) / total


def point_addition_attack(
    cloud: PointCloud, oracle: Oracle, budget: AttackBudget, target: Optional[int] = None
) -> PointCloud:
    """
    Append budget.added_points adversarial points.

    Args:
        cloud: Clean cloud
        oracle: Gradient oracle (alpha forced to 0)
        budget: added_points, epsilon (box radius), steps, step_size, cd_weight, seed
        target: Label to push away from; defaults to the true label

    Returns:
        Cloud of N + M points; the originals keep their ids and coordinates,
        the added points get fresh ids
    """
    if budget.added_points == 0:
        return cloud

    label = attack_target(cloud, oracle, target)
    clean = cloud.points
    tree = cKDTree(clean)
    init = addition_init(cloud, budget)
    lower, upper = init - budget.epsilon, init + budget.epsilon
    step = budget.resolved_step_size
    total = cloud.n + budget.added_points

    def objective(added: np.ndarray, need_gradient: bool):
        augmented = cloud.append(added)
        out = oracle.evaluate(augmented, target=label, alpha=0.0, need_gradient=need_gradient)
        value = out.ce_loss - budget.cd_weight * chamfer(augmented.points, clean)
        return value, out

    added = init.copy()
    best_added, best_value = added, -np.inf
    for _ in range(budget.steps):
        value, out = objective(added, need_gradient=True)
        if value > best_value:
            best_added, best_value = added, value
        grad = out.coord_gradient[cloud.n :] - budget.cd_weight * _chamfer_gradient(
            added, tree, clean, total
        )
        added = np.clip(added + step * np.sign(grad), lower, upper)

    value, _ = objective(added, need_gradient=False)
    if value > best_value:
        best_added, best_value = added, value

    logger.debug(
        f"point addition: m={budget.added_points} eps={budget.epsilon} best objective={best_value:.4f}"
    )
    return cloud.append(best_added)
