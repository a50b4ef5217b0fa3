"""
Coordinate attacks: iterated sign-gradient ascent on the cross-entropy,
projected onto the L-inf ball around the clean cloud.
"""

from typing import Optional

import numpy as np
from loguru import logger

from pwavep.core.config import AttackBudget
from pwavep.geometry.cloud import PointCloud
from pwavep.oracle.base import Oracle


def attack_target(cloud: PointCloud, oracle: Oracle, target: Optional[int] = None) -> int:
    """Explicit target, else the true label, else the model's prediction."""
    if target is not None:
        return int(target)
    if cloud.label is not None:
        return int(cloud.label)
    return oracle.predict(cloud)


def pgd_attack(
    cloud: PointCloud, oracle: Oracle, budget: AttackBudget, target: Optional[int] = None
) -> PointCloud:
    """
    L-inf PGD on the point coordinates.

    Every iterate stays within budget.epsilon of the clean coordinates; the
    iterate with the highest loss (the clean cloud included) is returned.

    Args:
        cloud: Clean cloud
        oracle: Gradient oracle (alpha is forced to 0, plain cross-entropy)
        budget: epsilon, steps and step_size
        target: Label to push away from; defaults to the true label

    Returns:
        Attacked cloud with the same ids
    """
    label = attack_target(cloud, oracle, target)
    step = budget.resolved_step_size
    clean = cloud.points
    lower, upper = clean - budget.epsilon, clean + budget.epsilon

    x = clean.copy()
    best_x, best_loss = x, -np.inf
    for _ in range(budget.steps):
        out = oracle.evaluate(cloud.with_points(x), target=label, alpha=0.0)
        if out.loss > best_loss:
            best_x, best_loss = x, out.loss
        x = np.clip(x + step * np.sign(out.coord_gradient), lower, upper)

    final = oracle.evaluate(cloud.with_points(x), target=label, alpha=0.0, need_gradient=False)
    if final.loss > best_loss:
        best_x, best_loss = x, final.loss

    logger.debug(f"pgd: eps={budget.epsilon} steps={budget.steps} best loss={best_loss:.4f}")
    return cloud.with_points(best_x)


def fgsm_attack(
    cloud: PointCloud, oracle: Oracle, budget: AttackBudget, target: Optional[int] = None
) -> PointCloud:
    """Single full-epsilon sign step."""
    single = budget.model_copy(update={"steps": 1, "step_size": budget.epsilon})
    return pgd_attack(cloud, oracle, single, target)
