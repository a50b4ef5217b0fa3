from typing import Optional

from pwavep.attacks.addition import point_addition_attack
from pwavep.attacks.gradient import pgd_attack
from pwavep.core.config import AttackBudget
from pwavep.core.errors import InvalidParameterError
from pwavep.geometry.cloud import PointCloud
from pwavep.geometry.graph import build_knn_graph, build_laplacians, require_connected
from pwavep.oracle.base import Oracle
from pwavep.spectral.basis import eigendecompose
from pwavep.spectral.filters import inject_band_perturbation


def spectral_band_attack(cloud: PointCloud, budget: AttackBudget, k: int = 20) -> PointCloud:
    """
    Non-adaptive band injection: a Gaussian perturbation with Frobenius norm
    budget.epsilon confined to band budget.band_index of budget.band_count
    on the cloud's normalized K-NN Laplacian.
    """
    graph = build_knn_graph(cloud, k)
    require_connected(graph)
    basis = eigendecompose(build_laplacians(graph), "normalized")
    attacked, _ = inject_band_perturbation(
        cloud, basis, budget.band_index, budget.band_count, budget.epsilon, seed=budget.seed
    )
    return attacked


def run_attack(
    cloud: PointCloud,
    oracle: Optional[Oracle],
    budget: AttackBudget,
    k: int = 20,
    target: Optional[int] = None,
) -> PointCloud:
    """Dispatch on budget.kind."""
    if budget.kind == "linf-coordinates":
        return pgd_attack(cloud, oracle, budget, target)
    if budget.kind == "point-addition":
        return point_addition_attack(cloud, oracle, budget, target)
    if budget.kind == "spectral-band":
        return spectral_band_attack(cloud, budget, k)
    raise InvalidParameterError(f"Unknown attack kind {budget.kind!r}.")
