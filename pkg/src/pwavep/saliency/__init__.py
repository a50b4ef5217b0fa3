from pwavep.saliency.scores import (
    SaliencyReport,
    high_band_range,
    hybrid_saliency,
    local_sparsity_scores,
    neighbor_mean_distances,
)
from pwavep.saliency.partition import RiskPartition, partition, partition_sizes, rank_order

__all__ = [
    "SaliencyReport",
    "high_band_range",
    "hybrid_saliency",
    "local_sparsity_scores",
    "neighbor_mean_distances",
    "RiskPartition",
    "partition",
    "partition_sizes",
    "rank_order",
]
