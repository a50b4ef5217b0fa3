from pwavep.metrics.distances import TransportPlan, cd_bound_check, chamfer, emd
from pwavep.metrics.accuracy import (
    AccuracyTally,
    Summary,
    coefficient_of_variation,
    spearman,
    summarize,
)

__all__ = [
    "TransportPlan",
    "cd_bound_check",
    "chamfer",
    "emd",
    "AccuracyTally",
    "Summary",
    "coefficient_of_variation",
    "spearman",
    "summarize",
]
