import math
from dataclasses import dataclass

import numpy as np

from pwavep.core.errors import InvalidParameterError
from pwavep.saliency.scores import SaliencyReport

# Absorbs float noise such as 0.07 * 100 = 7.000000000000001
_ROUNDING_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class RiskPartition:
    """
    Rank-based split of a cloud by hybrid score.

    Attributes:
        high_risk: Ids ranked 1..ceil(drop_rate N), removed by the pipeline
        mid_risk: Ids ranked after those through ceil(filter_rate N), filtered
        high_rows: Report rows of high_risk
        mid_rows: Report rows of mid_risk
        drop_rate: Fraction behind high_risk
        filter_rate: Fraction behind high_risk + mid_risk
    """

    high_risk: np.ndarray
    mid_risk: np.ndarray
    high_rows: np.ndarray
    mid_rows: np.ndarray
    drop_rate: float
    filter_rate: float


def rank_order(report: SaliencyReport) -> np.ndarray:
    """Rows by descending hybrid score; equal scores by ascending id."""
    return np.lexsort((report.ids, -report.hybrid))


def partition_sizes(n: int, drop_rate: float, filter_rate: float):
    high = min(n, math.ceil(drop_rate * n - _ROUNDING_SLACK))
    total = min(n, math.ceil(filter_rate * n - _ROUNDING_SLACK))
    return max(high, 0), max(total - high, 0)


def partition(report: SaliencyReport, drop_rate: float = 0.01, filter_rate: float = 0.10) -> RiskPartition:
    """
    Split points into high- and mid-risk sets.

    Raises:
        InvalidParameterError: Unless 0 <= drop_rate <= filter_rate <= 1
    """
    if not 0.0 <= drop_rate <= filter_rate <= 1.0:
        raise InvalidParameterError(
            f"Rates must satisfy 0 <= drop_rate <= filter_rate <= 1, got "
            f"drop_rate={drop_rate}, filter_rate={filter_rate}."
        )
    order = rank_order(report)
    n_high, n_mid = partition_sizes(report.n, drop_rate, filter_rate)
    high_rows = order[:n_high]
    mid_rows = order[n_high : n_high + n_mid]
    return RiskPartition(
        high_risk=report.ids[high_rows],
        mid_risk=report.ids[mid_rows],
        high_rows=high_rows,
        mid_rows=mid_rows,
        drop_rate=drop_rate,
        filter_rate=filter_rate,
    )
