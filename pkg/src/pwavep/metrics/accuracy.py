from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Sequence

import numpy as np
from scipy.stats import spearmanr


class Summary(NamedTuple):
    mean: float
    sd: float
    count: int


def summarize(values: Sequence[float]) -> Summary:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return Summary(float("nan"), float("nan"), 0)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return Summary(float(arr.mean()), sd, int(arr.size))


def coefficient_of_variation(values: Sequence[float]) -> float:
    """sd / |mean|"""
    s = summarize(values)
    if s.mean == 0:
        return 0.0 if s.sd == 0 else float("inf")
    return s.sd / abs(s.mean)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    rho = spearmanr(x, y).statistic
    return float(rho)


@dataclass
class AccuracyTally:
    """Running label/prediction counts."""

    labels: List[int] = field(default_factory=list)
    predictions: List[int] = field(default_factory=list)

    def record(self, label: int, prediction: int) -> None:
        self.labels.append(int(label))
        self.predictions.append(int(prediction))

    def extend(self, labels: Sequence[int], predictions: Sequence[int]) -> None:
        for label, prediction in zip(labels, predictions):
            self.record(label, prediction)

    @property
    def count(self) -> int:
        return len(self.labels)

    @property
    def accuracy(self) -> float:
        if not self.labels:
            return float("nan")
        return float(np.mean(np.asarray(self.labels) == np.asarray(self.predictions)))

    def per_class(self) -> Dict[int, float]:
        hits: Dict[int, List[bool]] = defaultdict(list)
        for label, prediction in zip(self.labels, self.predictions):
            hits[label].append(label == prediction)
        return {label: float(np.mean(v)) for label, v in sorted(hits.items())}
