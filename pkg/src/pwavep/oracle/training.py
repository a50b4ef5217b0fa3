"""
Training loop for the toy classifier.

Plain Adam on mean cross-entropy, deterministic under the seed: the
initialization and the per-epoch shuffles draw from one generator.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from pwavep.core.config import TrainingConfig
from pwavep.core.errors import InvalidParameterError, TrainingError
from pwavep.geometry.cloud import PointCloud
from pwavep.oracle.toy_model import PARAM_NAMES, ToyClassifier

MIN_CLASSES = 2
MIN_CLOUDS_PER_CLASS = 20

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass
class TrainingReport:
    epochs: int
    losses: List[float] = field(default_factory=list)
    train_accuracy: float = 0.0
    heldout_accuracy: Optional[float] = None
    gradient_check_error: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def accuracy(model: ToyClassifier, clouds: Sequence[PointCloud]) -> float:
    if not clouds:
        return float("nan")
    hits = sum(int(model.predict(c.points)) == c.label for c in clouds)
    return hits / len(clouds)


def gradient_check(model: ToyClassifier, cloud: PointCloud, probes: int = 6, step: float = 1e-5,
                   seed: int = 0) -> float:
    """
    Largest relative error between analytic and central-difference weight
    gradients at a few random parameter entries.
    """
    rng = np.random.default_rng(seed)
    _, grads, _ = model.parameter_gradients(cloud.points, cloud.label)
    worst = 0.0
    for name in PARAM_NAMES:
        param = model.params[name]
        for flat in rng.choice(param.size, size=min(probes, param.size), replace=False):
            idx = np.unravel_index(flat, param.shape)
            original = param[idx]
            param[idx] = original + step
            plus = float(model.ce_loss(cloud.points, cloud.label))
            param[idx] = original - step
            minus = float(model.ce_loss(cloud.points, cloud.label))
            param[idx] = original
            numeric = (plus - minus) / (2.0 * step)
            analytic = grads[name][idx]
            worst = max(worst, abs(numeric - analytic) / max(1e-6, abs(numeric) + abs(analytic)))
    return worst


def _check_dataset(clouds: Sequence[PointCloud]) -> Dict[int, int]:
    if any(c.label is None for c in clouds):
        raise InvalidParameterError("Every training cloud needs a label.")
    counts = Counter(int(c.label) for c in clouds)
    if len(counts) < MIN_CLASSES:
        raise InvalidParameterError(
            f"Training needs at least {MIN_CLASSES} classes, got {len(counts)}."
        )
    thin = {label: n for label, n in counts.items() if n < MIN_CLOUDS_PER_CLASS}
    if thin:
        raise InvalidParameterError(
            f"Training needs at least {MIN_CLOUDS_PER_CLASS} clouds per class; "
            f"under-filled classes: {thin}."
        )
    return dict(counts)


def _batches(clouds: Sequence[PointCloud], order: np.ndarray, size: int):
    """Yield stacked (points, labels) batches; clouds of different sizes go separately."""
    for start in range(0, len(order), size):
        chunk = [clouds[i] for i in order[start : start + size]]
        by_size: Dict[int, List[PointCloud]] = {}
        for cloud in chunk:
            by_size.setdefault(cloud.n, []).append(cloud)
        for group in by_size.values():
            yield (
                np.stack([c.points for c in group]),
                np.array([c.label for c in group], dtype=np.int64),
            )


def train_toy_classifier(
    train: Sequence[PointCloud],
    heldout: Sequence[PointCloud] = (),
    config: Optional[TrainingConfig] = None,
    class_names: Sequence[str] = (),
    epochs: Optional[int] = None,
    seed: Optional[int] = None,
) -> Tuple[ToyClassifier, TrainingReport]:
    """
    Train a ToyClassifier with Adam.

    Args:
        train: Labeled clouds (labels 0..C-1)
        heldout: Labeled clouds scored after training
        config: Schedule; epochs/seed arguments override it
        class_names: Optional names stored with the model
        epochs: Override config.epochs
        seed: Override config.seed

    Returns:
        (model, report)

    Raises:
        InvalidParameterError: Fewer than 2 classes or 20 clouds per class
        TrainingError: If the loss becomes non-finite
    """
    config = config or TrainingConfig()
    epochs = config.epochs if epochs is None else epochs
    seed = config.seed if seed is None else seed

    counts = _check_dataset(train)
    num_classes = max(counts) + 1
    rng = np.random.default_rng(seed)
    model = ToyClassifier.initialize(
        num_classes, widths=config.widths, seed=int(rng.integers(2**31)), class_names=class_names
    )

    report = TrainingReport(epochs=epochs)
    report.gradient_check_error = gradient_check(model, train[0])
    if report.gradient_check_error > 1e-4:
        logger.warning(
            f"Backprop check at init: relative error {report.gradient_check_error:.2e} "
            "(a max-pool tie may sit inside the difference step)"
        )
    else:
        logger.debug(f"backprop check at init: max relative error {report.gradient_check_error:.2e}")

    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(p) for k, p in model.params.items()}
    beta1, beta2 = ADAM_BETAS
    step = 0

    for epoch in range(epochs):
        order = rng.permutation(len(train))
        total, seen = 0.0, 0
        for points, labels in _batches(train, order, config.batch_size):
            loss, grads, _ = model.parameter_gradients(points, labels)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"Training loss became {loss} at epoch {epoch + 1}. "
                    f"Lower the learning rate (currently {config.learning_rate})."
                )
            step += 1
            for name in PARAM_NAMES:
                g = grads[name]
                m[name] = beta1 * m[name] + (1 - beta1) * g
                v[name] = beta2 * v[name] + (1 - beta2) * g * g
                m_hat = m[name] / (1 - beta1**step)
                v_hat = v[name] / (1 - beta2**step)
                model.params[name] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            total += loss * len(labels)
            seen += len(labels)

        report.losses.append(total / seen)
        logger.debug(f"epoch {epoch + 1}/{epochs}: loss={report.losses[-1]:.4f}")

    report.train_accuracy = accuracy(model, train)
    if heldout:
        report.heldout_accuracy = accuracy(model, heldout)
    logger.info(
        f"toy classifier: {num_classes} classes, train acc={report.train_accuracy:.3f}"
        + (f", held-out acc={report.heldout_accuracy:.3f}" if heldout else "")
    )
    return model, report
