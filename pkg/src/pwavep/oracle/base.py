"""
Gradient oracle.

An Oracle binds a classifier to an OracleConfig and answers one question:
for this cloud, what are L = L_CE + alpha * ||F_l||_F, the class scores and
dL/dP? The label the loss is taken against is the model's own prediction
on the cloud unless the caller passes an explicit target.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from pwavep.core.config import OracleConfig
from pwavep.core.errors import ConfigurationError, NumericalError, OracleError
from pwavep.geometry.cloud import PointCloud
from pwavep.oracle.toy_model import ToyClassifier
from pwavep.oracle.zeroth_order import zeroth_order_gradient


@dataclass(frozen=True, eq=False)
class OracleOutput:
    """
    Attributes:
        loss: Composite loss
        ce_loss: Cross-entropy against `target`
        feature_norm: ||F_l(P)||_F (0 for zeroth-order answers)
        coord_gradient: (N, 3) dL/dP, or None when not requested
        predicted_class: argmax of class_scores
        class_scores: Probability vector
        target: Label the loss was computed against
    """

    loss: float
    ce_loss: float
    feature_norm: float
    coord_gradient: Optional[np.ndarray]
    predicted_class: int
    class_scores: np.ndarray
    target: int

    def __post_init__(self):
        if not np.isfinite(self.loss):
            raise NumericalError(f"Oracle returned a non-finite loss ({self.loss}).")
        total = float(np.sum(self.class_scores))
        if abs(total - 1.0) > 1e-6:
            raise OracleError(f"Class scores sum to {total:.8f}, expected 1.")
        if self.coord_gradient is not None and not np.all(np.isfinite(self.coord_gradient)):
            raise NumericalError("Oracle returned a non-finite gradient.")


class Oracle:
    def __init__(self, model: Optional[ToyClassifier] = None, config: Optional[OracleConfig] = None):
        """
        Args:
            model: Local classifier; required for analytic and zeroth-order modes
            config: OracleConfig; defaults to analytic with alpha = 0.002
        """
        self.config = config or OracleConfig()
        self.model = model
        self._external = None
        if self.config.mode != "external" and model is None:
            raise ConfigurationError(
                f"Oracle mode {self.config.mode!r} needs a local model. Train one with "
                "`pwavep train-toy` and pass --model, or use mode='external'."
            )

    @property
    def external(self):
        # Lazy: the subprocess starts on first use
        if self._external is None:
            from pwavep.oracle.external import ExternalOracle

            self._external = ExternalOracle(self.config.command)
        return self._external

    def close(self) -> None:
        if self._external is not None:
            self._external.close()
            self._external = None

    def __enter__(self) -> "Oracle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def predict(self, cloud: PointCloud) -> int:
        return self.evaluate(cloud, need_gradient=False).predicted_class

    def evaluate(
        self,
        cloud: PointCloud,
        target: Optional[int] = None,
        alpha: Optional[float] = None,
        need_gradient: bool = True,
    ) -> OracleOutput:
        """
        Evaluate the composite loss and its coordinate gradient.

        Args:
            cloud: Input cloud
            target: Label for the cross-entropy; None uses the prediction on `cloud`
            alpha: Override config.alpha
            need_gradient: Skip gradient computation when False

        Returns:
            OracleOutput

        Raises:
            OracleError: External oracle failure
            NumericalError: Non-finite loss or gradient
        """
        alpha = self.config.alpha if alpha is None else alpha
        mode = self.config.mode

        if mode == "external":
            reply = self.external.request(
                cloud.points, need_gradient=need_gradient, target=target, alpha=alpha
            )
            scores = np.asarray(reply.class_scores, dtype=np.float64)
            gradient = None if reply.gradient is None else np.asarray(reply.gradient, dtype=np.float64)
            if need_gradient and (gradient is None or gradient.shape != cloud.points.shape):
                raise OracleError(
                    f"External oracle gradient has shape "
                    f"{None if gradient is None else gradient.shape}, expected {cloud.points.shape}."
                )
            predicted = int(np.argmax(scores))
            return OracleOutput(
                loss=reply.loss,
                ce_loss=reply.ce_loss,
                feature_norm=reply.feature_norm,
                coord_gradient=gradient,
                predicted_class=predicted,
                class_scores=scores,
                target=predicted if target is None else int(target),
            )

        scores = self.model.class_scores(cloud.points)
        predicted = int(np.argmax(scores))
        label = predicted if target is None else int(target)

        if mode == "zeroth-order":
            ce = float(self.model.ce_loss(cloud.points, label))
            gradient = None
            if need_gradient:
                gradient = zeroth_order_gradient(
                    lambda batch: self.model.ce_loss(batch, label),
                    cloud.points,
                    directions=self.config.zo_directions,
                    smoothing=self.config.zo_smoothing,
                    seed=self.config.seed,
                    chunk=self.config.zo_batch,
                )
                logger.debug(
                    f"zo oracle: q={self.config.zo_directions} mu={self.config.zo_smoothing} "
                    f"queries={2 * self.config.zo_directions}"
                )
            return OracleOutput(
                loss=ce,
                ce_loss=ce,
                feature_norm=0.0,
                coord_gradient=gradient,
                predicted_class=predicted,
                class_scores=scores,
                target=label,
            )

        terms = self.model.loss_terms(
            cloud.points, label, alpha=alpha, layer=self.config.layer, need_gradient=need_gradient
        )
        return OracleOutput(
            loss=float(terms.loss),
            ce_loss=float(terms.ce_loss),
            feature_norm=float(terms.feature_norm),
            coord_gradient=terms.coord_gradient,
            predicted_class=predicted,
            class_scores=scores,
            target=label,
        )
