"""
Toy point classifier with analytic gradients.

    points (N, 3) -> tanh(x W1 + b1) (N, h1) -> tanh(. W2 + b2) (N, h2)
                  -> max over points (h2,) -> . W3 + b3 (C,) -> softmax

The shared per-point layers and the symmetric max-pool make the output
invariant to point order. Every routine works on a batch (B, N, 3).

Feature layers for the stability term:
    point1  first per-point activation map (N, h1)
    point2  second per-point activation map (N, h2)
    global  pooled feature (h2,)
"""

from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from pwavep.core.errors import DataError, InvalidParameterError

LAYERS = ("point1", "point2", "global")
PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


class ForwardCache(NamedTuple):
    points: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    argmax: np.ndarray
    pooled: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


class LossTerms(NamedTuple):
    """Per-cloud loss pieces and the coordinate gradient of the total."""

    loss: np.ndarray
    ce_loss: np.ndarray
    feature_norm: np.ndarray
    probs: np.ndarray
    coord_gradient: Optional[np.ndarray]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _as_batch(points) -> Tuple[np.ndarray, bool]:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3 or x.shape[-1] != 3:
        raise DataError(f"Expected (N, 3) or (B, N, 3) points, got shape {x.shape}.")
    return x, False


@dataclass(eq=False)
class ToyClassifier:
    """
    Shared-MLP + max-pool classifier on (N, 3) clouds.

    Attributes:
        params: w1 (3, h1), b1 (h1,), w2 (h1, h2), b2 (h2,), w3 (h2, C), b3 (C,)
        class_names: Optional names, index-aligned with the logits
    """

    params: Dict[str, np.ndarray]
    class_names: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        missing = [k for k in PARAM_NAMES if k not in self.params]
        if missing:
            raise DataError(f"Toy classifier is missing parameters {missing}.")
        self.params = {k: np.asarray(self.params[k], dtype=np.float64) for k in PARAM_NAMES}
        if self.params["w1"].shape[0] != 3:
            raise DataError(f"w1 must have 3 input rows, got {self.params['w1'].shape}.")

    @classmethod
    def initialize(
        cls,
        num_classes: int,
        widths: Tuple[int, int] = (64, 128),
        seed: int = 0,
        class_names: Sequence[str] = (),
    ) -> "ToyClassifier":
        """Gaussian weights with variance 1 / fan_in, zero biases."""
        if num_classes < 2:
            raise InvalidParameterError(f"A classifier needs at least 2 classes, got {num_classes}.")
        rng = np.random.default_rng(seed)
        h1, h2 = widths
        params = {
            "w1": rng.standard_normal((3, h1)) / np.sqrt(3.0),
            "b1": np.zeros(h1),
            "w2": rng.standard_normal((h1, h2)) / np.sqrt(h1),
            "b2": np.zeros(h2),
            "w3": rng.standard_normal((h2, num_classes)) / np.sqrt(h2),
            "b3": np.zeros(num_classes),
        }
        return cls(params=params, class_names=tuple(class_names))

    @property
    def num_classes(self) -> int:
        return self.params["b3"].shape[0]

    @property
    def widths(self) -> Tuple[int, int]:
        return self.params["b1"].shape[0], self.params["b2"].shape[0]

    def forward(self, points) -> ForwardCache:
        x, _ = _as_batch(points)
        p = self.params
        a1 = np.tanh(x @ p["w1"] + p["b1"])
        a2 = np.tanh(a1 @ p["w2"] + p["b2"])
        # first maximizing point per feature
        argmax = np.argmax(a2, axis=1)
        pooled = np.take_along_axis(a2, argmax[:, None, :], axis=1)[:, 0, :]
        logits = pooled @ p["w3"] + p["b3"]
        return ForwardCache(x, a1, a2, argmax, pooled, logits, _softmax(logits))

    def logits(self, points) -> np.ndarray:
        x, single = _as_batch(points)
        out = self.forward(x).logits
        return out[0] if single else out

    def class_scores(self, points) -> np.ndarray:
        x, single = _as_batch(points)
        out = self.forward(x).probs
        return out[0] if single else out

    def predict(self, points) -> np.ndarray:
        return np.argmax(self.class_scores(points), axis=-1)

    @staticmethod
    def feature(cache: ForwardCache, layer: str) -> np.ndarray:
        if layer == "point1":
            return cache.a1
        if layer == "point2":
            return cache.a2
        if layer == "global":
            return cache.pooled
        raise InvalidParameterError(f"Unknown feature layer {layer!r}; choose one of {LAYERS}.")

    def _backward(
        self,
        cache: ForwardCache,
        dlogits: np.ndarray,
        layer: Optional[str] = None,
        feature_grad: Optional[np.ndarray] = None,
    ) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        p = self.params
        d_pooled = dlogits @ p["w3"].T
        if layer == "global":
            d_pooled = d_pooled + feature_grad

        d_a2 = np.zeros_like(cache.a2)
        np.put_along_axis(d_a2, cache.argmax[:, None, :], d_pooled[:, None, :], axis=1)
        if layer == "point2":
            d_a2 = d_a2 + feature_grad
        d_z2 = d_a2 * (1.0 - cache.a2**2)

        d_a1 = d_z2 @ p["w2"].T
        if layer == "point1":
            d_a1 = d_a1 + feature_grad
        d_z1 = d_a1 * (1.0 - cache.a1**2)

        grads = {
            "w1": np.einsum("bni,bnj->ij", cache.points, d_z1),
            "b1": d_z1.sum(axis=(0, 1)),
            "w2": np.einsum("bni,bnj->ij", cache.a1, d_z2),
            "b2": d_z2.sum(axis=(0, 1)),
            "w3": cache.pooled.T @ dlogits,
            "b3": dlogits.sum(axis=0),
        }
        return grads, d_z1 @ p["w1"].T

    def _targets(self, cache: ForwardCache, target) -> np.ndarray:
        batch = cache.logits.shape[0]
        if target is None:
            return np.argmax(cache.probs, axis=-1)
        target = np.broadcast_to(np.asarray(target, dtype=np.int64), (batch,))
        if np.any((target < 0) | (target >= self.num_classes)):
            raise InvalidParameterError(
                f"Target labels {target.tolist()} are outside 0..{self.num_classes - 1}."
            )
        return target

    def ce_loss(self, points, target) -> np.ndarray:
        """Cross-entropy per cloud; a scalar for a single cloud."""
        x, single = _as_batch(points)
        cache = self.forward(x)
        y = self._targets(cache, target)
        ce = -_log_softmax(cache.logits)[np.arange(x.shape[0]), y]
        return ce[0] if single else ce

    def loss_terms(
        self,
        points,
        target=None,
        alpha: float = 0.0,
        layer: str = "global",
        need_gradient: bool = True,
    ) -> LossTerms:
        """
        L = CE(f(P), y) + alpha * ||F_layer(P)||_F and, optionally, dL/dP.

        Args:
            points: (N, 3) or (B, N, 3)
            target: Label(s); None uses the argmax prediction
            alpha: Feature-stability weight
            layer: Feature map entering the stability term
            need_gradient: Skip the backward pass when False
        """
        x, single = _as_batch(points)
        cache = self.forward(x)
        batch = x.shape[0]
        y = self._targets(cache, target)

        ce = -_log_softmax(cache.logits)[np.arange(batch), y]
        feat = self.feature(cache, layer)
        axes = tuple(range(1, feat.ndim))
        norm = np.sqrt(np.sum(feat**2, axis=axes))
        loss = ce + alpha * norm

        gradient = None
        if need_gradient:
            dlogits = cache.probs.copy()
            dlogits[np.arange(batch), y] -= 1.0
            safe = np.where(norm > 0, norm, 1.0).reshape((batch,) + (1,) * len(axes))
            feature_grad = alpha * feat / safe
            _, gradient = self._backward(cache, dlogits, layer, feature_grad)

        if single:
            return LossTerms(loss[0], ce[0], norm[0], cache.probs[0],
                             None if gradient is None else gradient[0])
        return LossTerms(loss, ce, norm, cache.probs, gradient)

    def parameter_gradients(self, points, labels) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
        """
        Mean cross-entropy over a batch and its parameter gradients.

        Returns:
            (mean loss, gradient dict, per-cloud probabilities)
        """
        x, _ = _as_batch(points)
        cache = self.forward(x)
        batch = x.shape[0]
        y = self._targets(cache, labels)
        ce = -_log_softmax(cache.logits)[np.arange(batch), y]
        dlogits = cache.probs.copy()
        dlogits[np.arange(batch), y] -= 1.0
        grads, _ = self._backward(cache, dlogits / batch)
        return float(ce.mean()), grads, cache.probs

    def save(self, path: str) -> None:
        """Write parameters and class names to an .npz archive."""
        np.savez(path, class_names=np.array(self.class_names, dtype=str), **self.params)

    @classmethod
    def load(cls, path: str) -> "ToyClassifier":
        """
        Raises:
            DataError: If the archive is missing or incomplete
        """
        try:
            with np.load(path, allow_pickle=False) as archive:
                params = {k: archive[k] for k in PARAM_NAMES if k in archive.files}
                names = tuple(str(n) for n in archive["class_names"]) if "class_names" in archive.files else ()
        except FileNotFoundError:
            raise DataError(f"Model file not found: {path}. Train one with `pwavep train-toy`.")
        return cls(params=params, class_names=names)
