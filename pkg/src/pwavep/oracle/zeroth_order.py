"""
Zeroth-order gradient estimation from loss queries only.

Two-point Gaussian estimator

    g = (1/q) sum_i [(L(x + mu u_i) - L(x - mu u_i)) / (2 mu)] u_i,   u_i ~ N(0, I)

which is unbiased for the gradient of the Gaussian-smoothed loss.
"""

from typing import Callable

import numpy as np

from pwavep.core.errors import InvalidParameterError, NumericalError

# Maps a (B, N, 3) batch of clouds to (B,) losses
BatchLoss = Callable[[np.ndarray], np.ndarray]


def zeroth_order_gradient(
    batch_loss: BatchLoss,
    points: np.ndarray,
    directions: int = 64,
    smoothing: float = 1e-3,
    seed: int = 0,
    chunk: int = 64,
) -> np.ndarray:
    """
    Estimate dL/dP from 2q loss queries.

    Args:
        batch_loss: Vectorized loss over a stack of clouds
        points: (N, 3) query point
        directions: q >= 1
        smoothing: mu > 0
        seed: Direction seed; fixed seed gives a fixed estimate
        chunk: Directions evaluated per batch_loss call

    Returns:
        (N, 3) gradient estimate
    """
    if directions < 1:
        raise InvalidParameterError(f"zo directions must be at least 1, got {directions}.")
    if smoothing <= 0:
        raise InvalidParameterError(f"zo smoothing must be positive, got {smoothing}.")

    x = np.asarray(points, dtype=np.float64)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((directions,) + x.shape)

    estimate = np.zeros_like(x)
    for start in range(0, directions, chunk):
        block = u[start : start + chunk]
        queries = np.concatenate([x + smoothing * block, x - smoothing * block])
        losses = np.asarray(batch_loss(queries), dtype=np.float64)
        if not np.all(np.isfinite(losses)):
            raise NumericalError("Zeroth-order loss query returned a non-finite value.")
        plus, minus = losses[: len(block)], losses[len(block) :]
        slopes = (plus - minus) / (2.0 * smoothing)
        estimate += np.einsum("q,qnd->nd", slopes, block)
    return estimate / directions
