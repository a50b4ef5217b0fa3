from typing import Tuple

import numpy as np

from pwavep.core.errors import InvalidParameterError
from pwavep.wavelets.operators import WaveletOperators


def project_gradient_to_wavelets(
    coord_gradient: np.ndarray, ops: WaveletOperators, chain: str = "synthesis"
) -> Tuple[np.ndarray, ...]:
    """
    Pull dL/dP back to the band coefficients.

    With h = (W^T W)^+ sum_k T_k c_k, the derivative of L(h) with respect to
    c_s is T_s (W^T W)^+ dL/dh. For tight banks the Gram factor is the identity.

    Args:
        coord_gradient: (N, 3) gradient with respect to point coordinates
        ops: Operators of the cloud's graph
        chain: "synthesis" differentiates through the reconstruction above;
            "analysis" applies T_s to the gradient directly

    Returns:
        S arrays of shape (N, 3); element j - 1 is dL/dpsi_j
    """
    if chain == "synthesis":
        pulled = ops.solve_gram(coord_gradient)
    elif chain == "analysis":
        pulled = np.asarray(coord_gradient, dtype=np.float64)
    else:
        raise InvalidParameterError(f"Unknown gradient chain {chain!r}; use 'synthesis' or 'analysis'.")

    stack = ops.analyze(pulled)
    return tuple(stack[1:])
