"""Central-difference gradient checking in 64-bit precision."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from duma_mrc.autograd.tensor import Tape, Tensor, backward, precision
from duma_mrc.errors import NumericError

logger = logging.getLogger(__name__)

RELATIVE_ERROR_FLOOR = 1e-8


@dataclass
class GradCheckResult:
    max_relative_error: float
    checked_scalars: int
    worst_parameter: Optional[str] = None
    worst_index: Optional[int] = None


def _evaluate(f: Callable[[], Tensor]) -> float:
    value = float(np.asarray(f().data).reshape(-1)[0])
    if not np.isfinite(value):
        raise NumericError("objective is not finite during gradient check", {"value": value})
    return value


def relative_error(analytic: float, numeric: float) -> float:
    denominator = max(abs(analytic), abs(numeric), RELATIVE_ERROR_FLOOR)
    return abs(analytic - numeric) / denominator


def check_gradients(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    stencil: int = 2,
    samples_per_tensor: Optional[int] = None,
    seed: int = 0,
) -> GradCheckResult:
    """Compare tape gradients of ``f`` with finite differences, scalar by scalar.

    ``f`` rebuilds its graph from ``params`` on every call. Parameters are cast
    to float64 for the check and cast back afterwards. ``stencil`` selects the
    two-point (default) or four-point central difference; ``samples_per_tensor``
    limits how many scalars of each tensor are probed.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if stencil not in (2, 4):
        raise ValueError("stencil must be 2 or 4")

    rng = np.random.default_rng(seed)
    original_dtypes = [p.dtype for p in params]
    worst = GradCheckResult(0.0, 0)
    try:
        with precision(np.float64):
            for p in params:
                p.astype(np.float64)
                p.grad = None

            with Tape() as tape:
                loss = f()
            if not np.all(np.isfinite(loss.data)):
                raise NumericError("objective is not finite during gradient check")
            backward(tape, loss)
            tape.clear()
            analytic: List[np.ndarray] = [
                p.grad.reshape(-1).copy() if p.grad is not None else np.zeros(p.size) for p in params
            ]

            for p, grads in zip(params, analytic):
                flat = p.data.reshape(-1)
                if samples_per_tensor is None or samples_per_tensor >= flat.size:
                    indices = np.arange(flat.size)
                else:
                    indices = rng.choice(flat.size, size=samples_per_tensor, replace=False)
                for index in indices:
                    numeric = _central_difference(f, flat, int(index), eps, stencil)
                    error = relative_error(float(grads[index]), numeric)
                    worst.checked_scalars += 1
                    if error > worst.max_relative_error:
                        worst.max_relative_error = error
                        worst.worst_parameter = p.name
                        worst.worst_index = int(index)
    finally:
        for p, dtype in zip(params, original_dtypes):
            p.astype(dtype)
            p.grad = None

    logger.debug(
        "Gradient check: %d scalars, max relative error %.3e (%s[%s])",
        worst.checked_scalars, worst.max_relative_error, worst.worst_parameter, worst.worst_index,
    )
    return worst


def _central_difference(f, flat: np.ndarray, index: int, eps: float, stencil: int) -> float:
    original = flat[index]
    try:
        if stencil == 2:
            flat[index] = original + eps
            plus = _evaluate(f)
            flat[index] = original - eps
            minus = _evaluate(f)
            return (plus - minus) / (2 * eps)
        values = []
        for step in (2, 1, -1, -2):
            flat[index] = original + step * eps
            values.append(_evaluate(f))
        # Differences first, so equal samples give exactly zero.
        return (8 * (values[1] - values[2]) - (values[0] - values[3])) / (12 * eps)
    finally:
        flat[index] = original


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5, **kwargs) -> float:
    """Worst relative error between tape gradients and central differences."""
    return check_gradients(f, params, eps=eps, **kwargs).max_relative_error
