"""Global-norm gradient clipping and Adam with decoupled weight decay."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, NamedTuple

import numpy as np

from duma_mrc.autograd.tensor import Tensor
from duma_mrc.errors import ConfigurationError, NumericError

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


class ClipResult(NamedTuple):
    norm: float
    scale: float


def global_grad_norm(params: Iterable[Tensor]) -> float:
    total = 0.0
    for p in params:
        if p.grad is None:
            continue
        grad = p.grad.astype(np.float64)
        if not np.all(np.isfinite(grad)):
            raise NumericError("non-finite gradient before clipping", {"parameter": p.name})
        total += float(np.sum(grad * grad))
    return float(np.sqrt(total))


def clip_grad_norm(params: Iterable[Tensor], max_norm: float) -> ClipResult:
    """Scale every gradient by max_norm / norm when the global L2 norm exceeds max_norm."""
    if max_norm <= 0:
        raise ConfigurationError(f"max_norm must be positive, got {max_norm}")
    params = list(params)
    norm = global_grad_norm(params)
    if norm <= max_norm:
        return ClipResult(norm, 1.0)
    scale = max_norm / norm
    for p in params:
        if p.grad is not None:
            p.grad = (p.grad * scale).astype(p.grad.dtype)
    return ClipResult(norm, scale)


@dataclass
class AdamMoments:
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Dict[str, Tensor]) -> "AdamMoments":
        return cls(
            first={name: np.zeros_like(p.data, dtype=np.float64) for name, p in params.items()},
            second={name: np.zeros_like(p.data, dtype=np.float64) for name, p in params.items()},
        )


def adamw_step(
    params: Dict[str, Tensor],
    moments: AdamMoments,
    step: int,
    lr: float,
    weight_decay: float,
    decay_filter: Callable[[str], bool] = lambda name: True,
) -> None:
    """One bias-corrected Adam update with decoupled weight decay.

    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + decay * theta),
    where decay applies only to names accepted by ``decay_filter``.
    Missing gradients count as zero.
    """
    if step < 1:
        raise ConfigurationError(f"optimizer steps count from 1, got {step}")
    first_correction = 1.0 - BETA1 ** step
    second_correction = 1.0 - BETA2 ** step
    for name, p in params.items():
        grad = np.zeros(p.shape) if p.grad is None else p.grad.astype(np.float64)
        m = moments.first[name]
        v = moments.second[name]
        m *= BETA1
        m += (1.0 - BETA1) * grad
        v *= BETA2
        v += (1.0 - BETA2) * grad * grad
        update = (m / first_correction) / (np.sqrt(v / second_correction) + ADAM_EPS)
        if weight_decay and decay_filter(name):
            update = update + weight_decay * p.data.astype(np.float64)
        p.data = (p.data.astype(np.float64) - lr * update).astype(p.dtype)
