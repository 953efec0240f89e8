"""Differentiable operations over ``Tensor``.

Each op computes its forward value with numpy and, when a tape is active,
records a backward rule returning one gradient per input (``None`` for
inputs that never need one).
"""

import math
from typing import Optional, Sequence, Union

import numpy as np

from duma_mrc.autograd.tensor import Tensor, active_tape
from duma_mrc.errors import DegenerateMaskError, DimensionError, LabelError, VocabError

TensorLike = Union[Tensor, np.ndarray, float, int]

_GELU_C = math.sqrt(2.0 / math.pi)


def as_tensor(value: TensorLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(data: np.ndarray, inputs: Sequence[Tensor], backward, op: str) -> Tensor:
    out = Tensor(data)
    tape = active_tape()
    if tape is None:
        return out
    return tape.record(out, inputs, backward, op)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _mask_array(mask) -> np.ndarray:
    raw = mask.data if isinstance(mask, Tensor) else np.asarray(mask)
    return raw != 0


# --- elementwise -------------------------------------------------------------

def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}") from exc

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit(out, (a, b), backward, "add")


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError as exc:
        raise DimensionError(f"cannot subtract shapes {a.shape} and {b.shape}") from exc

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit(out, (a, b), backward, "sub")


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape} elementwise") from exc

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _emit(out, (a, b), backward, "mul")


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return _emit(a.data * factor, (a,), backward, "scale")


def gelu(a: Tensor) -> Tensor:
    """Tanh approximation of GELU."""
    x = a.data
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
        return (g * local,)

    return _emit(out, (a,), backward, "gelu")


def dropout(a: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout. Identity when ``rate`` is 0 or no generator is given."""
    if rate <= 0.0 or rng is None:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.dtype) / (1.0 - rate)

    def backward(g):
        return (g * keep,)

    return _emit(a.data * keep, (a,), backward, "dropout")


# --- linear algebra and shape ------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; leading (batch) axes must match."""
    a, b = as_tensor(a), as_tensor(b)
    if (
        a.ndim < 2
        or a.ndim != b.ndim
        or a.shape[:-2] != b.shape[:-2]
        or a.shape[-1] != b.shape[-2]
    ):
        raise DimensionError(
            f"matmul shape mismatch: {a.shape} x {b.shape}",
            {"left": list(a.shape), "right": list(b.shape)},
        )
    out = np.matmul(a.data, b.data)

    def backward(g):
        return np.matmul(g, np.swapaxes(b.data, -1, -2)), np.matmul(np.swapaxes(a.data, -1, -2), g)

    return _emit(out, (a, b), backward, "matmul")


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(int(i) for i in np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _emit(np.transpose(a.data, axes), (a,), backward, "transpose")


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {a.shape} to {tuple(shape)}") from exc

    def backward(g):
        return (g.reshape(a.shape),)

    return _emit(out, (a,), backward, "reshape")


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    """Rows ``start:stop`` of the leading axis."""

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)

    return _emit(a.data[start:stop].copy(), (a,), backward, "slice_rows")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise DimensionError(f"cannot concatenate shapes {[t.shape for t in tensors]}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit(out, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor]) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise DimensionError(f"cannot stack differing shapes {sorted(shapes)}")
    out = np.stack([t.data for t in tensors], axis=0)

    def backward(g):
        return tuple(g[i] for i in range(len(tensors)))

    return _emit(out, tuple(tensors), backward, "stack")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``table``; gradients scatter-add back into the table."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise VocabError(
            f"token id out of range for table of {table.shape[0]} rows",
            {"min_id": int(ids.min()), "max_id": int(ids.max())},
        )

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return _emit(table.data[ids], (table,), backward, "embedding")


# --- reductions --------------------------------------------------------------

def reduce_sum(a: Tensor) -> Tensor:
    def backward(g):
        return (np.full(a.shape, g, dtype=a.dtype),)

    return _emit(np.asarray(a.data.sum(), dtype=a.dtype), (a,), backward, "sum")


def reduce_mean(a: Tensor) -> Tensor:
    n = max(a.size, 1)

    def backward(g):
        return (np.full(a.shape, g / n, dtype=a.dtype),)

    return _emit(np.asarray(a.data.mean(), dtype=a.dtype), (a,), backward, "mean")


def mean_pool(seq: Tensor, mask) -> Tensor:
    """Mean of the rows of ``seq`` [L x d] whose mask entry is 1."""
    keep = _mask_array(mask)
    if keep.shape != seq.shape[:1]:
        raise DimensionError(f"pool mask shape {keep.shape} does not match sequence {seq.shape}")
    count = int(keep.sum())
    if count == 0:
        raise DegenerateMaskError("mean_pool over an empty mask", {"length": int(keep.size)})
    weights = keep.astype(seq.dtype) / count

    def backward(g):
        return (np.outer(weights, g).astype(seq.dtype),)

    return _emit(weights @ seq.data, (seq,), backward, "mean_pool")


# --- normalisation -----------------------------------------------------------

def masked_softmax(logits: Tensor, mask) -> Tensor:
    """Softmax over the last axis restricted to positions where ``mask`` is 1.

    Masked positions get exactly 0. A row with no unmasked position raises
    ``DegenerateMaskError``.
    """
    x = logits.data
    try:
        keep = np.broadcast_to(_mask_array(mask), x.shape)
    except ValueError as exc:
        raise DimensionError(f"mask shape {np.shape(mask)} does not broadcast to {x.shape}") from exc
    alive = keep.any(axis=-1)
    if not alive.all():
        dead = np.argwhere(~alive)[:5].tolist()
        raise DegenerateMaskError("softmax row has every position masked", {"rows": dead})

    row_max = np.where(keep, x, -np.inf).max(axis=-1, keepdims=True)
    exps = np.where(keep, np.exp(np.where(keep, x - row_max, 0.0)), 0.0)
    probs = (exps / exps.sum(axis=-1, keepdims=True)).astype(x.dtype)

    def backward(g):
        return (probs * (g - (g * probs).sum(axis=-1, keepdims=True)),)

    return _emit(probs, (logits,), backward, "masked_softmax")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    data = x.data
    centered = data - data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    out = normed * gain.data + bias.data
    width = data.shape[-1]

    def backward(g):
        flat_g = g.reshape(-1, width)
        d_gain = (flat_g * normed.reshape(-1, width)).sum(axis=0)
        d_bias = flat_g.sum(axis=0)
        d_normed = g * gain.data
        d_x = inv_std * (
            d_normed
            - d_normed.mean(axis=-1, keepdims=True)
            - normed * (d_normed * normed).mean(axis=-1, keepdims=True)
        )
        return d_x, d_gain, d_bias

    return _emit(out, (x, gain, bias), backward, "layer_norm")


def cross_entropy_logits(logits: Tensor, gold: int) -> Tensor:
    """-log softmax(logits)[gold] via log-sum-exp on a 1-D logit vector."""
    z = logits.data
    if z.ndim != 1:
        raise DimensionError(f"expected a 1-D logit vector, got {z.shape}")
    if not 0 <= gold < z.shape[0]:
        raise LabelError(f"gold index {gold} outside {z.shape[0]} options")
    top = z.max()
    log_norm = top + np.log(np.exp(z - top).sum())
    loss = np.asarray(log_norm - z[gold], dtype=z.dtype)
    probs = np.exp(z - log_norm)

    def backward(g):
        local = probs.copy()
        local[gold] -= 1.0
        return (g * local,)

    return _emit(loss, (logits,), backward, "cross_entropy")
