"""Masked multi-head attention shared by encoder self-attention and DUMA co-attention."""

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from duma_mrc.autograd import ops
from duma_mrc.autograd.tensor import Tensor


@dataclass
class AttentionProjections:
    """Query/key/value projections [d x h*dk] and the output projection [h*dk x d].

    Bias vectors are optional; DUMA projections run without them.
    """

    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    q_bias: Optional[Tensor] = None
    k_bias: Optional[Tensor] = None
    v_bias: Optional[Tensor] = None
    o_bias: Optional[Tensor] = None

    def named(self) -> Iterator[Tuple[str, Tensor]]:
        for field_name in ("wq", "wk", "wv", "wo", "q_bias", "k_bias", "v_bias", "o_bias"):
            tensor = getattr(self, field_name)
            if tensor is not None:
                yield field_name, tensor


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, name: str) -> Tensor:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    data = rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(np.float32)
    return Tensor(data, requires_grad=True, name=name)


def zeros(width: int, name: str) -> Tensor:
    return Tensor(np.zeros(width, dtype=np.float32), requires_grad=True, name=name)


def ones(width: int, name: str) -> Tensor:
    return Tensor(np.ones(width, dtype=np.float32), requires_grad=True, name=name)


def init_projections(
    rng: np.random.Generator, width: int, inner: int, prefix: str, with_bias: bool
) -> AttentionProjections:
    return AttentionProjections(
        wq=xavier_uniform(rng, width, inner, f"{prefix}.wq"),
        wk=xavier_uniform(rng, width, inner, f"{prefix}.wk"),
        wv=xavier_uniform(rng, width, inner, f"{prefix}.wv"),
        wo=xavier_uniform(rng, inner, width, f"{prefix}.wo"),
        q_bias=zeros(inner, f"{prefix}.q_bias") if with_bias else None,
        k_bias=zeros(inner, f"{prefix}.k_bias") if with_bias else None,
        v_bias=zeros(inner, f"{prefix}.v_bias") if with_bias else None,
        o_bias=zeros(width, f"{prefix}.o_bias") if with_bias else None,
    )


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = ops.matmul(x, weight)
    return out if bias is None else ops.add(out, bias)


def _split_heads(x: Tensor, heads: int, head_dim: int) -> Tensor:
    # [L x h*dk] -> [h x L x dk]
    return ops.transpose(ops.reshape(x, (x.shape[0], heads, head_dim)), (1, 0, 2))


def multi_head_attention(
    queries: Tensor,
    keys_values: Tensor,
    query_mask: Optional[np.ndarray],
    key_mask: np.ndarray,
    proj: AttentionProjections,
    heads: int,
    head_dim: int,
) -> Tensor:
    """Scaled dot-product attention of ``queries`` [Lq x d] over ``keys_values`` [Lk x d].

    Keys with mask 0 receive exactly zero weight. Output rows of masked
    queries are zeroed.
    """
    q_len, k_len = queries.shape[0], keys_values.shape[0]
    q = _split_heads(linear(queries, proj.wq, proj.q_bias), heads, head_dim)
    k = _split_heads(linear(keys_values, proj.wk, proj.k_bias), heads, head_dim)
    v = _split_heads(linear(keys_values, proj.wv, proj.v_bias), heads, head_dim)

    scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 2, 1))), 1.0 / math.sqrt(head_dim))
    weights = ops.masked_softmax(scores, np.asarray(key_mask).reshape(1, 1, k_len))
    attended = ops.matmul(weights, v)
    merged = ops.reshape(ops.transpose(attended, (1, 0, 2)), (q_len, heads * head_dim))
    out = linear(merged, proj.wo, proj.o_bias)
    if query_mask is None:
        return out
    keep = (np.asarray(query_mask) != 0).astype(out.dtype).reshape(q_len, 1)
    return ops.mul(out, keep)
