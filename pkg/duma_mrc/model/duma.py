"""
Dual multi-head co-attention over the context and question-answer halves of
an encoded sequence.

The context side attends to the question-answer side and vice versa. Each
attended sequence is mean-pooled under its own mask, and the two pooled vectors
are concatenated into a fused representation of width 2d.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, NamedTuple, Tuple

import numpy as np

from duma_mrc.autograd import ops
from duma_mrc.autograd.tensor import Tensor
from duma_mrc.errors import SplitError
from duma_mrc.model.attention import AttentionProjections, init_projections, multi_head_attention
from duma_mrc.schemas import ModelConfig
from duma_mrc.services.encoding import EncodedInstance


@dataclass
class DumaLayer:
    # Both fields point at the same projections when directions are shared.
    context_to_qa: AttentionProjections
    qa_to_context: AttentionProjections


@dataclass
class DumaParams:
    heads: int
    head_dim: int
    layers: List[DumaLayer] = field(default_factory=list)

    def named(self, prefix: str = "duma") -> Iterator[Tuple[str, Tensor]]:
        for index, layer in enumerate(self.layers):
            if layer.context_to_qa is layer.qa_to_context:
                directions = (("shared", layer.context_to_qa),)
            else:
                directions = (("ctx", layer.context_to_qa), ("qa", layer.qa_to_context))
            for label, proj in directions:
                for name, tensor in proj.named():
                    yield f"{prefix}.layer{index}.{label}.{name}", tensor


class SplitSide(NamedTuple):
    rows: Tensor
    mask: np.ndarray


def init_duma_params(config: ModelConfig, rng: np.random.Generator) -> DumaParams:
    d, inner = config.hidden, config.duma_width
    layers = []
    for index in range(config.duma_layers):
        prefix = f"duma.layer{index}"
        if config.share_directions:
            shared = init_projections(rng, d, inner, f"{prefix}.shared", with_bias=False)
            layers.append(DumaLayer(shared, shared))
        else:
            layers.append(DumaLayer(
                context_to_qa=init_projections(rng, d, inner, f"{prefix}.ctx", with_bias=False),
                qa_to_context=init_projections(rng, d, inner, f"{prefix}.qa", with_bias=False),
            ))
    return DumaParams(heads=config.duma_heads, head_dim=config.duma_head_dim, layers=layers)


def split_sequence(hidden: Tensor, instance: EncodedInstance) -> Tuple[SplitSide, SplitSide]:
    """Context rows 1..boundary-1 and question-answer rows boundary+1..length-1.

    [CLS] and the boundary [SEP] are excluded; the [SEP] tokens after the
    question and the option stay on the question-answer side.
    """
    boundary, length = instance.boundary, instance.length
    context_rows = boundary - 1
    qa_rows = length - boundary - 1
    if context_rows < 1 or qa_rows < 1 or length > hidden.shape[0]:
        raise SplitError(
            f"boundary {boundary} of a {length}-token sequence leaves an empty side",
            {"example_id": instance.example_id, "option": instance.option_index},
        )
    mask = np.asarray(instance.attention_mask)
    context = SplitSide(ops.slice_rows(hidden, 1, boundary), mask[1:boundary].copy())
    qa = SplitSide(ops.slice_rows(hidden, boundary + 1, length), mask[boundary + 1:length].copy())
    return context, qa


def coattend(
    queries: SplitSide,
    keys_values: SplitSide,
    proj: AttentionProjections,
    heads: int,
    head_dim: int,
) -> Tensor:
    """Rows of ``queries`` attending over ``keys_values``; output [Lq x d]."""
    return multi_head_attention(
        queries.rows, keys_values.rows, queries.mask, keys_values.mask, proj, heads, head_dim
    )


def duma_forward(hidden: Tensor, instance: EncodedInstance, params: DumaParams) -> Tensor:
    context, qa = split_sequence(hidden, instance)
    for layer in params.layers:
        attended_context = coattend(context, qa, layer.context_to_qa, params.heads, params.head_dim)
        attended_qa = coattend(qa, context, layer.qa_to_context, params.heads, params.head_dim)
        context = SplitSide(attended_context, context.mask)
        qa = SplitSide(attended_qa, qa.mask)
    return ops.concat([ops.mean_pool(context.rows, context.mask), ops.mean_pool(qa.rows, qa.mask)], axis=-1)
