"""
Pre-norm transformer encoder over one encoded option sequence.

Each block applies x + SelfAttention(LN(x)) and then x + FeedForward(LN(x)),
with a final layer norm after the last block. Padded positions are masked as
keys and their output rows are zeroed, so they never influence real tokens.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np

from duma_mrc.autograd import ops
from duma_mrc.autograd.tensor import Tensor
from duma_mrc.errors import DimensionError, NumericError
from duma_mrc.model.attention import (
    AttentionProjections,
    init_projections,
    linear,
    multi_head_attention,
    ones,
    xavier_uniform,
    zeros,
)
from duma_mrc.schemas import ModelConfig
from duma_mrc.services.encoding import EncodedInstance

logger = logging.getLogger(__name__)


@dataclass
class EncoderBlock:
    ln1_gain: Tensor
    ln1_bias: Tensor
    attention: AttentionProjections
    ln2_gain: Tensor
    ln2_bias: Tensor
    ff_w_in: Tensor
    ff_in_bias: Tensor
    ff_w_out: Tensor
    ff_out_bias: Tensor

    def named(self, prefix: str) -> Iterator[Tuple[str, Tensor]]:
        yield f"{prefix}.ln1.gain", self.ln1_gain
        yield f"{prefix}.ln1.bias", self.ln1_bias
        for name, tensor in self.attention.named():
            yield f"{prefix}.attn.{name}", tensor
        yield f"{prefix}.ln2.gain", self.ln2_gain
        yield f"{prefix}.ln2.bias", self.ln2_bias
        yield f"{prefix}.ff.w_in", self.ff_w_in
        yield f"{prefix}.ff.in_bias", self.ff_in_bias
        yield f"{prefix}.ff.w_out", self.ff_w_out
        yield f"{prefix}.ff.out_bias", self.ff_out_bias


@dataclass
class EncoderParams:
    token_embedding: Tensor
    position_embedding: Tensor
    blocks: List[EncoderBlock] = field(default_factory=list)
    final_gain: Optional[Tensor] = None
    final_bias: Optional[Tensor] = None

    def named(self, prefix: str = "encoder") -> Iterator[Tuple[str, Tensor]]:
        yield f"{prefix}.token_embedding", self.token_embedding
        yield f"{prefix}.position_embedding", self.position_embedding
        for depth, block in enumerate(self.blocks):
            yield from block.named(f"{prefix}.block{depth}")
        yield f"{prefix}.ln_final.gain", self.final_gain
        yield f"{prefix}.ln_final.bias", self.final_bias

    def unique_parameters(self) -> List[Tensor]:
        seen, unique = set(), []
        for _, tensor in self.named():
            if id(tensor) not in seen:
                seen.add(id(tensor))
                unique.append(tensor)
        return unique


def _init_block(rng: np.random.Generator, config: ModelConfig, prefix: str) -> EncoderBlock:
    d = config.hidden
    return EncoderBlock(
        ln1_gain=ones(d, f"{prefix}.ln1.gain"),
        ln1_bias=zeros(d, f"{prefix}.ln1.bias"),
        attention=init_projections(rng, d, d, f"{prefix}.attn", with_bias=True),
        ln2_gain=ones(d, f"{prefix}.ln2.gain"),
        ln2_bias=zeros(d, f"{prefix}.ln2.bias"),
        ff_w_in=xavier_uniform(rng, d, config.ff_width, f"{prefix}.ff.w_in"),
        ff_in_bias=zeros(config.ff_width, f"{prefix}.ff.in_bias"),
        ff_w_out=xavier_uniform(rng, config.ff_width, d, f"{prefix}.ff.w_out"),
        ff_out_bias=zeros(d, f"{prefix}.ff.out_bias"),
    )


def init_encoder_params(config: ModelConfig, rng: np.random.Generator) -> EncoderParams:
    """Xavier-uniform matrices and embeddings, zero biases, unit layer-norm gains."""
    d = config.hidden
    params = EncoderParams(
        token_embedding=xavier_uniform(rng, config.vocab_size, d, "encoder.token_embedding"),
        position_embedding=xavier_uniform(rng, config.positional_table_size, d, "encoder.position_embedding"),
        blocks=[_init_block(rng, config, f"encoder.block{i}") for i in range(config.encoder_layers)],
        final_gain=ones(d, "encoder.ln_final.gain"),
        final_bias=zeros(d, "encoder.ln_final.bias"),
    )
    if config.share_layers:
        params = share_layers(params, config)
    return params


def share_layers(params: EncoderParams, config: ModelConfig) -> EncoderParams:
    """Alias every block to the first block's weights (cross-layer sharing)."""
    if not params.blocks:
        return params
    return replace(params, blocks=[params.blocks[0]] * config.encoder_layers)


def _check_finite(x: Tensor, layer: int, instance: EncodedInstance) -> None:
    if not np.all(np.isfinite(x.data)):
        raise NumericError(
            f"non-finite activation in encoder layer {layer}",
            {"layer": layer, "example_id": instance.example_id, "option": instance.option_index},
        )


def encode(
    instance: EncodedInstance,
    params: EncoderParams,
    config: ModelConfig,
    dropout_rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """Contextualized hidden states [L x d] for one padded instance."""
    ids = np.asarray(instance.token_ids)
    length = ids.shape[0]
    if length > params.position_embedding.shape[0]:
        raise DimensionError(
            f"sequence length {length} exceeds positional table of {params.position_embedding.shape[0]}",
            {"example_id": instance.example_id},
        )
    mask = np.asarray(instance.attention_mask)
    heads = config.encoder_heads
    head_dim = config.hidden // heads

    x = ops.add(
        ops.embedding(params.token_embedding, ids),
        ops.embedding(params.position_embedding, np.arange(length)),
    )
    x = ops.dropout(x, config.dropout, dropout_rng)

    for depth, block in enumerate(params.blocks):
        h = ops.layer_norm(x, block.ln1_gain, block.ln1_bias)
        attended = multi_head_attention(h, h, mask, mask, block.attention, heads, head_dim)
        x = ops.add(x, ops.dropout(attended, config.dropout, dropout_rng))

        h = ops.layer_norm(x, block.ln2_gain, block.ln2_bias)
        h = linear(ops.gelu(linear(h, block.ff_w_in, block.ff_in_bias)), block.ff_w_out, block.ff_out_bias)
        x = ops.add(x, ops.dropout(h, config.dropout, dropout_rng))
        _check_finite(x, depth, instance)

    out = ops.layer_norm(x, params.final_gain, params.final_bias)
    _check_finite(out, len(params.blocks), instance)
    return out
