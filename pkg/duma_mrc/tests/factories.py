"""Builders for micro configurations and encoded synthetic tasks used across tests."""

import numpy as np

from duma_mrc.schemas import ModelConfig, TaskKind
from duma_mrc.services.encoding import EncodedInstance, encode_dataset
from duma_mrc.services.synthetic import make_synthetic_examples
from duma_mrc.services.task_data import TaskData
from duma_mrc.services.vocab import build_vocab


def make_micro_config(**overrides) -> ModelConfig:
    values = dict(
        vocab_size=128,
        hidden=16,
        encoder_layers=2,
        encoder_heads=2,
        ff_width=32,
        max_len=24,
        duma_heads=2,
        duma_head_dim=8,
        seed=0,
    )
    values.update(overrides)
    return ModelConfig(**values)


def make_task_data(name: str, num_options: int, size: int, seed: int, max_len: int = 24, vocab=None):
    """Encoded synthetic train/dev splits plus the vocabulary used for them."""
    train = make_synthetic_examples(size, num_options=num_options, seed=seed, id_prefix=f"{name}-train")
    dev = make_synthetic_examples(size, num_options=num_options, seed=seed + 1000, id_prefix=f"{name}-dev")
    vocab = vocab or build_vocab(train, 128)
    return TaskData(
        name=name,
        kind=TaskKind.SYNTHETIC,
        train=encode_dataset(train, vocab, max_len, name),
        dev=encode_dataset(dev, vocab, max_len, name),
    ), vocab


def make_instance(ids, max_len: int, boundary: int = 2, example_id: str = "inst") -> EncodedInstance:
    """Padded instance over raw token ids, bypassing the tokenizer."""
    token_ids = np.zeros(max_len, dtype=np.int64)
    token_ids[: len(ids)] = ids
    mask = np.zeros(max_len, dtype=np.int8)
    mask[: len(ids)] = 1
    return EncodedInstance(token_ids, mask, boundary, len(ids), False, example_id, 0)
