"""Encode (context, question, option) triples into padded single sequences.

Layout per option: [CLS] context [SEP] question [SEP] option [SEP] [PAD]...
Over-long inputs lose their oldest context tokens first, then the option
tail, then the question tail.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from duma_mrc.errors import EncodingError
from duma_mrc.parsers.mc_example import McExample
from duma_mrc.services.vocab import CLS_ID, PAD_ID, SEP_ID, Vocab, tokenize

SPECIAL_SLOTS = 4  # one [CLS] and three [SEP]
MIN_ENCODABLE_LEN = SPECIAL_SLOTS + 1


@dataclass(frozen=True)
class EncodedInstance:
    token_ids: np.ndarray
    attention_mask: np.ndarray
    boundary: int
    length: int
    is_gold: bool
    example_id: str = ""
    option_index: int = 0


@dataclass(frozen=True)
class EncodedQuestion:
    example_id: str
    task: str
    gold: int
    instances: Tuple[EncodedInstance, ...]

    @property
    def num_options(self) -> int:
        return len(self.instances)


def fit_segments(
    context: Sequence[str], question: Sequence[str], option: Sequence[str], max_len: int
) -> Tuple[List[str], List[str], List[str]]:
    """Truncate the three segments so that they fit ``max_len`` with the special tokens."""
    context, question, option = list(context), list(question), list(option)
    overflow = len(context) + len(question) + len(option) - (max_len - SPECIAL_SLOTS)
    if overflow > 0:
        dropped = min(overflow, len(context))
        context = context[dropped:]
        overflow -= dropped
    if overflow > 0:
        dropped = min(overflow, len(option))
        option = option[: len(option) - dropped]
        overflow -= dropped
    if overflow > 0:
        question = question[: len(question) - overflow]
    return context, question, option


def encode_example(example: McExample, vocab: Vocab, max_len: int) -> List[EncodedInstance]:
    """One EncodedInstance per option, each padded to ``max_len``."""
    if max_len < MIN_ENCODABLE_LEN:
        raise EncodingError(
            f"max_len {max_len} cannot hold [CLS], three [SEP] and one question token",
            {"example_id": example.example_id},
        )
    context_tokens = tokenize(" ".join(example.context))
    question_tokens = tokenize(example.question)

    instances = []
    for option_index, option in enumerate(example.options):
        context, question, answer = fit_segments(context_tokens, question_tokens, tokenize(option), max_len)
        ids = (
            [CLS_ID] + vocab.encode(context) + [SEP_ID]
            + vocab.encode(question) + [SEP_ID]
            + vocab.encode(answer) + [SEP_ID]
        )
        length = len(ids)
        token_ids = np.full(max_len, PAD_ID, dtype=np.int64)
        token_ids[:length] = ids
        mask = np.zeros(max_len, dtype=np.int8)
        mask[:length] = 1
        instances.append(EncodedInstance(
            token_ids=token_ids,
            attention_mask=mask,
            boundary=1 + len(context),
            length=length,
            is_gold=option_index == example.gold,
            example_id=example.example_id,
            option_index=option_index,
        ))
    return instances


def encode_question(example: McExample, vocab: Vocab, max_len: int, task: str) -> EncodedQuestion:
    return EncodedQuestion(
        example_id=example.example_id,
        task=task,
        gold=example.gold,
        instances=tuple(encode_example(example, vocab, max_len)),
    )


def encode_dataset(examples: Sequence[McExample], vocab: Vocab, max_len: int, task: str) -> List[EncodedQuestion]:
    return [encode_question(example, vocab, max_len, task) for example in examples]


def decode(instance: EncodedInstance, vocab: Vocab) -> List[str]:
    """Tokens of the unpadded sequence, specials included."""
    return vocab.decode(instance.token_ids[: instance.length].tolist())
