"""Word-level vocabulary standing in for a pretrained subword tokenizer."""

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Sequence, Union

from duma_mrc.errors import ConfigurationError, DataIntegrityError
from duma_mrc.parsers.mc_example import McExample

logger = logging.getLogger(__name__)

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP)
PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3
DEFAULT_VOCAB_SIZE = 30000

_TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> List[str]:
    """Lowercase, then split into word runs and single punctuation marks."""
    return _TOKEN_PATTERN.findall(text.lower())


def example_texts(example: McExample) -> Iterator[str]:
    yield from example.context
    yield example.question
    yield from example.options


@dataclass
class Vocab:
    """Token table; ids 0-3 are the fixed special tokens."""

    tokens: List[str]
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise DataIntegrityError("vocabulary must start with the special tokens", {"head": self.tokens[:4]})
        self.index = {token: i for i, token in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise DataIntegrityError("vocabulary holds duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def token_to_id(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.token_to_id(token) for token in tokens]

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.tokens[i] for i in ids]

    def save(self, path: Union[str, Path]) -> None:
        """One token per line; line number is the id."""
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocab":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"vocabulary file not found: {path}")
        lines = path.read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines)


def build_vocab(corpus: Iterable[McExample], max_size: int = DEFAULT_VOCAB_SIZE) -> Vocab:
    """Rank tokens by frequency (ties broken lexicographically) and keep ``max_size`` entries."""
    if max_size < len(SPECIAL_TOKENS) + 1:
        raise ConfigurationError(f"vocabulary size must be at least 5, got {max_size}")

    counts: Counter = Counter()
    for example in corpus:
        for text in example_texts(example):
            counts.update(tokenize(text))

    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[: max_size - len(SPECIAL_TOKENS)]]
    logger.info("Built vocabulary: %d of %d distinct tokens kept", len(kept), len(counts))
    return Vocab(list(SPECIAL_TOKENS) + kept)
