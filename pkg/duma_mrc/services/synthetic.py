"""Synthetic multiple-choice tasks for offline training and sanity checks.

Separable tasks draw the gold option from a "pos" word pool and distractors
from a disjoint "neg" pool; non-separable tasks draw every option from the
union, so the gold position carries no signal.
"""

from typing import Dict, List

import numpy as np

from duma_mrc.parsers.mc_example import McExample
from duma_mrc.schemas import SyntheticSpec, TaskKind

CONTEXT_POOL = [f"ctx{i}" for i in range(40)]
QUESTION_POOL = [f"ask{i}" for i in range(10)]
POSITIVE_POOL = [f"pos{i}" for i in range(12)]
NEGATIVE_POOL = [f"neg{i}" for i in range(12)]

SPLIT_SEED_OFFSETS = {"train": 0, "dev": 1000, "test": 2000}


def make_synthetic_examples(
    count: int,
    num_options: int = 3,
    seed: int = 0,
    separable: bool = True,
    context_len: int = 8,
    id_prefix: str = "syn",
) -> List[McExample]:
    rng = np.random.default_rng(seed)
    golds = np.arange(count) % num_options
    rng.shuffle(golds)
    mixed_pool = POSITIVE_POOL + NEGATIVE_POOL

    examples = []
    for i, gold in enumerate(golds.tolist()):
        options = []
        for j in range(num_options):
            if not separable:
                pool = mixed_pool
            else:
                pool = POSITIVE_POOL if j == gold else NEGATIVE_POOL
            options.append(" ".join(rng.choice(pool, size=2)))
        examples.append(McExample(
            task=TaskKind.SYNTHETIC,
            context=[" ".join(rng.choice(CONTEXT_POOL, size=context_len))],
            question=" ".join(rng.choice(QUESTION_POOL, size=3)),
            options=options,
            gold=gold,
            example_id=f"{id_prefix}-{i}",
            source_id=f"{id_prefix}-{i}",
        ))
    return examples


def synthetic_splits(spec: SyntheticSpec, name: str = "syn") -> Dict[str, List[McExample]]:
    sizes = {"train": spec.train_size, "dev": spec.dev_size, "test": spec.test_size}
    return {
        split: make_synthetic_examples(
            sizes[split],
            num_options=spec.num_options,
            seed=spec.seed + offset,
            separable=spec.separable,
            context_len=spec.context_len,
            id_prefix=f"{name}-{split}",
        )
        for split, offset in SPLIT_SEED_OFFSETS.items()
    }
