"""
Dataset statistics for the data-stats command.

Reports context/question counts, option-count and gold-index histograms and
length percentiles, and compares them with the published dataset figures.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from duma_mrc.parsers.mc_example import McExample
from duma_mrc.schemas import TaskKind
from duma_mrc.services.vocab import tokenize

PERCENTILES = (50, 90, 95, 99)

# Published figures: lower bounds on counts, average context length in words.
PUBLISHED_FIGURES = {
    TaskKind.DREAM: {"min_contexts": 6000, "min_questions": 10000, "max_questions": None,
                     "options": 3, "avg_context_words": 86},
    TaskKind.RACE: {"min_contexts": 28000, "min_questions": 90000, "max_questions": 100000,
                    "options": 4, "avg_context_words": 322},
}


@dataclass
class DatasetStats:
    name: str
    contexts: int
    questions: int
    option_histogram: Dict[int, int] = field(default_factory=dict)
    gold_histogram: Dict[int, int] = field(default_factory=dict)
    avg_context_words: float = 0.0
    context_token_percentiles: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict:
        return {
            "name": self.name,
            "contexts": self.contexts,
            "questions": self.questions,
            "option_histogram": {str(k): v for k, v in sorted(self.option_histogram.items())},
            "gold_histogram": {str(k): v for k, v in sorted(self.gold_histogram.items())},
            "avg_context_words": round(self.avg_context_words, 2),
            "context_token_percentiles": self.context_token_percentiles,
        }


def _percentiles(lengths: Sequence[int]) -> Dict[str, float]:
    if not lengths:
        return {}
    values = np.percentile(np.asarray(lengths, dtype=np.float64), PERCENTILES)
    summary = {f"p{p}": round(float(v), 1) for p, v in zip(PERCENTILES, values)}
    summary["max"] = float(max(lengths))
    return summary


def compute_dataset_stats(name: str, examples: Sequence[McExample]) -> DatasetStats:
    # Contexts are counted once even though every question repeats them.
    contexts: Dict[str, List[str]] = {}
    for example in examples:
        contexts.setdefault(example.source_id or example.example_id, example.context)

    word_counts = [len(" ".join(units).split()) for units in contexts.values()]
    token_counts = [len(tokenize(" ".join(units))) for units in contexts.values()]
    return DatasetStats(
        name=name,
        contexts=len(contexts),
        questions=len(examples),
        option_histogram=dict(Counter(example.num_options for example in examples)),
        gold_histogram=dict(Counter(example.gold for example in examples)),
        avg_context_words=float(np.mean(word_counts)) if word_counts else 0.0,
        context_token_percentiles=_percentiles(token_counts),
    )


def compare_with_published(stats: DatasetStats, kind: TaskKind) -> List[str]:
    """Return human readable discrepancies against the published figures (empty when consistent)."""
    figures = PUBLISHED_FIGURES.get(kind)
    if figures is None:
        return []
    problems = []
    if stats.contexts <= figures["min_contexts"]:
        problems.append(f"{stats.contexts} contexts, expected more than {figures['min_contexts']}")
    if stats.questions <= figures["min_questions"]:
        problems.append(f"{stats.questions} questions, expected more than {figures['min_questions']}")
    if figures["max_questions"] is not None and stats.questions > figures["max_questions"]:
        problems.append(f"{stats.questions} questions, expected at most {figures['max_questions']}")
    wrong_counts = {n: c for n, c in stats.option_histogram.items() if n != figures["options"]}
    if wrong_counts:
        problems.append(f"option counts {wrong_counts} differ from {figures['options']}")
    return problems
