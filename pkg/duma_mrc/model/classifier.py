"""Shared linear option scorer, cross-entropy loss and accuracy."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from duma_mrc.autograd import ops
from duma_mrc.autograd.tensor import Tensor
from duma_mrc.errors import DimensionError, LabelError
from duma_mrc.model.attention import zeros


@dataclass
class ClassifierParams:
    weight: Tensor  # [2d]
    bias: Tensor  # [1]

    def named(self, prefix: str = "classifier"):
        yield f"{prefix}.weight", self.weight
        yield f"{prefix}.bias", self.bias


@dataclass
class OptionScores:
    logits: Tensor
    probabilities: np.ndarray
    predicted: int

    @property
    def num_options(self) -> int:
        return int(self.logits.shape[0])


def init_classifier_params(width: int, rng: np.random.Generator) -> ClassifierParams:
    limit = np.sqrt(6.0 / (width + 1))
    weight = Tensor(
        rng.uniform(-limit, limit, size=width).astype(np.float32), requires_grad=True, name="classifier.weight"
    )
    return ClassifierParams(weight=weight, bias=zeros(1, "classifier.bias"))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def score_options(fused: Sequence[Tensor], weight: Tensor, bias: Tensor) -> OptionScores:
    """logit_i = w . fused_i + b for every option, normalised over the option set."""
    if len(fused) < 2:
        raise DimensionError(f"need at least 2 options to score, got {len(fused)}")
    width = weight.shape[0]
    widths = sorted({f.shape[-1] for f in fused})
    if widths != [width]:
        raise DimensionError(
            f"fused width {widths} does not match classifier width {width}",
            {"fused_widths": widths, "weight_width": width},
        )
    stacked = ops.stack(fused)
    logits = ops.add(ops.reshape(ops.matmul(stacked, ops.reshape(weight, (width, 1))), (len(fused),)), bias)
    probabilities = softmax(logits.data.astype(np.float64))
    # np.argmax keeps the lowest index on ties.
    return OptionScores(logits=logits, probabilities=probabilities, predicted=int(np.argmax(logits.data)))


def cross_entropy(scores: OptionScores, gold: int) -> Tensor:
    if not 0 <= gold < scores.num_options:
        raise LabelError(f"gold index {gold} outside {scores.num_options} options")
    return ops.cross_entropy_logits(scores.logits, gold)


def accuracy(predictions: Sequence[int], golds: Sequence[int]) -> float:
    if len(predictions) != len(golds):
        raise DimensionError(f"{len(predictions)} predictions for {len(golds)} gold labels")
    if not predictions:
        raise DimensionError("accuracy of an empty prediction list is undefined")
    correct = sum(int(p) == int(g) for p, g in zip(predictions, golds))
    return correct / len(predictions)
