"""
The assembled multiple-choice model: encoder, DUMA layer and option scorer.

One parameter set serves every task regardless of its option count. Parameters
are exposed by dotted name; aliased tensors (shared encoder blocks or shared
DUMA directions) appear once, under the first name that reaches them.
"""

import logging
from collections import OrderedDict
from typing import Dict, List, Optional

import numpy as np

from duma_mrc.autograd.tensor import Tensor
from duma_mrc.errors import CheckpointError
from duma_mrc.model.classifier import OptionScores, init_classifier_params, score_options
from duma_mrc.model.duma import duma_forward, init_duma_params
from duma_mrc.model.encoder import encode, init_encoder_params
from duma_mrc.schemas import ModelConfig
from duma_mrc.services.encoding import EncodedInstance, EncodedQuestion

logger = logging.getLogger(__name__)


def is_decayed(name: str) -> bool:
    """Weight decay applies to every parameter except biases and layer-norm parameters."""
    segments = name.split(".")
    if segments[-1].endswith("bias"):
        return False
    return not any(segment.startswith("ln") for segment in segments)


class McModel:
    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.encoder = init_encoder_params(config, rng)
        self.duma = init_duma_params(config, rng)
        self.classifier = init_classifier_params(2 * config.hidden, rng)
        self.training = False
        self._dropout_rng = np.random.default_rng(config.seed + 1)

    # --- parameters ----------------------------------------------------------

    def named_parameters(self) -> "OrderedDict[str, Tensor]":
        named: "OrderedDict[str, Tensor]" = OrderedDict()
        seen = set()
        for source in (self.encoder.named(), self.duma.named(), self.classifier.named()):
            for name, tensor in source:
                if id(tensor) in seen:
                    continue
                seen.add(id(tensor))
                named[name] = tensor
        return named

    def parameters(self) -> List[Tensor]:
        return list(self.named_parameters().values())

    def parameter_count(self) -> int:
        return sum(tensor.size for tensor in self.parameters())

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def to_dtype(self, dtype) -> None:
        for tensor in self.parameters():
            tensor.astype(dtype)

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data for name, tensor in self.named_parameters().items()}

    def load_state_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        named = self.named_parameters()
        missing = sorted(set(named) - set(arrays))
        unexpected = sorted(set(arrays) - set(named))
        if missing or unexpected:
            raise CheckpointError(
                "checkpoint tensors do not match the model",
                {"missing": missing[:5], "unexpected": unexpected[:5]},
            )
        for name, tensor in named.items():
            array = arrays[name]
            if tuple(array.shape) != tensor.shape:
                raise CheckpointError(
                    f"tensor '{name}' has shape {tuple(array.shape)}, model expects {tensor.shape}"
                )
            tensor.data = np.array(array, dtype=tensor.dtype)
            tensor.grad = None

    # --- modes ---------------------------------------------------------------

    def train(self, mode: bool = True) -> "McModel":
        self.training = mode
        return self

    def eval(self) -> "McModel":
        return self.train(False)

    def reseed_dropout(self, seed: int) -> None:
        self._dropout_rng = np.random.default_rng(seed)

    # --- forward -------------------------------------------------------------

    def fuse(self, instance: EncodedInstance) -> Tensor:
        dropout_rng: Optional[np.random.Generator] = self._dropout_rng if self.training else None
        hidden = encode(instance, self.encoder, self.config, dropout_rng)
        return duma_forward(hidden, instance, self.duma)

    def forward_question(self, question: EncodedQuestion) -> OptionScores:
        fused = [self.fuse(instance) for instance in question.instances]
        return score_options(fused, self.classifier.weight, self.classifier.bias)
