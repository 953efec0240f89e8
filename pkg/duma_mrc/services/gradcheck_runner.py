"""Whole-model gradient check on a micro configuration."""

import logging
from typing import List

import numpy as np

from duma_mrc.autograd import ops
from duma_mrc.autograd.gradcheck import check_gradients
from duma_mrc.autograd.tensor import precision
from duma_mrc.model.classifier import cross_entropy
from duma_mrc.model.mc_model import McModel
from duma_mrc.schemas import GradCheckReport, ModelConfig
from duma_mrc.services.encoding import EncodedQuestion, encode_question
from duma_mrc.services.synthetic import make_synthetic_examples
from duma_mrc.services.vocab import build_vocab

logger = logging.getLogger(__name__)

GRADCHECK_THRESHOLD = 1e-4
MICRO_MAX_LEN = 20


def micro_config(seed: int = 0, **overrides) -> ModelConfig:
    """Encoder d=16 with 2 layers, DUMA h=2 x d_k=8."""
    values = dict(
        vocab_size=64,
        hidden=16,
        encoder_layers=2,
        encoder_heads=2,
        ff_width=32,
        max_len=MICRO_MAX_LEN,
        duma_heads=2,
        duma_head_dim=8,
        seed=seed,
    )
    values.update(overrides)
    return ModelConfig(**values)


def micro_questions(config: ModelConfig, seed: int = 0) -> List[EncodedQuestion]:
    """One 3-option and one 4-option question sharing a vocabulary."""
    examples = (
        make_synthetic_examples(1, num_options=3, seed=seed, context_len=5, id_prefix="micro3")
        + make_synthetic_examples(1, num_options=4, seed=seed + 1, context_len=4, id_prefix="micro4")
    )
    vocab = build_vocab(examples, config.vocab_size)
    return [encode_question(example, vocab, config.max_len, "micro") for example in examples]


def run_gradcheck(
    seed: int = 0,
    samples_per_tensor: int = 12,
    threshold: float = GRADCHECK_THRESHOLD,
    share_layers: bool = True,
) -> GradCheckReport:
    """Four-point central differences in float64 over sampled scalars of every parameter."""
    config = micro_config(seed, share_layers=share_layers)
    model = McModel(config)
    questions = micro_questions(config, seed)

    def objective():
        losses = [cross_entropy(model.forward_question(q), q.gold) for q in questions]
        return ops.reduce_mean(ops.stack(losses))

    with precision(np.float64):
        result = check_gradients(
            objective, model.parameters(), eps=1e-3, stencil=4, samples_per_tensor=samples_per_tensor, seed=seed
        )
    report = GradCheckReport(
        seed=seed,
        max_relative_error=result.max_relative_error,
        checked_scalars=result.checked_scalars,
        worst_parameter=result.worst_parameter,
        threshold=threshold,
        passed=result.max_relative_error < threshold,
    )
    logger.info(
        "Gradient check seed %d: %d scalars, max relative error %.3e (%s)",
        seed, report.checked_scalars, report.max_relative_error, "pass" if report.passed else "FAIL",
    )
    return report
