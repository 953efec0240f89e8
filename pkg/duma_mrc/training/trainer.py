"""
Joint multi-task training loop.

Each step draws a single-task mini-batch in proportion to the tasks' training
sizes, averages the per-question cross-entropy, clips the global gradient
norm, follows the linear warmup/decay schedule and applies AdamW. Every
``eval_every`` steps (and after the last step) every task's dev split is
evaluated; the checkpoint is replaced whenever the primary task improves.
"""

import json
import logging
import math
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from duma_mrc import config
from duma_mrc.autograd import ops
from duma_mrc.autograd.tensor import Tape, backward
from duma_mrc.errors import ConfigurationError, NumericError
from duma_mrc.instrumentation.timing import log_duration
from duma_mrc.model.classifier import accuracy, cross_entropy
from duma_mrc.model.mc_model import McModel, is_decayed
from duma_mrc.schemas import MetricsRecord, PredictionRecord, RunConfig, TrainConfig
from duma_mrc.services.encoding import EncodedQuestion
from duma_mrc.services.task_data import TaskData
from duma_mrc.services.vocab import Vocab
from duma_mrc.training.checkpoint import save_checkpoint
from duma_mrc.training.metrics_log import MetricsWriter
from duma_mrc.training.optim import AdamMoments, adamw_step, clip_grad_norm, global_grad_norm
from duma_mrc.training.sampler import ProportionalSampler
from duma_mrc.training.schedule import linear_schedule, total_training_steps, warmup_steps

logger = logging.getLogger(__name__)

RUNS_SUMMARY_FILE = "runs.json"


@dataclass
class EvaluationResult:
    task: str
    accuracy: float
    predictions: List[PredictionRecord] = field(default_factory=list)


@dataclass
class TrainState:
    model: McModel
    moments: AdamMoments
    total_steps: int
    warmup_steps: int
    step: int = 0
    best_dev_accuracy: float = -1.0
    best_step: int = 0
    last_dev_accuracy: Dict[str, float] = field(default_factory=dict)
    metrics: List[MetricsRecord] = field(default_factory=list)
    lr_trace: List[float] = field(default_factory=list)
    loss_trace: List[float] = field(default_factory=list)
    post_clip_norms: List[float] = field(default_factory=list)
    checkpoint_path: Optional[Path] = None


@log_duration("evaluate", level=logging.DEBUG)
def evaluate(model: McModel, questions: Sequence[EncodedQuestion], task: str = "") -> EvaluationResult:
    """Forward-only pass with dropout off; returns accuracy and one prediction per question."""
    if not questions:
        raise ConfigurationError(f"cannot evaluate {task or 'task'}: the split is empty")
    was_training = model.training
    model.eval()
    try:
        predictions = []
        for question in questions:
            scores = model.forward_question(question)
            predictions.append(PredictionRecord(
                example_id=question.example_id,
                predicted=scores.predicted,
                gold=question.gold,
                probabilities=[float(p) for p in scores.probabilities],
            ))
    finally:
        model.train(was_training)
    score = accuracy([p.predicted for p in predictions], [p.gold for p in predictions])
    return EvaluationResult(task=task, accuracy=score, predictions=predictions)


def _primary_task(train_config: TrainConfig, names: Sequence[str]) -> str:
    return train_config.primary_task if train_config.primary_task in names else names[0]


def _eval_every(train_config: TrainConfig, task_count: int) -> int:
    if train_config.eval_every is not None:
        return train_config.eval_every
    return 1000 if task_count > 1 else 100


def _batch_loss(model: McModel, batch: Sequence[EncodedQuestion]):
    losses = [cross_entropy(model.forward_question(question), question.gold) for question in batch]
    return ops.reduce_mean(ops.stack(losses))


@log_duration("train")
def train(
    train_config: TrainConfig,
    model: McModel,
    tasks: Sequence[TaskData],
    run_dir: Optional[Union[str, Path]] = None,
) -> TrainState:
    if not tasks:
        raise ConfigurationError("training needs at least one task")
    names = [task.name for task in tasks]
    primary = _primary_task(train_config, names)
    sizes = [len(task.train) for task in tasks]
    total = total_training_steps(sizes, train_config.batch_size, train_config.epochs)
    if train_config.max_steps is not None:
        total = min(total, train_config.max_steps)
    warmup = warmup_steps(total, train_config.warmup_fraction)
    eval_every = _eval_every(train_config, len(tasks))

    sampler = ProportionalSampler(sizes, train_config.batch_size, train_config.seed)
    params = model.named_parameters()
    state = TrainState(model=model, moments=AdamMoments.zeros_like(params), total_steps=total, warmup_steps=warmup)
    run_path = Path(run_dir) if run_dir is not None else None
    writer = MetricsWriter(run_path / config.METRICS_FILE) if run_path is not None else None

    logger.info(
        "Training %d steps on %s (train sizes %s), warmup %d, eval every %d, primary task %s",
        total, names, sizes, warmup, eval_every, primary,
    )
    running_losses: Dict[str, List[float]] = {name: [] for name in names}
    start_time = time.perf_counter()
    model.train()
    try:
        for step in range(1, total + 1):
            task_index, indices = next(sampler)
            task = tasks[task_index]
            batch = [task.train[i] for i in indices]

            model.zero_grad()
            with Tape() as tape:
                loss = _batch_loss(model, batch)
            loss_value = loss.item()
            if not math.isfinite(loss_value):
                tape.clear()
                raise NumericError(
                    f"non-finite loss at step {step}",
                    {"step": step, "task": task.name, "example_ids": [q.example_id for q in batch]},
                )
            backward(tape, loss)
            tape.clear()

            clip_grad_norm(params.values(), train_config.clip_norm)
            post_clip_norm = global_grad_norm(params.values())
            lr = linear_schedule(step, total, warmup, train_config.peak_lr)
            adamw_step(params, state.moments, step, lr, train_config.weight_decay, is_decayed)

            state.step = step
            state.lr_trace.append(lr)
            state.loss_trace.append(loss_value)
            state.post_clip_norms.append(post_clip_norm)
            running_losses[task.name].append(loss_value)

            if step % eval_every == 0 or step == total:
                wall_time = time.perf_counter() - start_time
                _evaluate_and_record(state, train_config, tasks, primary, lr, running_losses, wall_time, writer, run_path)
    finally:
        if writer is not None:
            writer.close()
        model.eval()

    logger.info(
        "Finished %d steps; best %s dev accuracy %.4f at step %d",
        state.step, primary, state.best_dev_accuracy, state.best_step,
    )
    return state


def _evaluate_and_record(
    state: TrainState,
    train_config: TrainConfig,
    tasks: Sequence[TaskData],
    primary: str,
    lr: float,
    running_losses: Dict[str, List[float]],
    wall_time: float,
    writer: Optional[MetricsWriter],
    run_path: Optional[Path],
) -> None:
    dev_accuracy = {task.name: evaluate(state.model, task.dev, task.name).accuracy for task in tasks}
    state.last_dev_accuracy = dev_accuracy
    for task in tasks:
        losses = running_losses[task.name]
        record = MetricsRecord(
            step=state.step,
            task=task.name,
            lr=lr,
            train_loss=sum(losses) / len(losses) if losses else None,
            dev_accuracy=dev_accuracy,
            wall_time=wall_time if train_config.record_wall_time else None,
        )
        state.metrics.append(record)
        if writer is not None:
            writer.write(record)
        losses.clear()

    logger.info("Step %d lr %.3e dev accuracy %s (%.1fs elapsed)", state.step, lr, dev_accuracy, wall_time)
    if dev_accuracy[primary] > state.best_dev_accuracy:
        state.best_dev_accuracy = dev_accuracy[primary]
        state.best_step = state.step
        if run_path is not None:
            state.checkpoint_path = save_checkpoint(
                run_path / config.BEST_CHECKPOINT_FILE,
                state.model,
                train_config,
                state.step,
                dev_accuracy,
                primary,
            )


@dataclass
class RunSummary:
    run: int
    seed: int
    run_dir: str
    best_dev_accuracy: float
    best_step: int


def train_best_of(
    run_config: RunConfig,
    tasks: Sequence[TaskData],
    run_root: Union[str, Path],
    vocab: Optional[Vocab] = None,
) -> List[RunSummary]:
    """Train ``runs`` seeds (seed, seed+1, ...) and keep the run with the best primary dev accuracy.

    A single run writes straight into ``run_root``. Several runs each get a
    ``run-<n>`` sub-directory; the winner's checkpoint is copied to the root
    and every run is summarised in ``runs.json``.
    """
    root = Path(run_root)
    runs = run_config.train.runs
    summaries: List[RunSummary] = []
    for index in range(runs):
        run_dir = root if runs == 1 else root / f"run-{index + 1}"
        run_dir.mkdir(parents=True, exist_ok=True)
        if vocab is not None and run_dir != root:
            vocab.save(run_dir / config.VOCAB_FILE)
        seed = run_config.train.seed + index
        model = McModel(run_config.model.model_copy(update={"seed": run_config.model.seed + index}))
        state = train(run_config.train.model_copy(update={"seed": seed}), model, tasks, run_dir)
        summaries.append(RunSummary(index + 1, seed, str(run_dir), state.best_dev_accuracy, state.best_step))

    best = max(summaries, key=lambda summary: (summary.best_dev_accuracy, -summary.run))
    if runs > 1:
        shutil.copyfile(Path(best.run_dir) / config.BEST_CHECKPOINT_FILE, root / config.BEST_CHECKPOINT_FILE)
        (root / RUNS_SUMMARY_FILE).write_text(
            json.dumps({"best_run": best.run, "runs": [vars(s) for s in summaries]}, indent=2),
            encoding="utf-8",
        )
        logger.info("Best of %d runs: run %d (dev accuracy %.4f)", runs, best.run, best.best_dev_accuracy)
    return summaries
