"""Resolve configured task splits into examples, fingerprints and encoded task data."""

import hashlib
import logging
from dataclasses import dataclass, field
from itertools import chain
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from duma_mrc.errors import ConfigurationError
from duma_mrc.parsers import LoadReport, McExample, load_dream, load_race
from duma_mrc.parsers.race import RACE_SUFFIXES
from duma_mrc.schemas import DatasetFingerprint, RunConfig, TaskKind, TaskSpec
from duma_mrc.services.encoding import EncodedQuestion, encode_dataset
from duma_mrc.services.synthetic import synthetic_splits
from duma_mrc.services.vocab import Vocab, build_vocab

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")


def split_path(task: TaskSpec, split: str) -> Optional[str]:
    if split not in SPLITS:
        raise ConfigurationError(f"unknown split '{split}', expected one of {SPLITS}")
    return getattr(task, f"{split}_path")


def load_task_split(task: TaskSpec, split: str, report: Optional[LoadReport] = None) -> List[McExample]:
    if task.kind == TaskKind.SYNTHETIC:
        split_path(task, split)
        return synthetic_splits(task.synthetic, task.name)[split]

    path = split_path(task, split)
    if not path:
        raise ConfigurationError(f"task '{task.name}' has no {split} split configured")
    if task.kind == TaskKind.DREAM:
        return load_dream(path, report)
    return load_race(path, report)


def content_hash(task: TaskSpec, split: str) -> str:
    digest = hashlib.sha256()
    if task.kind == TaskKind.SYNTHETIC:
        digest.update(task.synthetic.model_dump_json().encode("utf-8"))
        digest.update(f"{task.name}/{split}".encode("utf-8"))
        return digest.hexdigest()

    root = Path(split_path(task, split))
    if root.is_file():
        files = [root]
    else:
        files = sorted(
            (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in RACE_SUFFIXES),
            key=lambda p: p.relative_to(root).as_posix(),
        )
    for file_path in files:
        digest.update(file_path.name.encode("utf-8"))
        digest.update(file_path.read_bytes())
    return digest.hexdigest()


def fingerprint(task: TaskSpec, split: str, examples: List[McExample]) -> DatasetFingerprint:
    return DatasetFingerprint(
        task=task.name,
        split=split,
        path=split_path(task, split),
        items=len(examples),
        content_hash=content_hash(task, split),
    )


@dataclass
class TaskData:
    """Encoded splits of one task, ready for the trainer."""

    name: str
    kind: TaskKind
    train: List[EncodedQuestion] = field(default_factory=list)
    dev: List[EncodedQuestion] = field(default_factory=list)
    test: List[EncodedQuestion] = field(default_factory=list)

    def split(self, name: str) -> List[EncodedQuestion]:
        if name not in SPLITS:
            raise ConfigurationError(f"unknown split '{name}', expected one of {SPLITS}")
        return getattr(self, name)


def _has_split(task: TaskSpec, split: str) -> bool:
    if task.kind == TaskKind.SYNTHETIC:
        return True
    path = split_path(task, split)
    if not path:
        return False
    # Train and dev files must exist; a missing test file only drops that split.
    return split != "test" or Path(path).exists()


def prepare_tasks(
    run_config: RunConfig,
    splits: Sequence[str] = ("train", "dev"),
    vocab: Optional[Vocab] = None,
) -> Tuple[List[TaskData], Vocab, List[DatasetFingerprint]]:
    """Load, fingerprint and encode the requested splits of every configured task.

    Without a ``vocab`` one is built from the training splits, which must then
    be among ``splits``.
    """
    tasks = run_config.train.tasks
    if not tasks:
        raise ConfigurationError("no tasks configured; pass --tasks or list train.tasks in the config file")

    loaded: Dict[Tuple[str, str], List[McExample]] = {}
    fingerprints: List[DatasetFingerprint] = []
    for task in tasks:
        for split in splits:
            if not _has_split(task, split):
                logger.warning("Task %s has no %s split; skipping it", task.name, split)
                continue
            report = LoadReport()
            examples = load_task_split(task, split, report)
            loaded[(task.name, split)] = examples
            fingerprints.append(fingerprint(task, split, examples))
            logger.info(
                "Loaded %s/%s: %d questions (%d warnings)", task.name, split, len(examples), report.warning_count
            )

    if vocab is None:
        if "train" not in splits:
            raise ConfigurationError("building a vocabulary needs the train split")
        corpus = chain.from_iterable(loaded.get((task.name, "train"), []) for task in tasks)
        vocab = build_vocab(corpus, run_config.model.vocab_size)
        logger.info("Built vocabulary of %d tokens", len(vocab))

    max_len = run_config.model.max_len
    prepared = []
    for task in tasks:
        data = TaskData(name=task.name, kind=task.kind)
        for split in splits:
            examples = loaded.get((task.name, split), [])
            setattr(data, split, encode_dataset(examples, vocab, max_len, task.name))
        prepared.append(data)
    return prepared, vocab, fingerprints
