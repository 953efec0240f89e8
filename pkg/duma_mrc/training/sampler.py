"""Size-proportional task sampling over single-task mini-batches."""

import logging
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from duma_mrc.errors import ConfigurationError

logger = logging.getLogger(__name__)


class ProportionalSampler:
    """Infinite stream of ``(task_index, example_indices)`` batches.

    The task of each batch is drawn with probability size / total. Within a
    task, examples are drawn without replacement until its pool is exhausted
    (the last batch of a pool may be short), then the pool is reshuffled.
    """

    def __init__(self, sizes: Sequence[int], batch_size: int, seed: int = 0):
        if not sizes:
            raise ConfigurationError("sampler needs at least one task")
        empty = [index for index, size in enumerate(sizes) if size <= 0]
        if empty:
            raise ConfigurationError(f"task(s) {empty} have no training examples", {"sizes": list(sizes)})
        if batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {batch_size}")

        self.sizes = [int(size) for size in sizes]
        self.batch_size = batch_size
        self.probabilities = np.asarray(self.sizes, dtype=np.float64) / sum(self.sizes)
        self.task_epochs = [0] * len(self.sizes)
        self._rng = np.random.default_rng(seed)
        self._pools: List[np.ndarray] = [np.empty(0, dtype=np.int64) for _ in self.sizes]

    def __iter__(self) -> Iterator[Tuple[int, List[int]]]:
        return self

    def __next__(self) -> Tuple[int, List[int]]:
        task = int(self._rng.choice(len(self.sizes), p=self.probabilities))
        return task, self._draw(task)

    def _draw(self, task: int) -> List[int]:
        pool = self._pools[task]
        if pool.size == 0:
            pool = self._rng.permutation(self.sizes[task])
            self.task_epochs[task] += 1
            logger.debug("Task %d starts pool epoch %d", task, self.task_epochs[task])
        batch, self._pools[task] = pool[: self.batch_size], pool[self.batch_size:]
        return [int(index) for index in batch]
