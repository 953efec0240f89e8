"""
Tests for size-proportional multi-task sampling.
"""

from collections import Counter
from itertools import islice

import pytest

from duma_mrc.errors import ConfigurationError
from duma_mrc.training.sampler import ProportionalSampler


class TestProportionalSampler:
    def test_task_frequencies_match_sizes(self):
        sampler = ProportionalSampler([30, 70], batch_size=4, seed=0)
        draws = 10_000
        counts = Counter(task for task, _ in islice(sampler, draws))

        fraction = counts[0] / draws
        assert abs(fraction - 0.30) < 0.02

        expected = [0.3 * draws, 0.7 * draws]
        chi_square = sum((counts[i] - expected[i]) ** 2 / expected[i] for i in range(2))
        assert chi_square < 6.635

    def test_single_task_always_selected(self):
        sampler = ProportionalSampler([5], batch_size=2, seed=1)
        assert {task for task, _ in islice(sampler, 50)} == {0}

    def test_no_repeats_within_a_pool_epoch(self):
        sampler = ProportionalSampler([10], batch_size=3, seed=2)
        batches = [indices for _, indices in islice(sampler, 4)]
        assert [len(batch) for batch in batches] == [3, 3, 3, 1]
        seen = [index for batch in batches for index in batch]
        assert sorted(seen) == list(range(10))
        assert sampler.task_epochs == [1]

    def test_pool_reshuffles_after_exhaustion(self):
        sampler = ProportionalSampler([4], batch_size=4, seed=3)
        first, second = next(sampler)[1], next(sampler)[1]
        assert sorted(first) == sorted(second) == [0, 1, 2, 3]
        assert sampler.task_epochs == [2]

    def test_same_seed_same_stream(self):
        first = list(islice(ProportionalSampler([7, 11], 3, seed=9), 40))
        second = list(islice(ProportionalSampler([7, 11], 3, seed=9), 40))
        assert first == second

    def test_empty_task_is_rejected(self):
        with pytest.raises(ConfigurationError):
            ProportionalSampler([10, 0], batch_size=2)

    def test_no_tasks_is_rejected(self):
        with pytest.raises(ConfigurationError):
            ProportionalSampler([], batch_size=2)

    def test_batch_size_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            ProportionalSampler([3], batch_size=0)
