"""
Checks against locally downloaded DREAM and RACE releases.

Skipped unless DUMA_DREAM_DIR / DUMA_RACE_DIR point at the extracted data.
"""

from pathlib import Path

import pytest

from duma_mrc import config
from duma_mrc.parsers import LoadReport, load_dream, load_race
from duma_mrc.schemas import TaskKind
from duma_mrc.services.dataset_stats import compare_with_published, compute_dataset_stats
from duma_mrc.services.encoding import encode_dataset
from duma_mrc.services.vocab import build_vocab

pytestmark = pytest.mark.integration

requires_dream = pytest.mark.skipif(not config.DREAM_DIR, reason="DUMA_DREAM_DIR not set")
requires_race = pytest.mark.skipif(not config.RACE_DIR, reason="DUMA_RACE_DIR not set")


@requires_dream
class TestDream:
    @pytest.fixture(scope="class")
    def examples(self):
        report = LoadReport()
        root = Path(config.DREAM_DIR)
        loaded = []
        for name in ("train.json", "dev.json", "test.json"):
            loaded.extend(load_dream(root / name, report))
        return loaded

    def test_matches_published_counts(self, examples):
        stats = compute_dataset_stats("dream", examples)
        assert stats.contexts > 6000
        assert stats.questions > 10000
        assert compare_with_published(stats, TaskKind.DREAM) == []

    def test_average_dialogue_length_near_reference(self, examples):
        stats = compute_dataset_stats("dream", examples)
        assert 60 <= stats.avg_context_words <= 110

    def test_gold_covers_every_option(self, examples):
        stats = compute_dataset_stats("dream", examples)
        assert set(stats.gold_histogram) == {0, 1, 2}
        assert stats.option_histogram == {3: stats.questions}

    def test_encodes_at_full_length(self, examples):
        sample = examples[:200]
        questions = encode_dataset(sample, build_vocab(sample, 30000), 512, "dream")
        assert all(q.num_options == 3 for q in questions)
        assert all(i.length <= 512 for q in questions for i in q.instances)


@requires_race
class TestRace:
    @pytest.fixture(scope="class")
    def examples(self):
        report = LoadReport()
        root = Path(config.RACE_DIR)
        loaded = []
        for split in ("train", "dev", "test"):
            loaded.extend(load_race(root / split, report))
        return loaded

    def test_matches_published_counts(self, examples):
        stats = compute_dataset_stats("race", examples)
        assert stats.contexts > 28000
        assert 90000 < stats.questions <= 100000
        assert compare_with_published(stats, TaskKind.RACE) == []

    def test_average_passage_length_near_reference(self, examples):
        stats = compute_dataset_stats("race", examples)
        assert 250 <= stats.avg_context_words <= 400

    def test_gold_covers_every_option(self, examples):
        stats = compute_dataset_stats("race", examples)
        assert set(stats.gold_histogram) == {0, 1, 2, 3}
        assert stats.option_histogram == {4: stats.questions}
