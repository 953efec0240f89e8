"""
Tests for task preparation, dataset fingerprints and run manifests.
"""

import shutil

import pytest

from duma_mrc.errors import ConfigurationError
from duma_mrc.schemas import RunConfig, SyntheticSpec, TaskKind, TaskSpec, TrainConfig
from duma_mrc.services.manifest import build_manifest, read_manifest, write_manifest
from duma_mrc.services.task_data import content_hash, prepare_tasks
from duma_mrc.services.vocab import build_vocab
from duma_mrc.tests.factories import make_micro_config


def run_config_with(*tasks) -> RunConfig:
    return RunConfig(model=make_micro_config(), train=TrainConfig(tasks=list(tasks)))


def synthetic_task(name="syn", **spec) -> TaskSpec:
    return TaskSpec(name=name, kind=TaskKind.SYNTHETIC, synthetic=SyntheticSpec(train_size=9, dev_size=6, **spec))


class TestPrepareTasks:
    def test_synthetic_task(self):
        tasks, vocab, fingerprints = prepare_tasks(run_config_with(synthetic_task()))
        assert len(tasks) == 1
        assert (len(tasks[0].train), len(tasks[0].dev), len(tasks[0].test)) == (9, 6, 0)
        assert [(f.task, f.split, f.items) for f in fingerprints] == [("syn", "train", 9), ("syn", "dev", 6)]
        assert len(vocab) <= 128

    def test_mixed_option_counts(self):
        tasks, _, _ = prepare_tasks(run_config_with(synthetic_task("three"), synthetic_task("four", num_options=4)))
        assert {q.num_options for q in tasks[0].train} == {3}
        assert {q.num_options for q in tasks[1].train} == {4}

    def test_missing_split_is_skipped(self, dream_fixture):
        task = TaskSpec(name="dream", kind=TaskKind.DREAM, train_path=str(dream_fixture), dev_path=str(dream_fixture))
        tasks, _, fingerprints = prepare_tasks(run_config_with(task), splits=("train", "dev", "test"))
        assert len(tasks[0].train) == 5
        assert tasks[0].test == []
        assert [f.split for f in fingerprints] == ["train", "dev"]

    def test_absent_test_file_is_skipped(self, dream_fixture, tmp_path):
        task = TaskSpec(
            name="dream", kind=TaskKind.DREAM, train_path=str(dream_fixture), dev_path=str(dream_fixture),
            test_path=str(tmp_path / "test.json"),
        )
        tasks, _, fingerprints = prepare_tasks(run_config_with(task), splits=("train", "dev", "test"))
        assert tasks[0].test == []
        assert [f.split for f in fingerprints] == ["train", "dev"]

    def test_absent_dev_file_still_fails(self, dream_fixture, tmp_path):
        task = TaskSpec(
            name="dream", kind=TaskKind.DREAM, train_path=str(dream_fixture), dev_path=str(tmp_path / "dev.json"),
        )
        with pytest.raises(FileNotFoundError):
            prepare_tasks(run_config_with(task))

    def test_vocab_needs_train_split(self):
        with pytest.raises(ConfigurationError):
            prepare_tasks(run_config_with(synthetic_task()), splits=("dev",))

    def test_given_vocab_is_reused(self):
        vocab = build_vocab([], 10)
        _, returned, _ = prepare_tasks(run_config_with(synthetic_task()), splits=("dev",), vocab=vocab)
        assert returned is vocab

    def test_no_tasks(self):
        with pytest.raises(ConfigurationError):
            prepare_tasks(run_config_with())


class TestContentHash:
    def test_stable_and_sensitive(self, race_fixture, tmp_path):
        copy = tmp_path / "race"
        shutil.copytree(race_fixture, copy)
        task = TaskSpec(name="race", kind=TaskKind.RACE, train_path=str(copy), dev_path=str(copy))

        first = content_hash(task, "train")
        assert content_hash(task, "train") == first

        target = copy / "high" / "high2.txt"
        target.write_text(target.read_text(encoding="utf-8").replace("D", "A", 1), encoding="utf-8")
        assert content_hash(task, "train") != first

    def test_synthetic_hash_depends_on_generator_settings(self):
        assert content_hash(synthetic_task(seed=0), "train") != content_hash(synthetic_task(seed=1), "train")
        assert content_hash(synthetic_task(), "train") != content_hash(synthetic_task(), "dev")


class TestManifest:
    def test_write_and_read(self, tmp_path):
        run_config = run_config_with(synthetic_task())
        _, _, fingerprints = prepare_tasks(run_config)
        manifest = build_manifest(run_config, fingerprints, {"checkpoint": "best.ckpt"})

        path = write_manifest(tmp_path, manifest)

        assert path.name == "manifest.json"
        restored = read_manifest(tmp_path)
        assert restored == manifest
        assert restored.seed == run_config.train.seed
        assert not path.with_suffix(".json.tmp").exists()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_manifest(tmp_path)

    def test_invalid_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{}", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_manifest(tmp_path)
