"""
Tests for the binary checkpoint format.
"""

import json
import struct

import numpy as np
import pytest

from duma_mrc.errors import CheckpointError
from duma_mrc.model.mc_model import McModel
from duma_mrc.schemas import TrainConfig
from duma_mrc.training import checkpoint as checkpoint_module
from duma_mrc.training.checkpoint import MAGIC, load_checkpoint, read_checkpoint, save_checkpoint
from duma_mrc.training.trainer import evaluate


@pytest.fixture
def saved(tmp_path, micro_model):
    path = save_checkpoint(tmp_path / "best.ckpt", micro_model, TrainConfig(), 7, {"syn": 0.5}, "syn")
    return path, micro_model


def rewrite_header(path, mutate):
    raw = path.read_bytes()
    prefix = len(MAGIC) + 4
    (length,) = struct.unpack_from("<I", raw, len(MAGIC))
    header = json.loads(raw[prefix:prefix + length])
    mutate(header)
    encoded = json.dumps(header).encode("utf-8")
    path.write_bytes(MAGIC + struct.pack("<I", len(encoded)) + encoded + raw[prefix + length:])


class TestRoundTrip:
    def test_parameters_restored_exactly(self, saved):
        path, model = saved
        restored, header = load_checkpoint(path)

        assert header.step == 7
        assert header.primary_task == "syn"
        assert header.dev_accuracy == {"syn": 0.5}
        assert restored.config == model.config
        original = model.state_arrays()
        for name, array in restored.state_arrays().items():
            assert np.array_equal(array, original[name]), name

    def test_resave_is_byte_identical(self, saved, tmp_path):
        path, _ = saved
        restored, header = load_checkpoint(path)
        again = save_checkpoint(tmp_path / "again.ckpt", restored, header.train, header.step, header.dev_accuracy, "syn")
        assert again.read_bytes() == path.read_bytes()

    def test_evaluation_is_preserved(self, saved, synthetic_questions):
        path, model = saved
        restored, _ = load_checkpoint(path)
        before = evaluate(model, synthetic_questions)
        after = evaluate(restored, synthetic_questions)
        assert after.accuracy == before.accuracy
        assert [p.probabilities for p in after.predictions] == [p.probabilities for p in before.predictions]

    def test_shared_tensors_stored_once(self, saved):
        path, model = saved
        header, arrays = read_checkpoint(path)
        assert len(header.tensors) == len(model.named_parameters())
        assert not any(name.startswith("encoder.block1.") for name in arrays)


class TestCorruption:
    def test_bad_magic(self, saved):
        path, _ = saved
        path.write_bytes(b"NOTACKPT" + path.read_bytes()[8:])
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_truncated_body(self, saved):
        path, _ = saved
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_truncated_header(self, saved):
        path, _ = saved
        path.write_bytes(path.read_bytes()[:40])
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_corrupt_header(self, saved):
        path, _ = saved
        raw = bytearray(path.read_bytes())
        raw[12:16] = b"\xff\xfe\x00{"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_unsupported_version(self, saved):
        path, _ = saved
        rewrite_header(path, lambda header: header.update(format_version=99))
        with pytest.raises(CheckpointError, match="not supported"):
            read_checkpoint(path)

    def test_shape_mismatch(self, saved):
        path, _ = saved

        def widen(header):
            header["model"]["hidden"] = 32
            header["model"]["duma_head_dim"] = 16

        rewrite_header(path, widen)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            read_checkpoint(tmp_path / "absent.ckpt")


class TestAtomicWrite:
    def test_no_temporary_file_left(self, saved):
        path, _ = saved
        assert not path.with_suffix(".ckpt.tmp").exists()

    def test_failed_rename_keeps_previous_checkpoint(self, saved, monkeypatch):
        path, model = saved
        previous = path.read_bytes()

        def failing_replace(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(checkpoint_module.os, "replace", failing_replace)
        with pytest.raises(CheckpointError):
            save_checkpoint(path, McModel(model.config.model_copy(update={"seed": 5})), TrainConfig(), 9, {}, "syn")
        assert path.read_bytes() == previous
