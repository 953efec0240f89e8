"""
Versioned binary checkpoints.

Layout: 8-byte magic, 4-byte little-endian header length, UTF-8 JSON header
(``CheckpointHeader``), then each tensor as raw little-endian float32 bytes at
the offset recorded in the header. Writes go to a temporary file that is
renamed into place.
"""

import logging
import os
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
from pydantic import ValidationError

from duma_mrc import config
from duma_mrc.errors import CheckpointError
from duma_mrc.model.mc_model import McModel
from duma_mrc.schemas import CheckpointHeader, TensorEntry, TrainConfig

logger = logging.getLogger(__name__)

MAGIC = b"DUMACKPT"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")
BLOB_DTYPE = np.dtype("<f4")


def save_checkpoint(
    path: Union[str, Path],
    model: McModel,
    train_config: TrainConfig,
    step: int,
    dev_accuracy: Dict[str, float],
    primary_task: str,
) -> Path:
    path = Path(path)
    blobs = []
    entries = []
    offset = 0
    for name, tensor in model.named_parameters().items():
        blob = np.ascontiguousarray(tensor.data, dtype=BLOB_DTYPE).tobytes()
        entries.append(TensorEntry(name=name, shape=list(tensor.shape), offset=offset, nbytes=len(blob)))
        blobs.append(blob)
        offset += len(blob)

    header = CheckpointHeader(
        format_version=FORMAT_VERSION,
        model=model.config,
        train=train_config,
        step=step,
        dev_accuracy=dev_accuracy,
        primary_task=primary_task,
        vocab_file=config.VOCAB_FILE,
        tensors=entries,
    )
    header_bytes = header.model_dump_json().encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp_path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(_LENGTH.pack(len(header_bytes)))
            handle.write(header_bytes)
            for blob in blobs:
                handle.write(blob)
        os.replace(tmp_path, path)
    except OSError as exc:
        raise CheckpointError(f"could not write checkpoint {path}: {exc}") from exc

    logger.info("Saved checkpoint %s at step %d (%s)", path, step, dev_accuracy)
    return path


def read_checkpoint(path: Union[str, Path]) -> Tuple[CheckpointHeader, Dict[str, np.ndarray]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"could not read checkpoint {path}: {exc}") from exc

    prefix = len(MAGIC) + _LENGTH.size
    if len(raw) < prefix or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    (header_length,) = _LENGTH.unpack_from(raw, len(MAGIC))
    header_end = prefix + header_length
    if header_end > len(raw):
        raise CheckpointError(f"checkpoint {path} is truncated inside its header")
    try:
        header = CheckpointHeader.model_validate_json(raw[prefix:header_end])
    except ValidationError as exc:
        raise CheckpointError(f"checkpoint {path} has a corrupt header: {exc.errors()[0].get('msg')}") from exc
    if header.format_version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format {header.format_version} is not supported (expected {FORMAT_VERSION})"
        )

    body = memoryview(raw)[header_end:]
    arrays: Dict[str, np.ndarray] = {}
    for entry in header.tensors:
        expected = int(np.prod(entry.shape, dtype=np.int64)) * BLOB_DTYPE.itemsize
        if entry.nbytes != expected or entry.offset + entry.nbytes > len(body):
            raise CheckpointError(f"checkpoint {path} is truncated or corrupt at tensor '{entry.name}'")
        blob = body[entry.offset: entry.offset + entry.nbytes]
        arrays[entry.name] = np.frombuffer(blob, dtype=BLOB_DTYPE).reshape(entry.shape).astype(np.float32)
    return header, arrays


def load_checkpoint(path: Union[str, Path]) -> Tuple[McModel, CheckpointHeader]:
    header, arrays = read_checkpoint(path)
    model = McModel(header.model)
    model.load_state_arrays(arrays)
    logger.info("Loaded checkpoint %s (step %d)", path, header.step)
    return model, header
