"""JSON reading with byte-accurate parse diagnostics."""

import json
from pathlib import Path
from typing import Any

from duma_mrc.errors import DatasetParseError


def read_json(path: Path) -> Any:
    raw = path.read_bytes()
    text = raw.decode("utf-8-sig")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        byte_offset = len(text[: exc.pos].encode("utf-8"))
        raise DatasetParseError(
            f"malformed JSON in {path} at byte offset {byte_offset}: {exc.msg}",
            {"path": str(path), "byte_offset": byte_offset, "line": exc.lineno, "column": exc.colno},
        ) from exc
