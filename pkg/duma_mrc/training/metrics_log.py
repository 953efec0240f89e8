import json
from pathlib import Path
from typing import List, Union

from duma_mrc.schemas import MetricsRecord


class MetricsWriter:
    """Append-only JSON-lines metrics file, flushed after every record."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "w", encoding="utf-8")

    def write(self, record: MetricsRecord) -> None:
        self._handle.write(record.model_dump_json() + "\n")
        self._handle.flush()

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def read_metrics(path: Union[str, Path]) -> List[MetricsRecord]:
    with open(path, encoding="utf-8") as handle:
        return [MetricsRecord.model_validate(json.loads(line)) for line in handle if line.strip()]
