"""
RACE passage dataset parser.

A split is a directory tree (``high/`` and ``middle/``) of JSON documents:

    {"article": "...", "questions": ["..."], "options": [["a", "b", "c", "d"]],
     "answers": ["C"], "id": "high1.txt"}

The public distribution names these files ``*.txt``; both suffixes are read.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

from duma_mrc.errors import DataIntegrityError
from duma_mrc.parsers.json_source import read_json
from duma_mrc.parsers.mc_example import LoadReport, McExample
from duma_mrc.schemas import TaskKind

logger = logging.getLogger(__name__)

RACE_SUFFIXES = (".json", ".txt")
ANSWER_LETTERS = "ABCD"
REQUIRED_FIELDS = ("article", "questions", "options", "answers")


def _race_files(root: Path) -> List[Path]:
    if root.is_file():
        return [root]
    return sorted(
        (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in RACE_SUFFIXES),
        key=lambda p: p.relative_to(root).as_posix(),
    )


def _parse_document(path: Path) -> List[McExample]:
    document = read_json(path)
    if not isinstance(document, dict):
        raise DataIntegrityError("RACE document must be a JSON object", {"file": str(path)})
    missing = [name for name in REQUIRED_FIELDS if name not in document]
    if missing:
        raise DataIntegrityError(f"RACE document missing fields {missing}", {"file": str(path)})

    questions, options, answers = document["questions"], document["options"], document["answers"]
    if not (len(questions) == len(options) == len(answers)):
        raise DataIntegrityError(
            "questions, options and answers differ in length",
            {"file": str(path), "lengths": [len(questions), len(options), len(answers)]},
        )
    article_id = str(document.get("id") or path.stem)

    examples = []
    for q_index, (question, row, answer) in enumerate(zip(questions, options, answers)):
        if not isinstance(row, list) or len(row) != 4:
            raise DataIntegrityError(
                "options row must hold exactly 4 entries",
                {"file": str(path), "question_index": q_index},
            )
        if not isinstance(answer, str) or len(answer) != 1 or answer not in ANSWER_LETTERS:
            raise DataIntegrityError(
                f"answer {answer!r} outside A-D",
                {"file": str(path), "question_index": q_index},
            )
        examples.append(McExample(
            task=TaskKind.RACE,
            context=[document["article"]],
            question=question,
            options=list(row),
            gold=ANSWER_LETTERS.index(answer),
            example_id=f"{article_id}-q{q_index}",
            source_id=article_id,
        ))
    return examples


def load_race(path: Union[str, Path], report: Optional[LoadReport] = None) -> List[McExample]:
    """
    Load every RACE document under a split directory.

    Args:
        path: Split directory (or a single document)
        report: Optional LoadReport receiving file counts and warnings

    Returns:
        One McExample per question; context is the single article

    Raises:
        FileNotFoundError: If the path does not exist
        DatasetParseError: If a document is not valid JSON
        DataIntegrityError: If an options row is not 4 long or an answer is outside A-D
    """
    root = Path(path)
    if not root.exists():
        raise FileNotFoundError(f"RACE path not found: {root}")
    report = report if report is not None else LoadReport()

    files = _race_files(root)
    if not files:
        message = f"no RACE documents found under {root}"
        report.warnings.append(message)
        logger.warning(message)
        return []

    examples: List[McExample] = []
    for file_path in files:
        examples.extend(_parse_document(file_path))
        report.files_read += 1
    report.examples += len(examples)
    logger.info("Loaded %d RACE questions from %d documents (%s)", len(examples), len(files), root)
    return examples
