"""
DREAM dialogue dataset parser.

Each split is a single JSON file holding a list of entries:

    [["M: Hi.", "W: Hello."],
     [{"question": "...", "choice": ["...", "...", "..."], "answer": "..."}],
     "dialogue-id"]
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

from duma_mrc.errors import DataIntegrityError
from duma_mrc.parsers.json_source import read_json
from duma_mrc.parsers.mc_example import LoadReport, McExample
from duma_mrc.schemas import TaskKind

logger = logging.getLogger(__name__)


def load_dream(path: Union[str, Path], report: Optional[LoadReport] = None) -> List[McExample]:
    """
    Load one DREAM split file.

    Args:
        path: JSON file in the public DREAM schema
        report: Optional LoadReport updated in place

    Returns:
        One McExample per question, dialogue turns kept in order

    Raises:
        FileNotFoundError: If the file does not exist
        DatasetParseError: If the file is not valid JSON
        DataIntegrityError: If an entry is malformed or an answer is not among its choices
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"DREAM file not found: {path}")

    entries = read_json(path)
    if not isinstance(entries, list):
        raise DataIntegrityError("DREAM file must hold a top-level list", {"path": str(path)})

    examples: List[McExample] = []
    for position, entry in enumerate(entries):
        if not isinstance(entry, list) or len(entry) != 3:
            raise DataIntegrityError(
                "DREAM entry must be [turns, questions, id]",
                {"path": str(path), "entry": position},
            )
        turns, questions, dialogue_id = entry
        dialogue_id = str(dialogue_id)
        if not isinstance(turns, list) or not all(isinstance(t, str) for t in turns):
            raise DataIntegrityError("dialogue turns must be strings", {"example_id": dialogue_id})
        if not isinstance(questions, list):
            raise DataIntegrityError("questions must be a list", {"example_id": dialogue_id})

        for q_index, item in enumerate(questions):
            example_id = f"{dialogue_id}-q{q_index}"
            try:
                question, choices, answer = item["question"], item["choice"], item["answer"]
            except (TypeError, KeyError) as exc:
                raise DataIntegrityError(
                    f"question object missing field {exc}", {"example_id": example_id}
                ) from exc
            if answer not in choices:
                raise DataIntegrityError(
                    f"answer {answer!r} is not among the choices",
                    {"example_id": example_id, "path": str(path)},
                )
            examples.append(McExample(
                task=TaskKind.DREAM,
                context=list(turns),
                question=question,
                options=list(choices),
                gold=choices.index(answer),
                example_id=example_id,
                source_id=dialogue_id,
            ))

    if report is not None:
        report.files_read += 1
        report.examples += len(examples)
    logger.info("Loaded %d DREAM questions from %d dialogues (%s)", len(examples), len(entries), path)
    return examples
