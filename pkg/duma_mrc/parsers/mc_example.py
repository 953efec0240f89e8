"""Multiple-choice items shared by every dataset parser."""

from dataclasses import dataclass, field
from typing import List

from duma_mrc.errors import DataIntegrityError
from duma_mrc.schemas import TASK_OPTION_COUNTS, TaskKind


@dataclass
class McExample:
    """
    One multiple-choice question.

    Attributes:
        task: Dataset family the item came from
        context: Ordered text units (dialogue turns for DREAM, one passage for RACE)
        question: Question text
        options: Candidate answers (3 for DREAM, 4 for RACE)
        gold: 0-based index of the correct option
        example_id: Unique id of the question
        source_id: Id of the dialogue or article the question belongs to
    """
    task: TaskKind
    context: List[str]
    question: str
    options: List[str]
    gold: int
    example_id: str
    source_id: str = ""

    def __post_init__(self):
        expected = TASK_OPTION_COUNTS.get(self.task)
        if expected is not None and len(self.options) != expected:
            raise DataIntegrityError(
                f"{self.task.value} questions carry {expected} options, got {len(self.options)}",
                {"example_id": self.example_id},
            )
        if len(self.options) < 2:
            raise DataIntegrityError("a question needs at least 2 options", {"example_id": self.example_id})
        if not 0 <= self.gold < len(self.options):
            raise DataIntegrityError(
                f"gold index {self.gold} outside {len(self.options)} options",
                {"example_id": self.example_id},
            )

    @property
    def num_options(self) -> int:
        return len(self.options)


@dataclass
class LoadReport:
    """
    Summary of a dataset load.

    Attributes:
        files_read: Number of source files parsed
        examples: Number of questions produced
        warnings: Non-fatal problems encountered
    """
    files_read: int = 0
    examples: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def warning_count(self) -> int:
        return len(self.warnings)
