"""Exception hierarchy shared by every layer of the package.

Each error carries a short code, a human readable message and a context dict,
and knows which process exit code the CLI should use for it.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2
EXIT_GRADCHECK_FAILED = 3


class DumaMrcError(Exception):
    """Base error. Subclasses set ``code`` and ``exit_code``."""

    code = "DUMA"
    exit_code = EXIT_INTERNAL_ERROR

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        self.message = message
        self.context = context or {}
        detail = f"[{self.code}] {message}"
        if self.context:
            detail += f" | context: {self.context}"
        super().__init__(detail)


# --- tensor / graph errors ---------------------------------------------------

class DimensionError(DumaMrcError, ValueError):
    code = "DIMENSION"


class RankError(DumaMrcError, ValueError):
    code = "RANK"


class GraphError(DumaMrcError, RuntimeError):
    code = "GRAPH"


class DegenerateMaskError(DumaMrcError, ValueError):
    """A softmax row or pooling window with no unmasked position."""

    code = "DEGENERATE_MASK"


class NumericError(DumaMrcError, ArithmeticError):
    code = "NUMERIC"


# --- data errors (user facing) -----------------------------------------------

class DatasetParseError(DumaMrcError, ValueError):
    code = "PARSE"
    exit_code = EXIT_USER_ERROR


class DataIntegrityError(DumaMrcError, ValueError):
    code = "DATA_INTEGRITY"
    exit_code = EXIT_USER_ERROR


class EncodingError(DumaMrcError, ValueError):
    code = "ENCODING"
    exit_code = EXIT_USER_ERROR


class VocabError(DumaMrcError, IndexError):
    code = "VOCAB"


class SplitError(DumaMrcError, ValueError):
    code = "SPLIT"


class LabelError(DumaMrcError, IndexError):
    code = "LABEL"


# --- run errors (user facing) ------------------------------------------------

class ConfigurationError(DumaMrcError, ValueError):
    code = "CONFIG"
    exit_code = EXIT_USER_ERROR


class CheckpointError(DumaMrcError, IOError):
    code = "CHECKPOINT"
    exit_code = EXIT_USER_ERROR


class UsageError(DumaMrcError):
    code = "USAGE"
    exit_code = EXIT_USER_ERROR
