"""Minimal dense tensor library with reverse-mode automatic differentiation."""

from .tensor import Tape, Tensor, active_tape, backward, get_default_dtype, precision
from .gradcheck import GradCheckResult, check_gradients, grad_check, relative_error
from . import ops

__all__ = [
    "Tape",
    "Tensor",
    "active_tape",
    "backward",
    "get_default_dtype",
    "precision",
    "GradCheckResult",
    "check_gradients",
    "grad_check",
    "relative_error",
    "ops",
]
