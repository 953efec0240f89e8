"""Dense tensors and the append-only tape used for reverse-mode differentiation.

A ``Tensor`` wraps a numpy buffer. Operations executed while a ``Tape`` is
active record themselves on it when at least one input is tracked (a
parameter with ``requires_grad`` or an output recorded earlier on the same
tape). ``backward`` walks the tape once, newest record first.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from duma_mrc.errors import GraphError, RankError

_DEFAULT_DTYPE: List[type] = [np.float32]
_ACTIVE_TAPES: List["Tape"] = []


def get_default_dtype():
    return _DEFAULT_DTYPE[-1]


@contextmanager
def precision(dtype) -> Iterator[None]:
    """Temporarily change the dtype used for tensors built from Python data."""
    _DEFAULT_DTYPE.append(dtype)
    try:
        yield
    finally:
        _DEFAULT_DTYPE.pop()


def active_tape() -> Optional["Tape"]:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


class Tensor:
    """Row-major numeric array with an optional gradient buffer and graph handle."""

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(get_default_dtype())
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id: Optional[int] = None
        self._tape: Optional["Tape"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def astype(self, dtype) -> None:
        """Cast the buffer in place (used to move parameters between 32 and 64 bit)."""
        self.data = np.ascontiguousarray(self.data, dtype=dtype)
        if self.grad is not None:
            self.grad = self.grad.astype(dtype)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    # Operator sugar; the real work lives in autograd.ops.
    def __add__(self, other):
        from duma_mrc.autograd import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from duma_mrc.autograd import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from duma_mrc.autograd import ops
        return ops.sub(self, other)

    def __mul__(self, other):
        from duma_mrc.autograd import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from duma_mrc.autograd import ops
        return ops.mul(other, self)

    def __matmul__(self, other):
        from duma_mrc.autograd import ops
        return ops.matmul(self, other)

    def __neg__(self):
        from duma_mrc.autograd import ops
        return ops.scale(self, -1.0)


BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeRecord:
    input_ids: Tuple[Optional[int], ...]
    output_id: int
    backward: BackwardRule
    op: str


class Tape:
    """Ordered record of operations for one forward pass.

    Use as a context manager; records stay available after exit so that
    ``backward`` can run, and ``clear`` releases them.
    """

    def __init__(self):
        self.records: List[TapeRecord] = []
        self._leaves: List[Tensor] = []
        self._outputs: List[Tensor] = []
        self._next_id = 0

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if _ACTIVE_TAPES and _ACTIVE_TAPES[-1] is self:
            _ACTIVE_TAPES.pop()
        else:
            _ACTIVE_TAPES.remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def _new_id(self) -> int:
        node_id = self._next_id
        self._next_id += 1
        return node_id

    def track(self, tensor: Tensor) -> Optional[int]:
        """Return the tensor's node id on this tape, registering parameters as leaves."""
        if tensor._tape is self and tensor.node_id is not None:
            return tensor.node_id
        if tensor.requires_grad:
            tensor.node_id = self._new_id()
            tensor._tape = self
            self._leaves.append(tensor)
            return tensor.node_id
        return None

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward: BackwardRule, op: str) -> Tensor:
        input_ids = tuple(self.track(t) for t in inputs)
        if all(node_id is None for node_id in input_ids):
            return output
        output.node_id = self._new_id()
        output._tape = self
        self._outputs.append(output)
        self.records.append(TapeRecord(input_ids, output.node_id, backward, op))
        return output

    @property
    def leaves(self) -> List[Tensor]:
        return list(self._leaves)

    def clear(self) -> None:
        for tensor in self._leaves + self._outputs:
            if tensor._tape is self:
                tensor.node_id = None
                tensor._tape = None
        self.records.clear()
        self._leaves.clear()
        self._outputs.clear()


def backward(tape: Tape, loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """Populate ``grad`` on every leaf reached from ``loss``.

    Gradients add into existing ``grad`` buffers; callers zero them between
    steps. Returns the gradient contributed by this pass for each leaf.
    """
    if loss.size != 1:
        raise RankError(f"loss must be a scalar, got shape {loss.shape}")
    if loss.node_id is None or loss._tape is not tape:
        raise GraphError("loss was not produced on this tape", {"records": len(tape)})

    grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
    for record in reversed(tape.records):
        upstream = grads.pop(record.output_id, None)
        if upstream is None:
            continue
        input_grads = record.backward(upstream)
        for node_id, grad in zip(record.input_ids, input_grads):
            if node_id is None or grad is None:
                continue
            if node_id in grads:
                grads[node_id] = grads[node_id] + grad
            else:
                grads[node_id] = grad

    contributed: Dict[Tensor, np.ndarray] = {}
    for leaf in tape.leaves:
        grad = grads.get(leaf.node_id)
        if grad is None:
            continue
        grad = np.asarray(grad, dtype=leaf.dtype).reshape(leaf.shape)
        leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad
        contributed[leaf] = grad
    return contributed
