"""Tape-based reverse-mode automatic differentiation over float64 arrays."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ffusion.errors import GradientError

Array = np.ndarray


class Tensor:
    """A dense float64 array plus an optional gradient buffer.

    Data is stored row-major as float64. Construction rejects non-finite
    values; the sanctioned exception is `Tensor.constant`, which exists for
    attention mask biases that carry -inf by design.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor data contains non-finite values")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[Array] = None

    @classmethod
    def constant(cls, data) -> "Tensor":
        """Wrap data without the finiteness check (mask biases hold -inf)."""
        obj = object.__new__(cls)
        obj.data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        obj.requires_grad = False
        obj.grad = None
        return obj

    @classmethod
    def _result(cls, arr: Array, requires_grad: bool) -> "Tensor":
        # Internal fast path for op outputs; arrays are float64 by construction.
        obj = object.__new__(cls)
        obj.data = arr
        obj.requires_grad = requires_grad
        obj.grad = None
        return obj

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"


BackwardFn = Callable[[Array], tuple]


class OpRecord:
    """One recorded operation: inputs, output and its backward rule."""

    __slots__ = ("inputs", "output", "backward_fn")

    def __init__(self, inputs: tuple, output: Tensor, backward_fn: BackwardFn):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Execution-order record of differentiable operations.

    Entering the tape makes it the active recording target. Records are
    appended in execution order, which is a valid topological order of the
    data flow by construction: an operation can only consume tensors that
    already exist, so cycles are impossible.
    """

    _stack: list = []

    def __init__(self):
        self.records: list[OpRecord] = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        popped = Tape._stack.pop()
        if popped is not self:
            raise GradientError("tape context stack corrupted")
        return False

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def active(cls) -> Optional["Tape"]:
        return cls._stack[-1] if cls._stack else None


def record_op(inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn) -> None:
    """Record an op on the active tape if its output participates in gradients."""
    tape = Tape.active()
    if tape is not None and output.requires_grad:
        tape.records.append(OpRecord(tuple(inputs), output, backward_fn))


def backward(tape: Tape, loss: Tensor) -> None:
    """Accumulate d(loss)/d(tensor) into .grad for every tensor on the tape.

    The loss must be scalar. Reverse execution order guarantees that a
    tensor's output gradient is complete before its producing record is
    visited. Gradients from multiple use sites sum. Tensors the loss does
    not depend on keep grad None; readers treat None as exact zero.
    """
    if loss.data.size != 1:
        raise GradientError(f"loss must be a scalar, got shape {loss.data.shape}")
    flowing: dict[int, Array] = {id(loss): np.ones_like(loss.data)}
    by_id: dict[int, Tensor] = {id(loss): loss}
    for rec in reversed(tape.records):
        out_grad = flowing.pop(id(rec.output), None)
        if out_grad is None:
            continue
        if rec.output.requires_grad:
            held = rec.output.grad
            rec.output.grad = out_grad if held is None else held + out_grad
        contribs = rec.backward_fn(out_grad)
        if len(contribs) != len(rec.inputs):
            raise GradientError("backward rule arity mismatch")
        for tensor, contrib in zip(rec.inputs, contribs):
            if contrib is None or not tensor.requires_grad:
                continue
            if contrib.shape != tensor.data.shape:
                raise GradientError(
                    f"gradient shape {contrib.shape} does not match "
                    f"tensor shape {tensor.data.shape}"
                )
            by_id[id(tensor)] = tensor
            held = flowing.get(id(tensor))
            flowing[id(tensor)] = contrib if held is None else held + contrib
    # Whatever is still flowing belongs to leaves: tensors no record produced.
    for tid, grad in flowing.items():
        tensor = by_id.get(tid)
        if tensor is None or not tensor.requires_grad:
            continue
        tensor.grad = grad if tensor.grad is None else tensor.grad + grad
