"""Dense tensors and the operation tape used for reverse-mode differentiation."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ..core.error_handling import ContractError, NonFiniteError

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike, DTypeLike

    BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_default_dtype: ContextVar[np.dtype[Any]] = ContextVar(
    "default_dtype", default=np.dtype(np.float64)
)
_debug_checks: ContextVar[bool] = ContextVar("debug_checks", default=False)
_active_tape: ContextVar[Tape | None] = ContextVar("active_tape", default=None)


def get_default_dtype() -> np.dtype[Any]:
    """Floating dtype used for new tensors in the current context."""
    return _default_dtype.get()


@contextmanager
def precision(dtype: DTypeLike) -> Iterator[None]:
    """Temporarily switch the default tensor dtype.

    Parameters
    ----------
    dtype : DTypeLike
        ``float32`` or ``float64``.

    """
    token = _default_dtype.set(np.dtype(dtype))
    try:
        yield
    finally:
        _default_dtype.reset(token)


def debug_checks_enabled() -> bool:
    """Whether every operation result is checked for NaN/Inf."""
    return _debug_checks.get()


@contextmanager
def debug_checks(enabled: bool = True) -> Iterator[None]:
    """Enable or disable non-finite checks on operation outputs."""
    token = _debug_checks.set(enabled)
    try:
        yield
    finally:
        _debug_checks.reset(token)


class Tensor:
    """A dense real-valued array that may take part in differentiation.

    Tensors are value-semantic: operations never mutate their inputs. Only the
    optimizer writes parameter data in place.
    """

    __slots__ = ("data", "grad", "name", "requires_grad")

    def __init__(
        self,
        data: ArrayLike,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: DTypeLike | None = None,
    ) -> None:
        """Wrap ``data`` as a contiguous array of the default dtype.

        Parameters
        ----------
        data : ArrayLike
            Values; copied if the dtype or layout differ.
        requires_grad : bool, optional
            Whether gradients are tracked for this tensor, by default False.
        name : str | None, optional
            Name used in checkpoints and error messages.
        dtype : DTypeLike | None, optional
            Override the context default dtype.

        """
        self.data: np.ndarray = np.ascontiguousarray(
            data, dtype=np.dtype(dtype) if dtype is not None else get_default_dtype()
        )
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape."""
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        """Array rank."""
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        """Element dtype."""
        return self.data.dtype

    def item(self) -> float:
        """Return the value of a single-element tensor."""
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Return a copy of the values."""
        return self.data.copy()

    def detach(self) -> Tensor:
        """Return a tensor sharing values but cut off from the tape."""
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        """Add ``grad`` into the gradient buffer."""
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def __repr__(self) -> str:
        """Short description with shape and flags."""
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the differentiable implementations live in ``ops``.

    def __add__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: float) -> Tensor:
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: float) -> Tensor:
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.div(self, other)

    def __neg__(self) -> Tensor:
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from . import ops

        return ops.matmul(self, other)

    def sum(self, axis: int | tuple[int, ...] | None = None, *, keepdims: bool = False) -> Tensor:
        """Differentiable sum."""
        from . import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, *, keepdims: bool = False) -> Tensor:
        """Differentiable mean."""
        from . import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        """Differentiable reshape."""
        from . import ops

        return ops.reshape(self, shape)


def as_tensor(value: Tensor | ArrayLike) -> Tensor:
    """Return ``value`` unchanged if it is a tensor, else wrap it as a constant."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass(slots=True)
class TapeNode:
    """One recorded operation."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Ordered record of differentiable operations for one training step.

    Use as a context manager: operations executed inside the ``with`` block
    are recorded in execution order, which is a valid topological order.
    A tape belongs to the thread and context that entered it.
    """

    def __init__(self) -> None:
        """Create an empty tape."""
        self.nodes: list[TapeNode] = []
        self._token: Any = None

    def __enter__(self) -> Tape:
        """Make this the active tape."""
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *args: Any) -> None:
        """Restore the previously active tape."""
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        """Number of recorded operations."""
        return len(self.nodes)

    def record(
        self,
        op: str,
        inputs: tuple[Tensor, ...],
        output: Tensor,
        backward: BackwardFn,
    ) -> None:
        """Append an operation."""
        self.nodes.append(TapeNode(op, inputs, output, backward))

    def backward(self, loss: Tensor) -> None:
        """Run reverse-mode differentiation from a scalar ``loss``.

        Parameters
        ----------
        loss : Tensor
            Single-element tensor produced by operations on this tape.

        Raises
        ------
        ContractError
            If ``loss`` is not a scalar.

        """
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        tensors: dict[int, Tensor] = {id(loss): loss}

        for node in reversed(self.nodes):
            g_out = grads.pop(id(node.output), None)
            if g_out is None:
                continue
            if node.output.requires_grad:
                node.output.accumulate_grad(g_out)
            input_grads = node.backward(g_out)
            for tensor, g_in in zip(node.inputs, input_grads, strict=True):
                if g_in is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + g_in
                else:
                    grads[key] = np.asarray(g_in, dtype=tensor.data.dtype)
                    tensors[key] = tensor

        # Whatever is left belongs to leaves (parameters and inputs).
        for key, g in grads.items():
            tensors[key].accumulate_grad(g)


def active_tape() -> Tape | None:
    """The tape operations are currently recorded on, if any."""
    return _active_tape.get()


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Populate ``.grad`` of every tracked tensor reachable from ``loss``.

    Parameters
    ----------
    loss : Tensor
        Scalar loss.
    tape : Tape | None, optional
        Tape that recorded the forward pass; the active tape if None.

    Raises
    ------
    ContractError
        If the loss is not scalar or no tape is available.

    """
    tape = tape or active_tape()
    if tape is None:
        raise ContractError("backward called without a tape")
    tape.backward(loss)


def make_result(
    op: str,
    data: np.ndarray,
    inputs: tuple[Tensor, ...],
    backward_fn: BackwardFn,
) -> Tensor:
    """Wrap an operation result and record it if any input is tracked.

    Parameters
    ----------
    op : str
        Operation name for the tape and debug errors.
    data : np.ndarray
        Forward value.
    inputs : tuple[Tensor, ...]
        Operands in the order ``backward_fn`` returns gradients for.
    backward_fn : BackwardFn
        Maps the output gradient to one gradient (or None) per input.

    Returns
    -------
    Tensor
        The result tensor.

    Raises
    ------
    NonFiniteError
        If debug checks are enabled and the result has NaN or Inf.

    """
    if debug_checks_enabled() and not np.all(np.isfinite(data)):
        raise NonFiniteError(op, shape=tuple(data.shape))
    tape = active_tape()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=tracked, dtype=data.dtype)
    if tracked and tape is not None:
        tape.record(op, inputs, out, backward_fn)
    return out
