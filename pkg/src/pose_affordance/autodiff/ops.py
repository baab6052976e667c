"""Differentiable tensor operations.

Every operation computes its forward value with numpy and registers a
backward closure through :func:`make_result`. Reductions run in numpy's fixed
order, so identical inputs give bitwise-identical values and gradients.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from ..core.error_handling import DimensionError
from .tensor import Tensor, make_result

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .nn import BatchNormState

Operand = Tensor | float | int


def _lift(value: Operand, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value), dtype=like.dtype)


def _pair(a: Operand, b: Operand) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _lift(b, a)
    if isinstance(b, Tensor):
        return _lift(a, b), b
    return Tensor(a), Tensor(b)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes broadcasting added to reach ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# Elementwise arithmetic


def add(a: Operand, b: Operand) -> Tensor:
    """Elementwise sum with broadcasting."""
    x, y = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, x.shape), unbroadcast(g, y.shape)

    return make_result("add", x.data + y.data, (x, y), backward)


def sub(a: Operand, b: Operand) -> Tensor:
    """Elementwise difference with broadcasting."""
    x, y = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, x.shape), unbroadcast(-g, y.shape)

    return make_result("sub", x.data - y.data, (x, y), backward)


def mul(a: Operand, b: Operand) -> Tensor:
    """Elementwise product with broadcasting."""
    x, y = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g * y.data, x.shape), unbroadcast(g * x.data, y.shape)

    return make_result("mul", x.data * y.data, (x, y), backward)


def div(a: Operand, b: Operand) -> Tensor:
    """Elementwise quotient with broadcasting."""
    x, y = _pair(a, b)
    out = x.data / y.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            unbroadcast(g / y.data, x.shape),
            unbroadcast(-g * out / y.data, y.shape),
        )

    return make_result("div", out, (x, y), backward)


def neg(x: Tensor) -> Tensor:
    """Elementwise negation."""
    return make_result("neg", -x.data, (x,), lambda g: (-g,))


def exp(x: Tensor) -> Tensor:
    """Elementwise exponential."""
    out = np.exp(x.data)
    return make_result("exp", out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    """Elementwise natural logarithm."""
    return make_result("log", np.log(x.data), (x,), lambda g: (g / x.data,))


def sqrt(x: Tensor) -> Tensor:
    """Elementwise square root."""
    out = np.sqrt(x.data)
    return make_result("sqrt", out, (x,), lambda g: (g * 0.5 / out,))


def square(x: Tensor) -> Tensor:
    """Elementwise square."""
    return make_result("square", x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def relu(x: Tensor) -> Tensor:
    """Rectified linear unit."""
    mask = x.data > 0
    return make_result("relu", np.where(mask, x.data, 0), (x,), lambda g: (g * mask,))


def clamp(x: Tensor, lo: float | None = None, hi: float | None = None) -> Tensor:
    """Clip values into ``[lo, hi]``; the gradient is zero where clipping happened."""
    out = np.clip(x.data, lo, hi)
    inside = np.ones_like(x.data, dtype=bool)
    if lo is not None:
        inside &= x.data >= lo
    if hi is not None:
        inside &= x.data <= hi
    return make_result("clamp", out, (x,), lambda g: (g * inside,))


# Linear algebra and shape manipulation


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, batched over leading axes.

    Raises
    ------
    DimensionError
        If the inner dimensions differ or either operand has rank < 2.

    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul shape mismatch: {a.shape} @ {b.shape}",
            left=a.shape,
            right=b.shape,
        )

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return make_result("matmul", a.data @ b.data, (a, b), backward)


def sum(x: Tensor, axis: int | tuple[int, ...] | None = None, *, keepdims: bool = False) -> Tensor:  # noqa: A001
    """Sum over ``axis`` (all axes if None)."""
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_result("sum", np.asarray(out), (x,), backward)


def mean(x: Tensor, axis: int | tuple[int, ...] | None = None, *, keepdims: bool = False) -> Tensor:
    """Mean over ``axis`` (all axes if None)."""
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = math.prod(x.shape[a] for a in axes)
    return div(sum(x, axis=axis, keepdims=keepdims), float(count))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Reshape without copying semantics."""
    if len(shape) == 1 and isinstance(shape[0], tuple):
        shape = shape[0]
    out = x.data.reshape(tuple(shape))
    return make_result("reshape", out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    """Permute axes."""
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(
        "transpose",
        np.ascontiguousarray(np.transpose(x.data, axes)),
        (x,),
        lambda g: (np.transpose(g, inverse),),
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along ``axis``."""
    arrays = [t.data for t in tensors]
    out = np.concatenate(arrays, axis=axis)
    bounds = np.cumsum([a.shape[axis] for a in arrays])[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return make_result("concat", out, tuple(tensors), backward)


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    """Take ``x[..., start:stop]``."""
    out = x.data[..., start:stop].copy()

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return make_result("slice", out, (x,), backward)


# Neural-network kernels


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return make_result("softmax", out, (x,), backward)


def _conv_output_size(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Zero-bias 2D cross-correlation on channel-last maps.

    Parameters
    ----------
    x : Tensor
        Input of shape ``H×W×Cin`` or ``B×H×W×Cin``.
    kernel : Tensor
        Kernel of shape ``k×k×Cin×Cout``.
    stride : int, optional
        Step between output positions, by default 1.
    padding : int, optional
        Zero padding on every side, by default 0.

    Returns
    -------
    Tensor
        ``H'×W'×Cout`` (or batched) output.

    Raises
    ------
    DimensionError
        If channels disagree or the kernel does not fit the padded input.

    """
    squeeze = x.ndim == 3
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 4 or kernel.ndim != 4:
        raise DimensionError(
            f"conv2d expects (B)×H×W×C input and k×k×Cin×Cout kernel, got {x.shape} and {kernel.shape}"
        )
    k, k2, cin, cout = kernel.shape
    batch, height, width, channels = xd.shape
    if k != k2 or channels != cin:
        raise DimensionError(f"conv2d kernel {kernel.shape} does not match input {x.shape}")
    if k > height + 2 * padding or k > width + 2 * padding:
        raise DimensionError(
            f"conv2d kernel {k}×{k} larger than padded input {height + 2 * padding}×{width + 2 * padding}"
        )
    oh = _conv_output_size(height, k, stride, padding)
    ow = _conv_output_size(width, k, stride, padding)

    xp = np.pad(xd, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    cols = np.empty((batch, oh, ow, k, k, cin), dtype=xd.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, :, i, j, :] = xp[
                :, i : i + stride * (oh - 1) + 1 : stride, j : j + stride * (ow - 1) + 1 : stride, :
            ]
    cols2 = cols.reshape(batch * oh * ow, k * k * cin)
    kernel2 = kernel.data.reshape(k * k * cin, cout)
    out = (cols2 @ kernel2).reshape(batch, oh, ow, cout)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g4 = g[None] if squeeze else g
        g2 = g4.reshape(batch * oh * ow, cout)
        gk = (cols2.T @ g2).reshape(kernel.shape)
        gcols = (g2 @ kernel2.T).reshape(batch, oh, ow, k, k, cin)
        gxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                gxp[
                    :, i : i + stride * (oh - 1) + 1 : stride, j : j + stride * (ow - 1) + 1 : stride, :
                ] += gcols[:, :, :, i, j, :]
        gx = gxp[:, padding : padding + height, padding : padding + width, :]
        return (gx[0] if squeeze else gx), gk

    return make_result("conv2d", out[0] if squeeze else out, (x, kernel), backward)


def adaptive_bins(size: int, out: int) -> list[tuple[int, int]]:
    """Standard adaptive pooling bins ``[floor(i*size/out), ceil((i+1)*size/out))``."""
    return [((i * size) // out, -((-(i + 1) * size) // out)) for i in range(out)]


def adaptive_avg_pool2d(x: Tensor, out: int) -> Tensor:
    """Adaptive average pooling of channel-last maps to ``out×out``.

    Raises
    ------
    DimensionError
        If ``out`` exceeds the spatial size.

    """
    squeeze = x.ndim == 3
    xd = x.data[None] if squeeze else x.data
    _, height, width, _ = xd.shape
    if out < 1 or out > height or out > width:
        raise DimensionError(f"adaptive pool size {out} does not fit a {height}×{width} map")
    rows = adaptive_bins(height, out)
    cols = adaptive_bins(width, out)
    pooled = np.empty((xd.shape[0], out, out, xd.shape[3]), dtype=xd.dtype)
    for i, (r0, r1) in enumerate(rows):
        for j, (c0, c1) in enumerate(cols):
            pooled[:, i, j, :] = xd[:, r0:r1, c0:c1, :].mean(axis=(1, 2))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        g4 = g[None] if squeeze else g
        gx = np.zeros_like(xd)
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                area = (r1 - r0) * (c1 - c0)
                gx[:, r0:r1, c0:c1, :] += g4[:, i : i + 1, j : j + 1, :] / area
        return (gx[0] if squeeze else gx,)

    return make_result("adaptive_avg_pool2d", pooled[0] if squeeze else pooled, (x,), backward)


def batch_norm(
    x: Tensor,
    weight: Tensor,
    bias: Tensor,
    state: BatchNormState,
    *,
    training: bool,
) -> Tensor:
    """Per-channel batch normalization over every axis but the last.

    In training mode the batch statistics normalize the input and are blended
    into ``state`` with its momentum; in eval mode the running statistics are
    used and must have been initialized.

    Raises
    ------
    StateError
        In eval mode before any statistics exist.
    DimensionError
        If the channel count disagrees with ``state``.

    """
    channels = x.shape[-1]
    if channels != state.running_mean.shape[0]:
        raise DimensionError(
            f"batch_norm over {channels} channels with state for {state.running_mean.shape[0]}"
        )
    axes = tuple(range(x.ndim - 1))

    if not training:
        state.require_initialized()
        inv_std = 1.0 / np.sqrt(state.running_var.astype(x.dtype) + state.eps)
        xhat = (x.data - state.running_mean.astype(x.dtype)) * inv_std
        out = xhat * weight.data + bias.data

        def eval_backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            return (
                g * weight.data * inv_std,
                np.sum(g * xhat, axis=axes),
                np.sum(g, axis=axes),
            )

        return make_result("batch_norm", out, (x, weight, bias), eval_backward)

    count = math.prod(x.shape[:-1])
    batch_mean = x.data.mean(axis=axes)
    centered = x.data - batch_mean
    batch_var = (centered * centered).mean(axis=axes)
    inv_std = 1.0 / np.sqrt(batch_var + state.eps)
    xhat = centered * inv_std
    out = xhat * weight.data + bias.data
    state.update(batch_mean, batch_var, count)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        gxhat = g * weight.data
        sum_g = np.sum(gxhat, axis=axes)
        sum_gx = np.sum(gxhat * xhat, axis=axes)
        gx = inv_std / count * (count * gxhat - sum_g - xhat * sum_gx)
        return gx, np.sum(g * xhat, axis=axes), np.sum(g, axis=axes)

    return make_result("batch_norm", out, (x, weight, bias), backward)


def vector_norm(x: Tensor, eps: float) -> Tensor:
    """``max(‖x‖₂, eps)`` over the last axis, keeping that axis with size 1.

    The gradient is zero where the floor is active, so zero vectors are safe.
    """
    norm = np.sqrt(np.sum(x.data * x.data, axis=-1, keepdims=True))
    active = norm > eps
    out = np.where(active, norm, eps).astype(x.dtype)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        safe = np.where(active, norm, 1.0)
        return (np.where(active, g * x.data / safe, 0.0).astype(x.dtype),)

    return make_result("vector_norm", out, (x,), backward)


__all__ = [
    "adaptive_avg_pool2d",
    "adaptive_bins",
    "add",
    "batch_norm",
    "clamp",
    "concat",
    "conv2d",
    "div",
    "exp",
    "log",
    "matmul",
    "mean",
    "mul",
    "neg",
    "relu",
    "reshape",
    "slice_last",
    "softmax",
    "sqrt",
    "square",
    "sub",
    "sum",
    "transpose",
    "unbroadcast",
    "vector_norm",
]
