"""Finite-difference gradient checking."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .tensor import Tape, Tensor

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence


def numerical_gradient(
    loss_fn: Callable[[], Tensor],
    tensor: Tensor,
    h: float = 1e-5,
) -> np.ndarray:
    """Central finite-difference gradient of ``loss_fn()`` w.r.t. ``tensor``.

    ``tensor.data`` is perturbed in place and restored afterwards.
    """
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = loss_fn().item()
        flat[i] = original - h
        minus = loss_fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max absolute difference scaled by the larger gradient magnitude."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)))
    if scale < 1e-12:
        return float(np.max(np.abs(analytic - numeric), initial=0.0))
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    h: float = 1e-5,
) -> float:
    """Compare reverse-mode and finite-difference gradients.

    Parameters
    ----------
    loss_fn : Callable[[], Tensor]
        Builds the scalar loss from the current tensor values. It must be
        deterministic: batch-norm layers should run in eval mode or the
        running statistics must not feed back into the forward value.
    tensors : Sequence[Tensor]
        Tensors to differentiate; their ``requires_grad`` must be set.
    h : float, optional
        Finite-difference step, by default 1e-5.

    Returns
    -------
    float
        Worst relative error across ``tensors``.

    """
    for t in tensors:
        t.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    worst = 0.0
    for t, a in zip(tensors, analytic, strict=True):
        worst = max(worst, relative_error(a, numerical_gradient(loss_fn, t, h)))
    return worst
