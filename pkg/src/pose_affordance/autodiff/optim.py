"""Adam optimizer."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..core.error_handling import DimensionError
from .tensor import Tensor


@dataclass
class AdamState:
    """Hyperparameters, moment buffers and step counter of an Adam optimizer."""

    lr: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> None:
    """Apply one bias-corrected Adam update to every parameter in place.

    A parameter without a gradient is treated as having a zero gradient.

    Parameters
    ----------
    params : Mapping[str, Tensor]
        Parameters keyed by checkpoint name.
    state : AdamState
        Optimizer state; ``step`` advances by exactly one.

    Raises
    ------
    DimensionError
        If a gradient or stored moment disagrees with its parameter's shape.

    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t

    for name, param in params.items():
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if grad.shape != param.data.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match parameter '{name}' {param.data.shape}"
            )
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        elif m.shape != param.data.shape or v.shape != param.data.shape:
            raise DimensionError(f"Adam moments for '{name}' have shape {m.shape}, parameter {param.data.shape}")

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * (grad * grad)
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(param.data.dtype)
        state.m[name] = m
        state.v[name] = v


class Adam:
    """Adam over a fixed, named parameter set."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        *,
        lr: float = 1e-3,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        """Bind the parameters and create empty moment buffers."""
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        """Update every parameter from its current gradient."""
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        """Drop all parameter gradients."""
        for p in self.params.values():
            p.zero_grad()
