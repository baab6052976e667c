"""Modules, layers and parameter initialization."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core.error_handling import ContractError, StateError
from . import ops
from .tensor import Tensor


def parameter(data: np.ndarray, name: str | None = None) -> Tensor:
    """Create a trainable tensor in the default dtype."""
    return Tensor(data, requires_grad=True, name=name)


def he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """He-normal draw: N(0, 2/fan_in)."""
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


@dataclass
class BatchNormState:
    """Running statistics of one batch-norm layer.

    The running variance uses the unbiased batch variance; normalization during
    training uses the biased one.
    """

    channels: int
    momentum: float = 0.1
    eps: float = 1e-5
    running_mean: np.ndarray = field(init=False)
    running_var: np.ndarray = field(init=False)
    num_batches: int = 0

    def __post_init__(self) -> None:
        """Start from zero mean and unit variance."""
        self.running_mean = np.zeros(self.channels, dtype=np.float64)
        self.running_var = np.ones(self.channels, dtype=np.float64)

    @property
    def initialized(self) -> bool:
        """Whether at least one training batch has been seen."""
        return self.num_batches > 0

    def require_initialized(self) -> None:
        """Raise unless running statistics exist."""
        if not self.initialized:
            raise StateError("batch norm running statistics are uninitialized; run a training step first")

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray, count: int) -> None:
        """Blend one batch's statistics into the running ones."""
        unbiased = batch_var * (count / (count - 1)) if count > 1 else batch_var
        m = self.momentum
        self.running_mean = (1.0 - m) * self.running_mean + m * batch_mean.astype(np.float64)
        self.running_var = (1.0 - m) * self.running_var + m * unbiased.astype(np.float64)
        self.num_batches += 1


class Module:
    """Base class for anything holding parameters.

    Parameters are tensors with ``requires_grad`` set, found by walking
    instance attributes in definition order; sub-modules and lists of
    sub-modules are walked recursively.
    """

    training: bool = True

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        """Run ``forward``."""
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        """Compute the module output."""
        raise NotImplementedError

    def _children(self) -> Iterator[tuple[str, Any]]:
        for key, value in vars(self).items():
            if key.startswith("_") or key == "training":
                continue
            if isinstance(value, list | tuple):
                for index, item in enumerate(value):
                    yield f"{key}.{index}", item
            else:
                yield key, value

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        """Yield ``(dotted_name, tensor)`` for every trainable tensor."""
        for key, value in self._children():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")

    def parameters(self) -> list[Tensor]:
        """All trainable tensors."""
        return [p for _, p in self.named_parameters()]

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, Module]]:
        """Yield this module and all sub-modules."""
        yield prefix.rstrip("."), self
        for key, value in self._children():
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}{key}.")

    def named_buffers(self) -> Iterator[tuple[str, np.ndarray]]:
        """Yield non-trainable state (batch-norm statistics)."""
        for name, module in self.named_modules():
            if isinstance(module, BatchNorm):
                base = f"{name}." if name else ""
                yield f"{base}running_mean", module.state.running_mean
                yield f"{base}running_var", module.state.running_var
                yield f"{base}num_batches", np.array([module.state.num_batches], dtype=np.float64)

    def load_buffer(self, name: str, value: np.ndarray) -> None:
        """Restore one buffer produced by :meth:`named_buffers`."""
        module_name, _, field_name = name.rpartition(".")
        modules = dict(self.named_modules())
        module = modules.get(module_name)
        if not isinstance(module, BatchNorm):
            raise ContractError(f"no batch norm layer named '{module_name}'")
        if field_name == "num_batches":
            module.state.num_batches = int(value.reshape(-1)[0])
        elif field_name in {"running_mean", "running_var"}:
            setattr(module.state, field_name, np.asarray(value, dtype=np.float64).copy())
        else:
            raise ContractError(f"unknown buffer '{name}'")

    def zero_grad(self) -> None:
        """Drop gradients of all parameters."""
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode: bool = True) -> Module:
        """Switch this module and its children to training (or eval) mode."""
        for _, module in self.named_modules():
            module.training = mode
        return self

    def eval(self) -> Module:
        """Switch to eval mode."""
        return self.train(False)

    def state_dict(self) -> dict[str, np.ndarray]:
        """Copies of parameter values keyed by dotted name."""
        return {name: p.data.copy() for name, p in self.named_parameters()}


class Linear(Module):
    """Fully connected layer ``y = x W + b`` on row vectors."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        *,
        bias: bool = True,
        zero_init: bool = False,
    ) -> None:
        """Create He-normal weights (or zeros) and a zero bias."""
        self.in_features = in_features
        self.out_features = out_features
        shape = (in_features, out_features)
        weight = np.zeros(shape) if zero_init else he_normal(rng, shape, in_features)
        self.weight = parameter(weight)
        self.bias = parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        """Apply the layer to ``B×in`` (or ``in``) input."""
        if x.shape[-1] != self.in_features:
            raise ContractError(
                f"linear layer expects {self.in_features} features, got {x.shape[-1]}",
                shape=x.shape,
            )
        squeeze = x.ndim == 1
        rows = ops.reshape(x, (1, self.in_features)) if squeeze else x
        out = ops.matmul(rows, self.weight)
        if self.bias is not None:
            out = ops.add(out, self.bias)
        return ops.reshape(out, (self.out_features,)) if squeeze else out


class Conv2d(Module):
    """Zero-bias convolution with a ``k×k×Cin×Cout`` kernel."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        *,
        stride: int = 1,
        padding: int = 0,
    ) -> None:
        """Create He-normal kernel weights."""
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.padding = padding
        fan_in = kernel_size * kernel_size * in_channels
        self.kernel = parameter(
            he_normal(rng, (kernel_size, kernel_size, in_channels, out_channels), fan_in)
        )

    def forward(self, x: Tensor) -> Tensor:
        """Convolve ``(B×)H×W×Cin`` input."""
        return ops.conv2d(x, self.kernel, self.stride, self.padding)


class BatchNorm(Module):
    """Per-channel batch normalization with learnable scale and shift."""

    def __init__(self, channels: int, *, momentum: float = 0.1, eps: float = 1e-5) -> None:
        """Create unit scale, zero shift and fresh running statistics."""
        self.weight = parameter(np.ones(channels))
        self.bias = parameter(np.zeros(channels))
        self.state = BatchNormState(channels, momentum=momentum, eps=eps)

    def forward(self, x: Tensor) -> Tensor:
        """Normalize with batch statistics in training mode, running ones in eval."""
        return ops.batch_norm(x, self.weight, self.bias, self.state, training=self.training)

