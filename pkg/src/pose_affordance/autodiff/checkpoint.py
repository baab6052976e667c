"""AFLB1 checkpoint files.

Layout (little-endian)::

    b"AFLB1"  u32 entry_count
    entry*:   u32 name_len, name (utf-8), u32 rank, u64 dims[rank],
              u8 dtype (0=float32, 1=float64), raw values

Entry names carry a prefix: ``param/`` for parameters, ``buffer/`` for
batch-norm statistics, ``adam/m/`` and ``adam/v/`` for moments and
``adam/step`` for the step counter. ``adam/hyper`` stores the learning rate,
betas and epsilon; a restoring optimizer must use the same values.
"""

from __future__ import annotations

import math
import struct
from typing import TYPE_CHECKING

import numpy as np

from ..core.error_handling import ConfigurationError, FormatError, NotFoundError
from ..core.logging import get_logger

if TYPE_CHECKING:
    from collections.abc import Mapping
    from pathlib import Path

    from .nn import Module
    from .optim import Adam, AdamState

logger = get_logger(__name__)

MAGIC = b"AFLB1"
_DTYPES: dict[int, np.dtype] = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def encode_entries(entries: Mapping[str, np.ndarray]) -> bytes:
    """Serialize named arrays in insertion order."""
    chunks = [MAGIC, struct.pack("<I", len(entries))]
    for name, array in entries.items():
        array = np.asarray(array)
        code = _DTYPE_CODES.get(array.dtype, 1)
        raw = np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes()
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        chunks.append(struct.pack("<B", code))
        chunks.append(raw)
    return b"".join(chunks)


def decode_entries(blob: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    """Parse an AFLB1 payload.

    Raises
    ------
    FormatError
        On a wrong magic string, unknown dtype code or truncated data.

    """
    if not blob.startswith(MAGIC):
        raise FormatError(f"{source} is not an AFLB1 checkpoint", path=source)
    offset = len(MAGIC)

    def take(size: int) -> bytes:
        nonlocal offset
        if offset + size > len(blob):
            raise FormatError(f"{source} is truncated at byte {offset}", path=source)
        chunk = blob[offset : offset + size]
        offset += size
        return chunk

    (count,) = struct.unpack("<I", take(4))
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        (code,) = struct.unpack("<B", take(1))
        if code not in _DTYPES:
            raise FormatError(f"{source}: entry '{name}' has unknown dtype code {code}", path=source)
        dtype = _DTYPES[code]
        raw = take(math.prod(dims) * dtype.itemsize)
        entries[name] = np.frombuffer(raw, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))
    if offset != len(blob):
        raise FormatError(f"{source} has {len(blob) - offset} trailing bytes", path=source)
    return entries


def write_entries(path: Path, entries: Mapping[str, np.ndarray]) -> None:
    """Write named arrays to ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_entries(entries))


def read_entries(path: Path) -> dict[str, np.ndarray]:
    """Read named arrays from ``path``.

    Raises
    ------
    NotFoundError
        If the file does not exist.

    """
    if not path.is_file():
        raise NotFoundError(f"checkpoint not found: {path}", path=str(path))
    return decode_entries(path.read_bytes(), str(path))


def collect_entries(module: Module, optimizer: Adam | None = None) -> dict[str, np.ndarray]:
    """Gather parameters, buffers and optimizer state of ``module``."""
    entries: dict[str, np.ndarray] = {}
    for name, param in module.named_parameters():
        entries[f"param/{name}"] = param.data
    for name, buffer in module.named_buffers():
        entries[f"buffer/{name}"] = buffer
    if optimizer is not None:
        state = optimizer.state
        entries["adam/step"] = np.array(state.step, dtype=np.float64)
        entries["adam/hyper"] = np.array([state.lr, state.beta1, state.beta2, state.eps])
        for name in optimizer.params:
            if name in state.m:
                entries[f"adam/m/{name}"] = state.m[name]
                entries[f"adam/v/{name}"] = state.v[name]
    return entries


def save_checkpoint(path: Path, module: Module, optimizer: Adam | None = None) -> None:
    """Write ``module`` (and optionally its optimizer) as an AFLB1 file."""
    write_entries(path, collect_entries(module, optimizer))
    logger.debug("Wrote checkpoint", path=str(path))


def restore_entries(
    entries: Mapping[str, np.ndarray],
    module: Module,
    optimizer: Adam | None = None,
    *,
    source: str = "<entries>",
) -> None:
    """Load parameter, buffer and optimizer entries into live objects.

    Raises
    ------
    FormatError
        If a parameter is missing or has a different shape.
    ConfigurationError
        If the stored Adam hyperparameters differ from ``optimizer``'s.

    """
    for name, param in module.named_parameters():
        key = f"param/{name}"
        if key not in entries:
            raise FormatError(f"{source} lacks parameter '{name}'", path=source)
        value = entries[key]
        if value.shape != param.data.shape:
            raise FormatError(
                f"{source}: parameter '{name}' has shape {value.shape}, expected {param.data.shape}",
                path=source,
            )
        param.data = np.ascontiguousarray(value, dtype=param.data.dtype)
    for key, value in entries.items():
        if key.startswith("buffer/"):
            module.load_buffer(key.removeprefix("buffer/"), value)
    if optimizer is not None and "adam/step" in entries:
        state = optimizer.state
        if "adam/hyper" in entries:
            _check_hyperparameters(entries["adam/hyper"], state, source)
        state.step = int(entries["adam/step"])
        state.m = {k.removeprefix("adam/m/"): v.copy() for k, v in entries.items() if k.startswith("adam/m/")}
        state.v = {k.removeprefix("adam/v/"): v.copy() for k, v in entries.items() if k.startswith("adam/v/")}


def _check_hyperparameters(saved: np.ndarray, state: AdamState, source: str) -> None:
    names = ("lr", "beta1", "beta2", "eps")
    current = np.array([getattr(state, n) for n in names], dtype=np.float64)
    if saved.shape != current.shape:
        raise FormatError(f"{source}: adam/hyper has shape {saved.shape}, expected {current.shape}", path=source)
    differing = {
        n: float(s)
        for n, s, c in zip(names, saved, current, strict=True)
        if not np.isclose(s, c, rtol=1e-12, atol=0.0)
    }
    if differing:
        raise ConfigurationError(
            f"{source} was trained with different Adam settings: {differing}",
            path=source,
            **{f"current_{n}": float(getattr(state, n)) for n in differing},
        )


def load_checkpoint(path: Path, module: Module, optimizer: Adam | None = None) -> None:
    """Restore ``module`` (and optionally its optimizer) from an AFLB1 file."""
    restore_entries(read_entries(path), module, optimizer, source=str(path))
    logger.debug("Loaded checkpoint", path=str(path))
