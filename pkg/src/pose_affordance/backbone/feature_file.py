"""AFFT1 feature files for injecting precomputed backbone features.

Layout (little-endian)::

    b"AFFT1"  u32 height, u32 width, u32 channels
    record*:  u32 id_len, id (utf-8), u8 modality, height*width*channels float32
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..core.constants import FEATURE_CHANNELS, FEATURE_SIDE, Modality
from ..core.error_handling import FormatError, NotFoundError

if TYPE_CHECKING:
    from collections.abc import Iterable
    from pathlib import Path

MAGIC = b"AFFT1"
DEFAULT_DIMS = (FEATURE_SIDE, FEATURE_SIDE, FEATURE_CHANNELS)


@dataclass(frozen=True)
class FeatureMap:
    """Frozen backbone features of one image or context map."""

    values: np.ndarray
    modality: Modality

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape ``H×W×C``."""
        return tuple(self.values.shape)


def _dims_text(dims: tuple[int, ...]) -> str:
    return "×".join(str(d) for d in dims)


def write_feature_file(
    path: Path,
    records: Iterable[tuple[str, Modality, np.ndarray]],
    dims: tuple[int, int, int] = DEFAULT_DIMS,
) -> int:
    """Write ``(record_id, modality, values)`` triples.

    Returns
    -------
    int
        Number of records written.

    Raises
    ------
    FormatError
        If a record does not have shape ``dims``.

    """
    chunks = [MAGIC, struct.pack("<3I", *dims)]
    count = 0
    for record_id, modality, values in records:
        arr = np.asarray(values)
        if arr.shape != dims:
            raise FormatError(
                f"record '{record_id}' has dims {_dims_text(arr.shape)}, expected {_dims_text(dims)}"
            )
        encoded = record_id.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", int(modality)))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        count += 1
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    return count


class FeatureFile:
    """Read-only index over an AFFT1 file."""

    def __init__(self, path: Path, expected_dims: tuple[int, int, int] = DEFAULT_DIMS) -> None:
        """Parse the whole file.

        Raises
        ------
        NotFoundError
            If the file is missing.
        FormatError
            If the magic is wrong, the data is truncated, or the header
            dimensions differ from ``expected_dims``.

        """
        if not path.is_file():
            raise NotFoundError(f"feature file not found: {path}", path=str(path))
        blob = path.read_bytes()
        if not blob.startswith(MAGIC):
            raise FormatError(f"{path} is not an AFFT1 feature file", path=str(path))
        header_end = len(MAGIC) + 12
        if len(blob) < header_end:
            raise FormatError(f"{path} is truncated in its header", path=str(path))
        dims = struct.unpack("<3I", blob[len(MAGIC) : header_end])
        if dims != expected_dims:
            raise FormatError(
                f"{path} declares dims {_dims_text(dims)}, expected {_dims_text(expected_dims)}",
                path=str(path),
                declared=dims,
                expected=expected_dims,
            )
        self.path = path
        self.dims = expected_dims
        self._records: dict[tuple[str, Modality], np.ndarray] = {}

        size = int(np.prod(dims)) * 4
        offset = header_end
        while offset < len(blob):
            if offset + 4 > len(blob):
                raise FormatError(f"{path} is truncated at byte {offset}", path=str(path))
            (id_len,) = struct.unpack("<I", blob[offset : offset + 4])
            offset += 4
            end = offset + id_len + 1 + size
            if end > len(blob):
                raise FormatError(f"{path} is truncated at byte {offset}", path=str(path))
            record_id = blob[offset : offset + id_len].decode("utf-8")
            offset += id_len
            try:
                modality = Modality(blob[offset])
            except ValueError as e:
                raise FormatError(
                    f"{path}: record '{record_id}' has unknown modality byte {blob[offset]}",
                    path=str(path),
                ) from e
            offset += 1
            values = np.frombuffer(blob[offset : offset + size], dtype="<f4").reshape(dims)
            self._records[(record_id, modality)] = values.astype(np.float32)
            offset += size

    def __len__(self) -> int:
        """Number of records."""
        return len(self._records)

    def __contains__(self, key: tuple[str, Modality]) -> bool:
        """Whether ``(record_id, modality)`` is stored."""
        return key in self._records

    def get(self, record_id: str, modality: Modality) -> FeatureMap:
        """Return the stored map.

        Raises
        ------
        NotFoundError
            If the record is absent.

        """
        values = self._records.get((record_id, modality))
        if values is None:
            raise NotFoundError(
                f"no {modality.name.lower()} features for record '{record_id}' in {self.path}",
                record_id=record_id,
            )
        return FeatureMap(values.copy(), modality)


def load_precomputed(
    path: Path,
    record_id: str,
    modality: Modality,
    expected_dims: tuple[int, int, int] = DEFAULT_DIMS,
) -> FeatureMap:
    """Load one record from an AFFT1 file."""
    return FeatureFile(path, expected_dims).get(record_id, modality)
