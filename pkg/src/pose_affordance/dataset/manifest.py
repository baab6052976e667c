"""Line-delimited dataset manifest."""

from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING, Annotated, Literal

from pydantic import BaseModel, Field, ValidationError

from ..core.error_handling import FormatError, NotFoundError

if TYPE_CHECKING:
    from pathlib import Path


class PoseKind(str, Enum):
    """Posture label the generator attaches to each pose."""

    STANDING = "standing"
    SITTING = "sitting"
    UNKNOWN = "unknown"


class ManifestRecord(BaseModel):
    """One scene; file paths are relative to the dataset root."""

    id: str
    scene: str
    semantic: str
    poses: str
    raw: str | None = None
    depth: str | None = None
    mask: str | None = None
    height: Annotated[int, Field(ge=1)]
    width: Annotated[int, Field(ge=1)]
    pose_kinds: list[PoseKind] = Field(default_factory=list)
    split: Literal["train", "test"] = "train"


def write_manifest(path: Path, records: list[ManifestRecord]) -> None:
    """One JSON object per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json(exclude_none=True) + "\n")


def read_manifest(path: Path) -> list[ManifestRecord]:
    """Parse every non-blank line.

    Raises
    ------
    NotFoundError
        If the manifest is missing.
    FormatError
        If a line is not a valid record.

    """
    if not path.is_file():
        raise NotFoundError(f"manifest not found: {path}", path=str(path))
    records = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(ManifestRecord.model_validate_json(line))
        except ValidationError as e:
            raise FormatError(f"{path}:{number}: invalid manifest record ({e.error_count()} errors)", path=str(path)) from e
    return records
