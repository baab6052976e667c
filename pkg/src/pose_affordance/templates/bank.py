"""Template bank: medoid poses, class labels and the JSON bank file."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Annotated

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..core.constants import KEYPOINT_NAMES, NUM_KEYPOINTS
from ..core.error_handling import FormatError, InputError, NotFoundError
from ..core.logging import get_logger
from .kmedoids import kmedoids
from .pose import NormalizedPose, Pose, normalize_pose

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

logger = get_logger(__name__)

BANK_FORMAT = "pose-affordance-templates/1"


class TemplateBankFile(BaseModel):
    """On-disk shape of a template bank."""

    format: str = BANK_FORMAT
    count: Annotated[int, Field(ge=1)]
    keypoint_order: list[str] = Field(default_factory=lambda: list(KEYPOINT_NAMES))
    seed: int = 0
    cost: float = 0.0
    medoid_indices: list[int]
    templates: list[list[list[float]]]


@dataclass
class TemplateBank:
    """``m`` normalized template poses; class ``i`` is template ``i``."""

    templates: np.ndarray
    medoid_indices: list[int]
    seed: int = 0
    cost: float = 0.0

    @property
    def m(self) -> int:
        """Number of templates."""
        return int(self.templates.shape[0])

    def onehot(self, index: int) -> np.ndarray:
        """One-hot class vector ``e_index``."""
        vec = np.zeros(self.m)
        vec[index] = 1.0
        return vec

    def template(self, index: int) -> np.ndarray:
        """Normalized ``16×2`` coordinates of template ``index``."""
        return self.templates[index]

    def save(self, path: Path) -> None:
        """Write the bank as JSON."""
        payload = TemplateBankFile(
            count=self.m,
            seed=self.seed,
            cost=self.cost,
            medoid_indices=list(self.medoid_indices),
            templates=self.templates.tolist(),
        )
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(payload.model_dump_json(indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> TemplateBank:
        """Read a bank written by :meth:`save`.

        Raises
        ------
        NotFoundError
            If the file is missing.
        FormatError
            If the content does not describe ``count`` templates of 16×2.

        """
        if not path.is_file():
            raise NotFoundError(f"template bank not found: {path}", path=str(path))
        try:
            payload = TemplateBankFile.model_validate_json(path.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise FormatError(f"invalid template bank {path}: {e.error_count()} errors", path=str(path)) from e
        templates = np.asarray(payload.templates, dtype=np.float64)
        if templates.shape != (payload.count, NUM_KEYPOINTS, 2):
            raise FormatError(
                f"template bank {path} holds shape {templates.shape}, expected ({payload.count}, {NUM_KEYPOINTS}, 2)",
                path=str(path),
            )
        return cls(templates, payload.medoid_indices, payload.seed, payload.cost)


def assign_label(pose: NormalizedPose | np.ndarray, bank: TemplateBank) -> tuple[int, np.ndarray]:
    """Nearest template (ties to the lowest index) and its one-hot vector.

    Raises
    ------
    InputError
        If the bank is empty.

    """
    if bank.m == 0:
        raise InputError("cannot assign a label against an empty template bank")
    coords = pose.coords if isinstance(pose, NormalizedPose) else np.asarray(pose)
    flat = coords.reshape(1, -1)
    distances = np.sqrt(np.sum((bank.templates.reshape(bank.m, -1) - flat) ** 2, axis=1))
    index = int(np.argmin(distances))
    return index, bank.onehot(index)


def build_template_bank(
    poses: Sequence[Pose],
    m: int,
    *,
    seed: int = 0,
    max_iterations: int = 100,
    swap_refine: bool = True,
) -> TemplateBank:
    """Normalize ``poses`` and pick ``m`` medoids as templates."""
    normalized = np.stack([normalize_pose(p).coords for p in poses]) if poses else np.zeros((0, NUM_KEYPOINTS, 2))
    result = kmedoids(
        normalized.reshape(len(poses), -1),
        m,
        max_iterations=max_iterations,
        swap_refine=swap_refine,
    )
    logger.info("Built template bank", templates=m, poses=len(poses), cost=result.cost)
    return TemplateBank(normalized[result.medoids].copy(), result.medoids, seed, result.cost)
