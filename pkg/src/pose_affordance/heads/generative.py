"""Location, template, scale and deformation heads."""

from __future__ import annotations

from abc import abstractmethod
from typing import TYPE_CHECKING, ClassVar

import numpy as np

from ..autodiff import Tensor, ops
from ..core.constants import FRAME_SIZE, NUM_KEYPOINTS
from .base import GenerativeHead, HeadInputs, LossTerms
from .classifier import TemplateClassifier, cce_loss, predict_class
from .conditions import ClassCondition, GlobalCondition, build_shared_condition
from .cvae import CVAE, kld_loss, reconstruction_loss

if TYPE_CHECKING:
    from ..core.config import Settings

# Model-space targets are 256-frame values divided by this.
TARGET_SCALE = float(FRAME_SIZE)

LOCATION_RANGE = (0.0, float(np.nextafter(FRAME_SIZE, 0)))
SCALE_RANGE = (4.0, float(FRAME_SIZE))
DEFORMATION_RANGE = (-64.0, 64.0)

SCALE_DIM = 2
DEFORMATION_DIM = 2 * NUM_KEYPOINTS


class CVAEHead(GenerativeHead):
    """Shared condition, CVAE and output clamping."""

    def __init__(self, settings: Settings, num_classes: int, rng: np.random.Generator) -> None:
        """Create the condition builder and the CVAE."""
        super().__init__(settings, num_classes, rng)
        context_dim = self.encoder.output_dim
        self.condition: GlobalCondition | ClassCondition
        if self.needs_class:
            self.condition = ClassCondition(context_dim, num_classes, settings.heads, rng)
        else:
            self.condition = GlobalCondition(context_dim, settings.heads, rng)
        self.cvae = CVAE(self.data_dim(num_classes), settings.heads, rng)

    @abstractmethod
    def clamp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column lower and upper output bounds in the 256-frame."""

    def shared_condition(self, inputs: HeadInputs) -> Tensor:
        """Shared condition for a batch."""
        return build_shared_condition(self.condition, self.context_vector(inputs), self.class_tensor(inputs))

    def loss(self, inputs: HeadInputs, targets: np.ndarray, rng: np.random.Generator) -> LossTerms:
        """Reconstruction plus weighted KL divergence on 256-scaled targets."""
        cond = self.shared_condition(inputs)
        target = Tensor(np.asarray(targets) / TARGET_SCALE)
        noise = rng.standard_normal((len(inputs), self.cvae.latent_dim))
        recon, stats = self.cvae(target, cond, noise)
        reconstruction = reconstruction_loss(recon, target, squared=self.head_config.squared_error)
        kld = kld_loss(stats)
        total = ops.add(reconstruction, ops.mul(kld, self.head_config.kl_weight))
        return LossTerms(total, reconstruction, kld)

    def generate(self, inputs: HeadInputs, rng: np.random.Generator) -> np.ndarray:
        """Prior samples decoded, rescaled to the 256-frame and clamped."""
        out = self.cvae.sample(self.shared_condition(inputs), rng).numpy() * TARGET_SCALE
        lo, hi = self.clamp_bounds()
        return np.clip(out, lo, hi)


class LocationHead(CVAEHead):
    """Centre ``o`` from the global context."""

    kind: ClassVar[str] = "location"
    description: ClassVar[str] = "CVAE over the person centre"
    uses_patches: ClassVar[bool] = False
    needs_class: ClassVar[bool] = False

    @classmethod
    def data_dim(cls, num_classes: int) -> int:
        """Two coordinates."""
        return 2

    def clamp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Inside the frame."""
        return np.full(2, LOCATION_RANGE[0]), np.full(2, LOCATION_RANGE[1])


class ScaleHead(CVAEHead):
    """Bounding-box size ``s`` given the template class."""

    kind: ClassVar[str] = "scale"
    description: ClassVar[str] = "CVAE over the person bounding-box size"
    needs_class: ClassVar[bool] = True

    @classmethod
    def data_dim(cls, num_classes: int) -> int:
        """Width and height."""
        return SCALE_DIM

    def clamp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Between 4 pixels and the frame size."""
        return np.full(SCALE_DIM, SCALE_RANGE[0]), np.full(SCALE_DIM, SCALE_RANGE[1])


class DeformationHead(CVAEHead):
    """Per-keypoint offsets ``d`` given the template class."""

    kind: ClassVar[str] = "deformation"
    description: ClassVar[str] = "CVAE over per-keypoint template offsets"
    needs_class: ClassVar[bool] = True

    @classmethod
    def data_dim(cls, num_classes: int) -> int:
        """Two offsets per keypoint."""
        return DEFORMATION_DIM

    def clamp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric offset bound."""
        return np.full(DEFORMATION_DIM, DEFORMATION_RANGE[0]), np.full(DEFORMATION_DIM, DEFORMATION_RANGE[1])


class UnifiedHead(CVAEHead):
    """Scale and deformation from one CVAE; columns are ``(Δx, Δy, dx1, dy1, ...)``."""

    kind: ClassVar[str] = "unified"
    description: ClassVar[str] = "Single CVAE over scale and deformation"
    needs_class: ClassVar[bool] = True

    @classmethod
    def data_dim(cls, num_classes: int) -> int:
        """Scale plus deformation."""
        return SCALE_DIM + DEFORMATION_DIM

    def clamp_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Scale bounds on the first two columns, offset bounds on the rest."""
        lo = np.concatenate([np.full(SCALE_DIM, SCALE_RANGE[0]), np.full(DEFORMATION_DIM, DEFORMATION_RANGE[0])])
        hi = np.concatenate([np.full(SCALE_DIM, SCALE_RANGE[1]), np.full(DEFORMATION_DIM, DEFORMATION_RANGE[1])])
        return lo, hi


class ClassifierHead(GenerativeHead):
    """Template class from the combined global and patch context."""

    kind: ClassVar[str] = "classifier"
    description: ClassVar[str] = "Softmax classifier over pose templates"
    needs_class: ClassVar[bool] = False

    def __init__(self, settings: Settings, num_classes: int, rng: np.random.Generator) -> None:
        """Create the classifier layer."""
        super().__init__(settings, num_classes, rng)
        self.classifier = TemplateClassifier(self.encoder.output_dim, num_classes, rng)

    @classmethod
    def data_dim(cls, num_classes: int) -> int:
        """One probability per template."""
        return num_classes

    def probabilities(self, inputs: HeadInputs) -> Tensor:
        """Class probabilities, ``B×m``."""
        return self.classifier(self.context_vector(inputs))

    def loss(self, inputs: HeadInputs, targets: np.ndarray, rng: np.random.Generator) -> LossTerms:
        """Categorical cross-entropy against one-hot targets."""
        cce = cce_loss(self.probabilities(inputs), targets)
        return LossTerms(cce, cce)

    def generate(self, inputs: HeadInputs, rng: np.random.Generator) -> np.ndarray:
        """Most probable template index per row."""
        return predict_class(self.probabilities(inputs).numpy())
