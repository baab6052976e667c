"""Base class, inputs and registry for the trainable heads."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from ..attention import ContextEncoder, MCMABlock
from ..autodiff import Module, Tensor, ops
from ..core.error_handling import ConfigurationError, ContractError
from ..core.logging import get_logger

if TYPE_CHECKING:
    from ..core.config import Settings

logger = get_logger(__name__)


@dataclass(frozen=True)
class ViewFeatures:
    """Backbone maps of one view, ``B×H×W×C`` each."""

    image: np.ndarray
    context: np.ndarray | None = None

    def take(self, indices: np.ndarray) -> ViewFeatures:
        """Rows ``indices`` of both maps."""
        return ViewFeatures(
            self.image[indices],
            None if self.context is None else self.context[indices],
        )


@dataclass(frozen=True)
class HeadInputs:
    """Everything a head reads besides its target.

    ``patch_a`` and ``patch_b`` are the square crops around the location
    (sides H and H/2); ``class_onehot`` is the template class, ``B×m``.
    """

    global_view: ViewFeatures
    patch_a: ViewFeatures | None = None
    patch_b: ViewFeatures | None = None
    class_onehot: np.ndarray | None = None

    def __len__(self) -> int:
        """Batch size."""
        return int(self.global_view.image.shape[0])

    def take(self, indices: np.ndarray) -> HeadInputs:
        """Sub-batch ``indices``."""
        return HeadInputs(
            self.global_view.take(indices),
            None if self.patch_a is None else self.patch_a.take(indices),
            None if self.patch_b is None else self.patch_b.take(indices),
            None if self.class_onehot is None else self.class_onehot[indices],
        )


@dataclass(frozen=True)
class HeadDataset:
    """Inputs with per-row targets in the 256-frame (one-hot for the classifier)."""

    inputs: HeadInputs
    targets: np.ndarray

    def __post_init__(self) -> None:
        """Check that inputs and targets have the same number of rows."""
        if len(self.inputs) != self.targets.shape[0]:
            raise ContractError(
                f"{len(self.inputs)} input rows but {self.targets.shape[0]} targets",
            )

    def __len__(self) -> int:
        """Number of rows."""
        return int(self.targets.shape[0])

    def batches(self, batch_size: int, rng: np.random.Generator) -> Iterator[tuple[HeadInputs, np.ndarray]]:
        """Shuffled mini-batches covering every row once."""
        order = rng.permutation(len(self))
        for start in range(0, len(self), batch_size):
            idx = order[start : start + batch_size]
            yield self.inputs.take(idx), self.targets[idx]


@dataclass
class LossTerms:
    """Total objective and its parts; ``kld`` is None for the classifier."""

    total: Tensor
    reconstruction: Tensor
    kld: Tensor | None = None


class GenerativeHead(Module, ABC):
    """A context block plus one predictor.

    Heads register themselves by ``kind``; :meth:`create` builds one from
    settings. Each head owns one attention block shared by all the views it
    reads and one context encoder.
    """

    _registry: ClassVar[dict[str, type[GenerativeHead]]] = {}

    kind: ClassVar[str] = ""
    description: ClassVar[str] = ""
    uses_patches: ClassVar[bool] = True
    needs_class: ClassVar[bool] = False

    def __init__(self, settings: Settings, num_classes: int, rng: np.random.Generator) -> None:
        """Create the attention block and context encoder.

        Parameters
        ----------
        settings : Settings
            Pipeline settings; ``attention``, ``heads`` and ``training`` are read.
        num_classes : int
            Template count ``m``.
        rng : np.random.Generator
            Source of initial weights.

        """
        self.num_classes = num_classes
        self.head_config = settings.heads
        self.attention = MCMABlock(settings.attention, rng)
        self.encoder = ContextEncoder(
            settings.attention,
            rng,
            views=3 if self.uses_patches else 1,
            momentum=settings.training.batchnorm_momentum,
            eps=settings.training.batchnorm_eps,
        )
        logger.debug("Initialized head", head=self.kind, description=self.description)

    def __init_subclass__(cls, **kwargs: Any) -> None:
        """Register head subclasses automatically."""
        super().__init_subclass__(**kwargs)
        if cls.kind:
            GenerativeHead._registry[cls.kind] = cls
            logger.debug("Registered head", head=cls.kind, class_name=cls.__name__)

    @classmethod
    def get_all_heads(cls) -> dict[str, type[GenerativeHead]]:
        """All registered head classes by kind."""
        return dict(cls._registry)

    @classmethod
    def create(
        cls,
        kind: str,
        settings: Settings,
        num_classes: int,
        rng: np.random.Generator,
    ) -> GenerativeHead:
        """Build the head registered as ``kind``.

        Raises
        ------
        ConfigurationError
            If no head has that kind.

        """
        head_cls = cls._registry.get(kind)
        if head_cls is None:
            known = ", ".join(sorted(cls._registry))
            raise ConfigurationError(f"unknown head '{kind}' (known: {known})", head=kind)
        return head_cls(settings, num_classes, rng)

    @classmethod
    @abstractmethod
    def data_dim(cls, num_classes: int) -> int:
        """Width of the predicted vector."""

    def _attend(self, view: ViewFeatures) -> Tensor:
        context = None if view.context is None else Tensor(view.context)
        return self.attention(Tensor(view.image), context)

    def context_vector(self, inputs: HeadInputs) -> Tensor:
        """Attend each view and encode the channel-stacked result, ``B×C·P²``.

        Raises
        ------
        ContractError
            If a patch-reading head gets no patch features.

        """
        views = [inputs.global_view]
        if self.uses_patches:
            if inputs.patch_a is None or inputs.patch_b is None:
                raise ContractError(f"head '{self.kind}' needs both patch views")
            views.extend([inputs.patch_a, inputs.patch_b])
        attended = [self._attend(view) for view in views]
        stacked = attended[0] if len(attended) == 1 else ops.concat(attended, axis=-1)
        return self.encoder(stacked)

    def class_tensor(self, inputs: HeadInputs) -> Tensor | None:
        """The class condition as a tensor, for heads that read it."""
        if not self.needs_class:
            return None
        if inputs.class_onehot is None:
            raise ContractError(f"head '{self.kind}' needs a template class")
        return Tensor(inputs.class_onehot)

    @abstractmethod
    def loss(self, inputs: HeadInputs, targets: np.ndarray, rng: np.random.Generator) -> LossTerms:
        """Training objective on one mini-batch."""

    @abstractmethod
    def generate(self, inputs: HeadInputs, rng: np.random.Generator) -> np.ndarray:
        """Inference output per row, in the 256-frame."""
