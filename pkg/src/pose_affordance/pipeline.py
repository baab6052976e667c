"""Run directories, feature caching, training and the four-stage sampler.

A run directory holds everything ``sample``, ``eval`` and ``distribution``
need to rebuild the trained pipeline::

    settings.json            exact configuration of the run
    templates.json           template bank
    checkpoints/<head>.aflb  one checkpoint per active head
    logs/training.csv        per-epoch losses of every head
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from pydantic import ValidationError

from .autodiff import debug_checks, load_checkpoint, precision
from .backbone import Backbone, build_backbone, resize_to_input
from .core.config import Settings
from .core.config_models import AttentionMode, ContextModality, LocationSource
from .core.constants import FRAME_SIZE, Modality, SemanticCategory
from .core.error_handling import FormatError, InputError, NotFoundError, StateError
from .core.logging import get_logger
from .core.telemetry import samples_generated_counter
from .core.tracing import get_tracer
from .dataset import (
    PatchKind,
    PatchSpec,
    SceneRecord,
    all_poses,
    derive_targets,
    extract_patch,
    load_dataset,
    load_label_mapping,
    to_frame,
)
from .dataset.io import read_json, write_json
from .evaluation import EvalReport, evaluate_pairs
from .heads import (
    GenerativeHead,
    HeadDataset,
    HeadInputs,
    ViewFeatures,
    train_head,
)
from .heads.training import EpochLoss
from .templates import Pose, TemplateBank, build_template_bank, normalize_pose
from .transform import TransformParams, apply_transform

if TYPE_CHECKING:
    from pathlib import Path

logger = get_logger(__name__)
tracer = get_tracer(__name__)

HEAD_ORDER = ("location", "classifier", "scale", "deformation", "unified")
HEAD_ALIASES = {"deform": "deformation"}


def canonical_head(name: str) -> str:
    """Resolve command-line head aliases (``deform``)."""
    return HEAD_ALIASES.get(name, name)


@dataclass(frozen=True)
class RunLayout:
    """File locations inside a run directory."""

    root: Path

    @property
    def settings_path(self) -> Path:
        """Configuration the run was trained with."""
        return self.root / "settings.json"

    @property
    def templates_path(self) -> Path:
        """Template bank of the run."""
        return self.root / "templates.json"

    @property
    def training_log(self) -> Path:
        """Per-epoch loss CSV."""
        return self.root / "logs" / "training.csv"

    def checkpoint(self, head: str) -> Path:
        """Checkpoint file of ``head``."""
        return self.root / "checkpoints" / f"{head}.aflb"

    def write_settings(self, settings: Settings) -> None:
        """Store ``settings`` as JSON."""
        write_json(self.settings_path, settings.model_dump(mode="json"))

    def read_settings(self) -> Settings:
        """Rebuild the settings of the run; environment variables are not consulted.

        Raises
        ------
        StateError
            If the run has no ``settings.json``.
        FormatError
            If the stored settings no longer validate.

        """
        if not self.settings_path.is_file():
            raise StateError(f"{self.root} is not a trained run: {self.settings_path.name} missing", path=str(self.root))
        try:
            return Settings.model_validate(read_json(self.settings_path))
        except ValidationError as e:
            raise FormatError(
                f"invalid settings in {self.settings_path}: {e.error_count()} errors",
                path=str(self.settings_path),
            ) from e


@contextmanager
def numeric_context(settings: Settings) -> Iterator[None]:
    """Tensor precision and non-finite checks from ``settings.tensor``."""
    with precision(settings.tensor.precision.value), debug_checks(settings.tensor.debug_checks):
        yield


def _context_modality(modality: ContextModality) -> Modality:
    return Modality.DEPTH if modality is ContextModality.DEPTH else Modality.SEMANTIC


def stack_views(views: Sequence[ViewFeatures]) -> ViewFeatures:
    """Concatenate views along the batch axis."""
    image = np.concatenate([v.image for v in views], axis=0)
    if any(v.context is None for v in views):
        return ViewFeatures(image)
    return ViewFeatures(image, np.concatenate([v.context for v in views if v.context is not None], axis=0))


def concat_inputs(parts: Sequence[HeadInputs]) -> HeadInputs:
    """Concatenate head inputs along the batch axis."""
    patch_a = [p.patch_a for p in parts if p.patch_a is not None]
    patch_b = [p.patch_b for p in parts if p.patch_b is not None]
    onehots = [p.class_onehot for p in parts if p.class_onehot is not None]
    return HeadInputs(
        stack_views([p.global_view for p in parts]),
        stack_views(patch_a) if len(patch_a) == len(parts) else None,
        stack_views(patch_b) if len(patch_b) == len(parts) else None,
        np.concatenate(onehots, axis=0) if len(onehots) == len(parts) else None,
    )


class FeatureStore:
    """Backbone features of scenes and patches, cached per scene.

    Global views are keyed by record id; patch features by
    ``<id>/<key>/<a|b>``, which is also the lookup key in a precomputed
    feature file.
    """

    def __init__(
        self,
        backbone: Backbone,
        settings: Settings,
        mapping: dict[int, SemanticCategory] | None = None,
    ) -> None:
        """Bind the backbone and the context-map settings."""
        self.backbone = backbone
        self.modality = settings.dataset.modality
        self.label_mode = settings.dataset.label_mode
        self.mapping = mapping
        self.with_context = settings.attention.mode is not AttentionMode.NONE
        self._rasters: dict[str, tuple[np.ndarray, np.ndarray | None]] = {}
        self._global: dict[str, ViewFeatures] = {}

    @classmethod
    def from_settings(cls, settings: Settings) -> FeatureStore:
        """Backbone and label mapping named by ``settings``."""
        return cls(build_backbone(settings), settings, load_label_mapping(settings.dataset.label_mapping_file))

    def rasters(self, record: SceneRecord) -> tuple[np.ndarray, np.ndarray | None]:
        """Scene image and context map at scene resolution."""
        cached = self._rasters.get(record.id)
        if cached is None:
            context = record.load_context(self.modality, self.label_mode, self.mapping) if self.with_context else None
            cached = (record.load_image(), context)
            self._rasters[record.id] = cached
        return cached

    def _view(self, key: str, image: np.ndarray, context: np.ndarray | None) -> ViewFeatures:
        image_features = self.backbone.features(key, Modality.IMAGE, image).values
        if context is None:
            return ViewFeatures(image_features[None])
        context_features = self.backbone.features(key, _context_modality(self.modality), context).values
        return ViewFeatures(image_features[None], context_features[None])

    def global_view(self, record: SceneRecord) -> ViewFeatures:
        """Features of the whole scene, batch of one."""
        view = self._global.get(record.id)
        if view is None:
            image, context = self.rasters(record)
            view = self._view(
                record.id,
                resize_to_input(image),
                None if context is None else resize_to_input(context),
            )
            self._global[record.id] = view
        return view

    def patch_views(self, record: SceneRecord, center: np.ndarray, key: str) -> tuple[ViewFeatures, ViewFeatures]:
        """Features of patches A and B around a 256-frame ``center``."""
        image, context = self.rasters(record)
        views = []
        for kind in (PatchKind.A, PatchKind.B):
            spec = PatchSpec.around(center, record.scene_size, kind)
            views.append(
                self._view(
                    f"{record.id}/{key}/{kind.value}",
                    extract_patch(image, spec),
                    None if context is None else extract_patch(context, spec),
                )
            )
        return views[0], views[1]


def _center_key(center: np.ndarray) -> str:
    return f"{float(center[0]):.3f},{float(center[1]):.3f}"


def pose_inputs(
    store: FeatureStore,
    record: SceneRecord,
    centers: np.ndarray,
    *,
    keys: Sequence[str] | None = None,
    class_onehot: np.ndarray | None = None,
) -> HeadInputs:
    """Inputs for one row per 256-frame centre in ``record``."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    keys = [_center_key(c) for c in centers] if keys is None else list(keys)
    glob = store.global_view(record)
    count = len(centers)
    global_view = ViewFeatures(
        np.repeat(glob.image, count, axis=0),
        None if glob.context is None else np.repeat(glob.context, count, axis=0),
    )
    patches = [store.patch_views(record, c, k) for c, k in zip(centers, keys, strict=True)]
    return HeadInputs(
        global_view,
        stack_views([a for a, _ in patches]),
        stack_views([b for _, b in patches]),
        class_onehot,
    )


def build_head_datasets(
    records: Sequence[SceneRecord],
    store: FeatureStore,
    bank: TemplateBank,
    kinds: Sequence[str],
) -> dict[str, HeadDataset]:
    """Training rows of every head in ``kinds``, one row per annotated pose.

    Records must carry derived targets.

    Raises
    ------
    InputError
        If no record has a pose.

    """
    parts: list[HeadInputs] = []
    centers, classes, scales, deformations = [], [], [], []
    for record in records:
        if not record.poses:
            continue
        if len(record.targets) != len(record.poses):
            raise InputError(f"record {record.id} has no derived targets", record=record.id)
        record_centers = np.stack([t.params.center for t in record.targets])
        onehot = np.stack([bank.onehot(t.class_index) for t in record.targets])
        keys = [f"p{i}" for i in range(len(record.targets))]
        parts.append(pose_inputs(store, record, record_centers, keys=keys, class_onehot=onehot))
        centers.append(record_centers)
        classes.append(onehot)
        scales.extend(t.params.scale for t in record.targets)
        deformations.extend(t.params.deformation.reshape(-1) for t in record.targets)
    if not parts:
        raise InputError("dataset has no annotated poses to train on")

    inputs = concat_inputs(parts)
    scale_targets = np.stack(scales)
    deformation_targets = np.stack(deformations)
    targets = {
        "location": np.concatenate(centers, axis=0),
        "classifier": np.concatenate(classes, axis=0),
        "scale": scale_targets,
        "deformation": deformation_targets,
        "unified": np.concatenate([scale_targets, deformation_targets], axis=1),
    }
    logger.info("Built training rows", rows=len(inputs), heads=list(kinds))
    return {kind: HeadDataset(inputs, targets[kind]) for kind in kinds}


def build_head(kind: str, settings: Settings, num_classes: int) -> GenerativeHead:
    """Head ``kind`` with initial weights seeded by the training seed and head position."""
    rng = np.random.default_rng([settings.training.seed, HEAD_ORDER.index(kind)])
    return GenerativeHead.create(kind, settings, num_classes, rng)


def ensure_template_bank(
    layout: RunLayout,
    records: Sequence[SceneRecord],
    settings: Settings,
    source: Path | None = None,
) -> TemplateBank:
    """Template bank of the run: ``source`` if given, the stored bank if it matches, else a new one."""
    if source is not None:
        bank = TemplateBank.load(source)
    elif layout.templates_path.is_file():
        bank = TemplateBank.load(layout.templates_path)
        if bank.m == settings.templates.count:
            return bank
        logger.info("Stored template bank has a different size; rebuilding", stored=bank.m, wanted=settings.templates.count)
        bank = _fresh_bank(records, settings)
    else:
        bank = _fresh_bank(records, settings)
    bank.save(layout.templates_path)
    return bank


def _fresh_bank(records: Sequence[SceneRecord], settings: Settings) -> TemplateBank:
    cfg = settings.templates
    return build_template_bank(
        all_poses(list(records)),
        cfg.count,
        seed=cfg.seed,
        max_iterations=cfg.max_iterations,
        swap_refine=cfg.swap_refine,
    )


def train_run(
    settings: Settings,
    dataset_dir: Path,
    run_dir: Path,
    *,
    head: str = "all",
    templates: Path | None = None,
) -> dict[str, list[EpochLoss]]:
    """Train ``head`` (or every active head) on the train split of ``dataset_dir``.

    Raises
    ------
    ConfigurationError
        If ``head`` is disabled by the configuration flags.

    """
    head = canonical_head(head)
    settings.validate_for_head(head)
    kinds = settings.active_heads() if head == "all" else [head]
    layout = RunLayout(run_dir)
    fixed_class = 0 if settings.heads.fixed_template else None

    with numeric_context(settings):
        records = load_dataset(dataset_dir, split="train")
        bank = ensure_template_bank(layout, records, settings, templates)
        for record in records:
            record.targets = [derive_targets(p, bank, record.scene_size, fixed_class=fixed_class) for p in record.poses]
        layout.write_settings(settings)

        store = FeatureStore.from_settings(settings)
        datasets = build_head_datasets(records, store, bank, kinds)
        history: dict[str, list[EpochLoss]] = {}
        for kind in kinds:
            history[kind] = train_head(
                build_head(kind, settings, bank.m),
                datasets[kind],
                settings.training,
                log_path=layout.training_log,
                checkpoint_path=layout.checkpoint(kind),
            )
    logger.info("Training finished", run=str(run_dir), heads=kinds)
    return history


@dataclass
class TrainedRun:
    """Settings, templates and restored heads of a run directory."""

    layout: RunLayout
    settings: Settings
    bank: TemplateBank
    heads: dict[str, GenerativeHead]

    @property
    def fixed_class(self) -> int | None:
        """Class used for every pose when the classifier is disabled."""
        return 0 if self.settings.heads.fixed_template else None


def load_run(run_dir: Path) -> TrainedRun:
    """Rebuild every active head of a run from its checkpoints.

    Raises
    ------
    StateError
        If the run lacks its settings, template bank or a head checkpoint.

    """
    layout = RunLayout(run_dir)
    settings = layout.read_settings()
    if not layout.templates_path.is_file():
        raise StateError(f"template bank missing at {layout.templates_path}; run `train` first", path=str(run_dir))
    bank = TemplateBank.load(layout.templates_path)
    heads: dict[str, GenerativeHead] = {}
    with numeric_context(settings):
        for kind in settings.active_heads():
            path = layout.checkpoint(kind)
            if not path.is_file():
                raise StateError(
                    f"checkpoint for head '{kind}' missing at {path}; run `train --head {kind}`",
                    head=kind,
                    path=str(path),
                )
            head = build_head(kind, settings, bank.m)
            load_checkpoint(path, head)
            head.eval()
            heads[kind] = head
    logger.info("Loaded run", run=str(run_dir), heads=list(heads))
    return TrainedRun(layout, settings, bank, heads)


@dataclass(frozen=True)
class SampledPose:
    """One sampled person; centre and scale in the 256-frame, pose in scene pixels."""

    center: np.ndarray
    class_index: int
    scale: np.ndarray
    deformation: np.ndarray
    pose: Pose

    def to_json(self) -> dict[str, Any]:
        """Entry of the ``samples`` list in sample output."""
        return {
            "center": [float(v) for v in self.center],
            "class": self.class_index,
            "scale": [float(v) for v in self.scale],
            "keypoints": self.pose.keypoints.tolist(),
        }


class PoseSampler:
    """Location, then template class, then scale and deformation, then the pose."""

    def __init__(self, run: TrainedRun, store: FeatureStore) -> None:
        """Bind a restored run to a feature store."""
        self.run = run
        self.store = store

    @classmethod
    def from_run(cls, run: TrainedRun) -> PoseSampler:
        """Sampler with the backbone the run was trained with."""
        return cls(run, FeatureStore.from_settings(run.settings))

    def _head(self, kind: str) -> GenerativeHead:
        return self.run.heads[kind]

    def sample_locations(self, record: SceneRecord, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count×2`` centres in the 256-frame."""
        glob = self.store.global_view(record)
        inputs = HeadInputs(
            ViewFeatures(
                np.repeat(glob.image, count, axis=0),
                None if glob.context is None else np.repeat(glob.context, count, axis=0),
            )
        )
        with numeric_context(self.run.settings):
            return self._head("location").generate(inputs, rng)

    def classify(self, record: SceneRecord, centers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Template class per centre; all zeros with a fixed template."""
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        if self.run.fixed_class is not None:
            return np.full(len(centers), self.run.fixed_class, dtype=np.int64)
        head = self._head("classifier")
        with numeric_context(self.run.settings):
            return head.generate(pose_inputs(self.store, record, centers), rng)

    def sample(
        self,
        record: SceneRecord,
        count: int,
        rng: np.random.Generator,
        *,
        centers: np.ndarray | None = None,
    ) -> list[SampledPose]:
        """Sample ``count`` poses, or one per given 256-frame centre.

        Raises
        ------
        InputError
            If ``count`` is below 1 and no centres are given.

        """
        with tracer.start_as_current_span("sample") as span, numeric_context(self.run.settings):
            span.set_attribute("scene", record.id)
            if centers is None:
                if count < 1:
                    raise InputError(f"sample count must be at least 1, got {count}")
                centers = self.sample_locations(record, count, rng)
            centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
            span.set_attribute("count", len(centers))

            inputs = pose_inputs(self.store, record, centers)
            if self.run.fixed_class is not None:
                classes = np.full(len(centers), self.run.fixed_class, dtype=np.int64)
            else:
                classes = self._head("classifier").generate(inputs, rng)
            onehot = np.stack([self.run.bank.onehot(int(c)) for c in classes])
            conditioned = HeadInputs(inputs.global_view, inputs.patch_a, inputs.patch_b, onehot)

            if self.run.settings.heads.unified:
                joint = self._generate("unified", conditioned, rng)
                scales, deformations = joint[:, :2], joint[:, 2:]
            else:
                scales = self._generate("scale", conditioned, rng)
                deformations = self._generate("deformation", conditioned, rng)

            samples = []
            for center, cls, scale, deformation in zip(centers, classes, scales, deformations, strict=True):
                params = TransformParams(
                    center,
                    scale,
                    deformation.reshape(-1, 2),
                    scene_size=record.scene_size,
                )
                samples.append(
                    SampledPose(
                        center.copy(),
                        int(cls),
                        scale.copy(),
                        params.deformation.copy(),
                        apply_transform(self.run.bank.template(int(cls)), params),
                    )
                )
        samples_generated_counter().inc(len(samples))
        return samples

    def _generate(self, kind: str, inputs: HeadInputs, rng: np.random.Generator) -> np.ndarray:
        return self._head(kind).generate(inputs, rng)


def find_record(records: Sequence[SceneRecord], scene: str) -> SceneRecord:
    """Record with id ``scene``.

    Raises
    ------
    NotFoundError
        If no record has that id.

    """
    for record in records:
        if record.id == scene:
            return record
    raise NotFoundError(f"scene '{scene}' is not in the dataset", scene=scene)


def sample_payload(record: SceneRecord, samples: Sequence[SampledPose]) -> dict[str, Any]:
    """JSON document written by ``sample``."""
    return {"scene": record.id, "samples": [s.to_json() for s in samples]}


def _frame_centers(record: SceneRecord) -> np.ndarray:
    return np.stack([normalize_pose(to_frame(p, record.scene_size)).center for p in record.poses])


def evaluation_pairs(
    sampler: PoseSampler,
    records: Sequence[SceneRecord],
    rng: np.random.Generator,
) -> list[tuple[Pose, Pose]]:
    """``(predicted, ground truth)`` pairs in the 256-frame.

    With ground-truth locations every person is predicted at its own centre;
    with sampled locations one pose is sampled per person and paired with the
    ground-truth pose whose centre is nearest.
    """
    source = sampler.run.settings.evaluation.location_source
    pairs: list[tuple[Pose, Pose]] = []
    for record in records:
        if not record.poses:
            continue
        gt = [to_frame(p, record.scene_size) for p in record.poses]
        gt_centers = _frame_centers(record)
        if source is LocationSource.GROUND_TRUTH:
            samples = sampler.sample(record, len(gt), rng, centers=gt_centers)
            matches = list(range(len(gt)))
        else:
            samples = sampler.sample(record, len(gt), rng)
            matches = [int(np.argmin(np.linalg.norm(gt_centers - s.center, axis=1))) for s in samples]
        pairs.extend((to_frame(s.pose, record.scene_size), gt[j]) for s, j in zip(samples, matches, strict=True))
    return pairs


def evaluate_run(
    sampler: PoseSampler,
    records: Sequence[SceneRecord],
    rng: np.random.Generator,
    *,
    alpha: float | None = None,
    beta: float | None = None,
) -> EvalReport:
    """Score sampled poses against the ground truth of ``records``."""
    cfg = sampler.run.settings.evaluation
    with tracer.start_as_current_span("evaluate") as span:
        report = evaluate_pairs(
            evaluation_pairs(sampler, records, rng),
            alpha=cfg.alpha if alpha is None else alpha,
            beta=cfg.beta if beta is None else beta,
        )
        span.set_attribute("samples", report.count)
    logger.info("Evaluated run", samples=report.count, **{k: round(v, 6) for k, v in report.means().items()})
    return report


def classifier_accuracy(
    sampler: PoseSampler,
    records: Sequence[SceneRecord],
    rng: np.random.Generator,
) -> float | None:
    """Fraction of poses whose predicted class at the true centre matches the nearest template.

    ``None`` with a fixed template or when no record carries targets.
    """
    if sampler.run.fixed_class is not None:
        return None
    hits = total = 0
    for record in records:
        if not record.targets:
            continue
        centers = np.stack([t.params.center for t in record.targets])
        predicted = sampler.classify(record, centers, rng)
        hits += int(sum(int(p) == t.class_index for p, t in zip(predicted, record.targets, strict=True)))
        total += len(record.targets)
    return hits / total if total else None


def location_feasibility(
    sampler: PoseSampler,
    records: Sequence[SceneRecord],
    count: int,
    rng: np.random.Generator,
) -> float | None:
    """Fraction of sampled centres inside the feasible-centre masks; ``None`` without masks."""
    inside = total = 0
    for record in records:
        mask = record.load_mask()
        if mask is None:
            continue
        height, width = record.scene_size
        centers = sampler.sample_locations(record, count, rng)
        xs = np.clip((centers[:, 0] * width / FRAME_SIZE).astype(int), 0, width - 1)
        ys = np.clip((centers[:, 1] * height / FRAME_SIZE).astype(int), 0, height - 1)
        inside += int(np.count_nonzero(mask[ys, xs]))
        total += len(centers)
    return inside / total if total else None


def load_eval_records(dataset_dir: Path, run: TrainedRun, split: str | None = "test") -> list[SceneRecord]:
    """Records of ``split`` with targets derived against the run's template bank."""
    return load_dataset(dataset_dir, bank=run.bank, fixed_class=run.fixed_class, split=split)
