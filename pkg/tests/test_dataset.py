"""Tests for label quantization, manifests, patches, loading and the generator."""

from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from pose_affordance.core.config_models import ContextModality
from pose_affordance.core.constants import SemanticCategory, default_label_mapping
from pose_affordance.core.error_handling import FormatError, InputError, NotFoundError
from pose_affordance.core.telemetry import get_metrics_manager
from pose_affordance.dataset import (
    Furniture,
    FurnitureKind,
    ManifestRecord,
    PatchKind,
    PatchSpec,
    PoseKind,
    all_poses,
    crop_patch,
    extract_patch,
    feasible_mask,
    generate_scene,
    load_dataset,
    load_label_mapping,
    palette_values,
    quantize_labels,
    read_manifest,
    requantize,
    synth_generate,
    to_frame,
    validate_palette,
    write_manifest,
)
from pose_affordance.templates import build_template_bank
from pose_affordance.transform import apply_transform

EIGHT = {0, 36, 72, 108, 144, 180, 216, 252}

# Raw ids: wall 0, floor 3, ceiling 5, table 15, chair 19, person 12.
RAW = np.array([[0, 3, 5], [15, 19, 12]], dtype=np.uint8)


class TestQuantize:
    """Test raw-id quantization for every granularity."""

    def test_eight_categories(self) -> None:
        """Test the full palette."""
        np.testing.assert_array_equal(quantize_labels(RAW, 8), [[36, 72, 0], [144, 180, 252]])

    def test_fixed_and_movable(self) -> None:
        """Test the four-level split."""
        np.testing.assert_array_equal(quantize_labels(RAW, 4), [[84, 84, 0], [168, 168, 252]])

    def test_human_and_non_human(self) -> None:
        """Test the three-level split."""
        np.testing.assert_array_equal(quantize_labels(RAW, 3), [[126, 126, 0], [126, 126, 252]])

    def test_foreground(self) -> None:
        """Test the two-level split."""
        np.testing.assert_array_equal(quantize_labels(RAW, 2), [[252, 252, 0], [252, 252, 252]])

    def test_raw_levels(self) -> None:
        """Test spreading raw ids over 0..255."""
        out = quantize_labels(np.array([[0, 149]]), 150)
        np.testing.assert_array_equal(out, [[0, 255]])
        assert len(palette_values(150)) == 150

    def test_unknown_ids_become_background(self) -> None:
        """Test ids without a mapping and their counter."""
        out = quantize_labels(np.array([[200, 0], [200, 200]]), 8)
        np.testing.assert_array_equal(out, [[0, 36], [0, 0]])
        registry = get_metrics_manager().registry
        assert registry.get_sample_value("pose_affordance_unmapped_label_pixels_total") == 3

    def test_custom_mapping(self) -> None:
        """Test a mapping that leaves ids unmapped."""
        out = quantize_labels(np.array([[0, 5]]), 8, {5: SemanticCategory.BED})
        np.testing.assert_array_equal(out, [[0, 216]])

    def test_unknown_mode(self) -> None:
        """Test rejecting granularities that do not exist."""
        with pytest.raises(InputError):
            quantize_labels(RAW, 5)
        with pytest.raises(InputError):
            palette_values(7)


class TestRequantize:
    """Test coarsening an 8-category map."""

    def test_matches_quantizing_raw(self) -> None:
        """Test that requantizing agrees with quantizing the raw ids."""
        semantic = quantize_labels(RAW, 8)
        for mode in (2, 3, 4, 8):
            np.testing.assert_array_equal(requantize(semantic, mode), quantize_labels(RAW, mode))

    def test_mode_150_needs_raw(self) -> None:
        """Test that raw levels cannot be recovered from categories."""
        with pytest.raises(InputError, match="raw"):
            requantize(np.zeros((2, 2), dtype=np.uint8), 150)

    def test_palette_violation(self) -> None:
        """Test a map with stray values."""
        with pytest.raises(FormatError, match="palette"):
            requantize(np.array([[0, 37]], dtype=np.uint8), 4)


class TestPalette:
    """Test palettes and closure checks."""

    def test_eight_level_values(self) -> None:
        """Test the category gray values."""
        assert palette_values(8) == EIGHT
        assert palette_values(4) == {0, 84, 168, 252}
        assert palette_values(3) == {0, 126, 252}
        assert palette_values(2) == {0, 252}

    def test_validate(self) -> None:
        """Test accepting and rejecting maps."""
        validate_palette(np.array([[0, 252]]), 2)
        with pytest.raises(FormatError):
            validate_palette(np.array([[0, 36]]), 2, source="scene.png")


class TestLabelMapping:
    """Test mapping files."""

    def test_default(self) -> None:
        """Test the built-in table."""
        mapping = load_label_mapping(None)
        assert mapping == default_label_mapping()
        assert mapping[12] is SemanticCategory.PERSON
        assert len(mapping) == 150

    def test_file(self, tmp_path) -> None:
        """Test a custom table."""
        path = tmp_path / "mapping.json"
        path.write_text(json.dumps({"categories": {"chair": [5, 6], "person": [1]}}), encoding="utf-8")
        assert load_label_mapping(path) == {
            5: SemanticCategory.CHAIR,
            6: SemanticCategory.CHAIR,
            1: SemanticCategory.PERSON,
        }

    def test_out_of_range_id(self, tmp_path) -> None:
        """Test raw ids beyond 149."""
        path = tmp_path / "mapping.json"
        path.write_text(json.dumps({"categories": {"wall": [150]}}), encoding="utf-8")
        with pytest.raises(FormatError, match="outside"):
            load_label_mapping(path)

    def test_unknown_category(self, tmp_path) -> None:
        """Test a category that is not in the palette."""
        path = tmp_path / "mapping.json"
        path.write_text(json.dumps({"categories": {"sofa": [1]}}), encoding="utf-8")
        with pytest.raises(FormatError):
            load_label_mapping(path)

    def test_missing(self, tmp_path) -> None:
        """Test a missing table."""
        with pytest.raises(NotFoundError):
            load_label_mapping(tmp_path / "absent.json")


class TestManifest:
    """Test the line-delimited manifest."""

    def record(self, name: str) -> ManifestRecord:
        return ManifestRecord(
            id=name,
            scene=f"scenes/{name}.png",
            semantic=f"semantic/{name}.png",
            poses=f"poses/{name}.json",
            height=480,
            width=640,
            pose_kinds=[PoseKind.SITTING],
        )

    def test_round_trip(self, tmp_path) -> None:
        """Test writing and reading records."""
        path = tmp_path / "manifest.jsonl"
        write_manifest(path, [self.record("a"), self.record("b")])
        records = read_manifest(path)
        assert [r.id for r in records] == ["a", "b"]
        assert records[0].depth is None
        assert records[0].split == "train"
        assert records[1].pose_kinds == [PoseKind.SITTING]

    def test_blank_lines_skipped(self, tmp_path) -> None:
        """Test tolerance for trailing blank lines."""
        path = tmp_path / "manifest.jsonl"
        path.write_text(self.record("a").model_dump_json() + "\n\n", encoding="utf-8")
        assert len(read_manifest(path)) == 1

    def test_invalid_line(self, tmp_path) -> None:
        """Test a record with a bad size."""
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"id": "a", "scene": "s", "semantic": "m", "poses": "p", "height": 0, "width": 3}\n')
        with pytest.raises(FormatError, match=":1:"):
            read_manifest(path)

    def test_missing(self, tmp_path) -> None:
        """Test a dataset without a manifest."""
        with pytest.raises(NotFoundError):
            read_manifest(tmp_path / "manifest.jsonl")


class TestPatches:
    """Test patch placement and cropping."""

    def test_sides_follow_scene_height(self) -> None:
        """Test patch A spanning the height and patch B half of it."""
        a = PatchSpec.around((128.0, 128.0), (512, 1024), PatchKind.A)
        b = PatchSpec.around((128.0, 128.0), (512, 1024), PatchKind.B)
        assert a.center == (512.0, 256.0)
        assert (a.side, b.side) == (512, 256)

    def test_crop_inside(self) -> None:
        """Test a crop fully inside the image."""
        img = np.arange(100).reshape(10, 10)
        np.testing.assert_array_equal(crop_patch(img, PatchSpec((5.0, 5.0), 4)), img[3:7, 3:7])

    def test_crop_zero_fill(self) -> None:
        """Test that pixels outside the scene are zero."""
        img = np.full((10, 10, 3), 9, dtype=np.uint8)
        out = crop_patch(img, PatchSpec((0.0, 0.0), 6))
        assert out.shape == (6, 6, 3)
        assert out[:3, :3].sum() == 0
        assert np.all(out[3:, 3:] == 9)

    def test_crop_fully_outside(self) -> None:
        """Test a crop that misses the scene."""
        assert crop_patch(np.ones((4, 4)), PatchSpec((100.0, 100.0), 4)).sum() == 0

    def test_extract_resizes(self) -> None:
        """Test the network-size output."""
        out = extract_patch(np.full((64, 64), 7.0), PatchSpec((32.0, 32.0), 32))
        assert out.shape == (256, 256)
        np.testing.assert_allclose(out, 7.0)


class TestGenerator:
    """Test the synthetic scene generator."""

    def test_scene_is_deterministic(self) -> None:
        """Test that a seed fixes every raster and pose."""
        a = generate_scene(np.random.default_rng(3))
        b = generate_scene(np.random.default_rng(3))
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.semantic, b.semantic)
        assert [p.to_triples() for p in a.poses] == [p.to_triples() for p in b.poses]

    def test_scene_contents(self) -> None:
        """Test raster shapes, palettes and pose counts."""
        for seed in range(5):
            scene = generate_scene(np.random.default_rng(seed))
            assert scene.image.shape == (256, 256, 3)
            assert set(np.unique(scene.semantic).tolist()) <= EIGHT
            assert 72 in scene.semantic
            assert 1 <= len(scene.poses) <= 2
            assert len(scene.kinds) == len(scene.poses)
            assert set(np.unique(scene.mask).tolist()) <= {0, 255}

    def test_depth_nearer_below_horizon(self) -> None:
        """Test that the floor gets closer towards the bottom."""
        scene = generate_scene(np.random.default_rng(11))
        column = scene.depth[:, 0].astype(int)
        assert column[-1] > column[scene.horizon - 1]

    def test_feasible_mask_includes_seats(self) -> None:
        """Test that seats open a region above them."""
        chair = Furniture(FurnitureKind.CHAIR, 200, 150, 230, 200)
        table = Furniture(FurnitureKind.TABLE, 20, 150, 80, 190)
        without = feasible_mask(110, [])
        with_seat = feasible_mask(110, [chair, table])
        assert with_seat.sum() >= without.sum()
        assert with_seat[165, 215] == 255
        assert chair.seatable
        assert not table.seatable

    def test_rejects_empty_dataset(self, tmp_path) -> None:
        """Test the scene count check."""
        with pytest.raises(InputError):
            synth_generate(tmp_path, n_scenes=0)


class TestSyntheticDataset:
    """Test the written dataset and the loader."""

    def test_split(self, synth_dataset) -> None:
        """Test the trailing fifth as the test split."""
        assert len(load_dataset(synth_dataset, split="train")) == 8
        test = load_dataset(synth_dataset, split="test")
        assert [r.id for r in test] == ["0008", "0009"]

    def test_unknown_split(self, synth_dataset) -> None:
        """Test an invalid split name."""
        with pytest.raises(InputError):
            load_dataset(synth_dataset, split="val")

    def test_files_and_kinds(self, synth_dataset) -> None:
        """Test that every record has its rasters and posture labels."""
        for record in load_dataset(synth_dataset):
            assert record.load_image().shape == (256, 256, 3)
            assert record.load_mask() is not None
            assert len(record.kinds) == len(record.poses)
            assert record.scene_size == (256, 256)

    @pytest.mark.parametrize("mode", [2, 3, 4, 8, 150])
    def test_load_context_modes(self, synth_dataset, mode: int) -> None:
        """Test context maps stay inside the mode's palette."""
        record = load_dataset(synth_dataset)[0]
        context = record.load_context(ContextModality.SEMANTIC, mode)
        assert context.shape == (256, 256)
        assert set(np.unique(context).tolist()) <= palette_values(mode)

    def test_load_depth(self, synth_dataset) -> None:
        """Test the depth modality."""
        record = load_dataset(synth_dataset)[0]
        assert record.load_context(ContextModality.DEPTH).dtype == np.uint8

    def test_targets_rebuild_poses(self, synth_dataset) -> None:
        """Test that derived targets recover each ground-truth pose."""
        records = load_dataset(synth_dataset)
        bank = build_template_bank(all_poses(records), 2)
        for record in load_dataset(synth_dataset, bank=bank):
            assert len(record.targets) == len(record.poses)
            for pose, target in zip(record.poses, record.targets, strict=True):
                rebuilt = apply_transform(bank.template(target.class_index), target.params)
                np.testing.assert_allclose(rebuilt.keypoints, pose.keypoints, atol=1e-6)

    def test_fixed_class(self, synth_dataset) -> None:
        """Test forcing every pose onto template 0."""
        records = load_dataset(synth_dataset)
        bank = build_template_bank(all_poses(records), 2)
        loaded = load_dataset(synth_dataset, bank=bank, fixed_class=0)
        assert {t.class_index for r in loaded for t in r.targets} == {0}

    def test_to_frame(self, synth_dataset) -> None:
        """Test that a 256 scene is already in the frame."""
        record = load_dataset(synth_dataset)[0]
        np.testing.assert_array_equal(to_frame(record.poses[0], (256, 256)).keypoints, record.poses[0].keypoints)

    def test_missing_file(self, synth_dataset, tmp_path) -> None:
        """Test a manifest that points at a missing raster."""
        records = read_manifest(synth_dataset / "manifest.jsonl")
        broken = tmp_path / "broken"
        write_manifest(broken / "manifest.jsonl", records[:1])
        with pytest.raises(NotFoundError, match="missing file"):
            load_dataset(broken)

    @pytest.mark.parametrize(
        "pose",
        [[[1.0, 2.0, 1.0], [3.0, 4.0]], [["x", "y", "1"]] * 16],
        ids=["ragged", "non-numeric"],
    )
    def test_malformed_pose_file(self, synth_dataset, tmp_path, pose) -> None:
        """Test that a pose file without numeric triples is a format error."""
        broken = tmp_path / "broken"
        shutil.copytree(synth_dataset, broken)
        entry = read_manifest(broken / "manifest.jsonl")[0]
        (broken / entry.poses).write_text(json.dumps([pose]), encoding="utf-8")
        with pytest.raises(FormatError, match="not numeric"):
            load_dataset(broken)
