"""Tests for the frozen backbone, feature files and resizing."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from pose_affordance.backbone import (
    FeatureFile,
    FrozenCNNBackbone,
    PrecomputedBackbone,
    build_backbone,
    load_precomputed,
    resize_bilinear,
    resize_to_input,
    to_three_channels,
    write_feature_file,
)
from pose_affordance.core.constants import Modality
from pose_affordance.core.error_handling import (
    ConfigurationError,
    DimensionError,
    FormatError,
    InputError,
    NotFoundError,
)

DIMS = (8, 8, 4)


@pytest.fixture(scope="module")
def backbone() -> FrozenCNNBackbone:
    """A narrow frozen CNN."""
    return FrozenCNNBackbone(seed=3, channels=4)


@pytest.fixture
def feature_path(tmp_path, rng: np.random.Generator):
    """A feature file with one image and one semantic record."""
    path = tmp_path / "features.afft"
    records = [
        ("scene-1", Modality.IMAGE, rng.standard_normal(DIMS)),
        ("scene-1", Modality.SEMANTIC, np.ones(DIMS)),
    ]
    assert write_feature_file(path, records, DIMS) == 2
    return path


class TestFrozenCNN:
    """Test the builtin feature extractor."""

    def test_output_shape(self, backbone: FrozenCNNBackbone) -> None:
        """Test that a 256×256 image becomes an 8×8×C map."""
        image = np.full((256, 256, 3), 128, dtype=np.uint8)
        out = backbone.extract(image)
        assert out.shape == (8, 8, 4)
        assert out.dtype == np.float32
        assert backbone.output_shape == (8, 8, 4)

    def test_deterministic_per_seed(self, backbone: FrozenCNNBackbone, rng: np.random.Generator) -> None:
        """Test that the same seed gives the same features."""
        image = rng.integers(0, 256, size=(256, 256, 3))
        again = FrozenCNNBackbone(seed=3, channels=4)
        np.testing.assert_array_equal(backbone.extract(image), again.extract(image))

    def test_seed_changes_weights(self, backbone: FrozenCNNBackbone) -> None:
        """Test that another seed gives other kernels."""
        other = FrozenCNNBackbone(seed=4, channels=4)
        assert not np.array_equal(backbone.kernels[0], other.kernels[0])

    def test_grayscale_is_replicated(self, backbone: FrozenCNNBackbone) -> None:
        """Test that a single-channel map is accepted."""
        gray = np.full((256, 256), 90, dtype=np.uint8)
        np.testing.assert_array_equal(backbone.extract(gray), backbone.extract(to_three_channels(gray)))

    def test_wrong_size(self, backbone: FrozenCNNBackbone) -> None:
        """Test that unscaled images are rejected."""
        with pytest.raises(DimensionError):
            backbone.extract(np.zeros((128, 128, 3)))

    def test_features_need_image(self, backbone: FrozenCNNBackbone) -> None:
        """Test that the builtin backbone cannot serve ids alone."""
        with pytest.raises(DimensionError, match="needs the image"):
            backbone.features("scene-1", Modality.IMAGE, None)

    def test_weights_are_not_trainable(self, backbone: FrozenCNNBackbone) -> None:
        """Test that the kernels are plain arrays."""
        assert all(isinstance(kernel, np.ndarray) for kernel in backbone.kernels)
        assert len(backbone.kernels) == 5


class TestFeatureFile:
    """Test AFFT1 feature files."""

    def test_round_trip(self, feature_path) -> None:
        """Test that records are indexed by id and modality."""
        features = FeatureFile(feature_path, DIMS)
        assert len(features) == 2
        assert ("scene-1", Modality.SEMANTIC) in features
        assert ("scene-1", Modality.DEPTH) not in features
        semantic = features.get("scene-1", Modality.SEMANTIC)
        np.testing.assert_array_equal(semantic.values, np.ones(DIMS, dtype=np.float32))
        assert semantic.modality is Modality.SEMANTIC

    def test_missing_record(self, feature_path) -> None:
        """Test looking up an absent record."""
        with pytest.raises(NotFoundError, match="scene-2"):
            load_precomputed(feature_path, "scene-2", Modality.IMAGE, DIMS)

    def test_missing_file(self, tmp_path) -> None:
        """Test opening a missing file."""
        with pytest.raises(NotFoundError):
            FeatureFile(tmp_path / "absent.afft", DIMS)

    def test_dims_mismatch(self, feature_path) -> None:
        """Test a header that disagrees with the configured channels."""
        with pytest.raises(FormatError, match="8×8×4"):
            FeatureFile(feature_path, (8, 8, 512))

    def test_wrong_magic(self, tmp_path) -> None:
        """Test a file with another header."""
        path = tmp_path / "bad.afft"
        path.write_bytes(b"XXXXX" + struct.pack("<3I", *DIMS))
        with pytest.raises(FormatError, match="not an AFFT1"):
            FeatureFile(path, DIMS)

    def test_truncated_record(self, feature_path) -> None:
        """Test a file cut inside a record."""
        feature_path.write_bytes(feature_path.read_bytes()[:-10])
        with pytest.raises(FormatError, match="truncated"):
            FeatureFile(feature_path, DIMS)

    def test_unknown_modality_byte(self, tmp_path) -> None:
        """Test a record with an invalid modality."""
        path = tmp_path / "modality.afft"
        body = struct.pack("<I", 1) + b"x" + bytes([9]) + np.zeros(DIMS, dtype="<f4").tobytes()
        path.write_bytes(b"AFFT1" + struct.pack("<3I", *DIMS) + body)
        with pytest.raises(FormatError, match="modality"):
            FeatureFile(path, DIMS)

    def test_write_rejects_wrong_dims(self, tmp_path) -> None:
        """Test that every record must have the declared dims."""
        with pytest.raises(FormatError):
            write_feature_file(tmp_path / "f.afft", [("a", Modality.IMAGE, np.zeros((8, 8, 3)))], DIMS)


class TestBuildBackbone:
    """Test backbone selection from settings."""

    def test_builtin_by_default(self, make_settings) -> None:
        """Test the default kind."""
        backbone = build_backbone(make_settings())
        assert isinstance(backbone, FrozenCNNBackbone)
        assert backbone.channels == 8

    def test_precomputed_needs_file(self, make_settings) -> None:
        """Test the missing feature file."""
        with pytest.raises(ConfigurationError):
            build_backbone(make_settings({"backbone": {"kind": "precomputed-file"}}))

    def test_precomputed_serves_records(self, make_settings, tmp_path) -> None:
        """Test the precomputed backbone end to end."""
        path = tmp_path / "f.afft"
        write_feature_file(path, [("a", Modality.DEPTH, np.full((8, 8, 8), 2.0))], (8, 8, 8))
        backbone = build_backbone(
            make_settings({"backbone": {"kind": "precomputed-file", "feature_file": str(path)}})
        )
        assert isinstance(backbone, PrecomputedBackbone)
        assert backbone.features("a", Modality.DEPTH, None).values[0, 0, 0] == 2.0


class TestResize:
    """Test bilinear rescaling."""

    def test_identity_size(self) -> None:
        """Test that the same size is a copy."""
        img = np.arange(12.0).reshape(3, 4)
        out = resize_bilinear(img, 3, 4)
        np.testing.assert_array_equal(out, img)
        assert out is not img

    def test_constant_image_stays_constant(self) -> None:
        """Test that constants survive any rescale."""
        out = resize_to_input(np.full((37, 53, 3), 7.0))
        assert out.shape == (256, 256, 3)
        np.testing.assert_allclose(out, 7.0)

    def test_values_stay_in_range(self, rng: np.random.Generator) -> None:
        """Test clamping to the input range."""
        img = rng.uniform(10.0, 20.0, size=(9, 9))
        out = resize_bilinear(img, 31, 17)
        assert out.min() >= img.min()
        assert out.max() <= img.max()

    def test_downscale_averages(self) -> None:
        """Test that halving a 2×2 checker of columns gives the mean."""
        img = np.array([[0.0, 10.0], [0.0, 10.0]])
        np.testing.assert_allclose(resize_bilinear(img, 1, 1), [[5.0]])

    def test_empty_image(self) -> None:
        """Test rejecting empty input."""
        with pytest.raises(InputError):
            resize_bilinear(np.zeros((0, 4)), 2, 2)
