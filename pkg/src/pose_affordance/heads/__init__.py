"""Trainable heads: location, template classifier, scale and deformation."""

from .base import GenerativeHead, HeadDataset, HeadInputs, LossTerms, ViewFeatures
from .classifier import TemplateClassifier, cce_loss, predict_class
from .conditions import ClassCondition, GlobalCondition, build_shared_condition
from .cvae import CVAE, CVAEDecoder, CVAEEncoder, LatentStats, kld_loss, reconstruction_loss, reparameterize
from .generative import (
    DEFORMATION_RANGE,
    LOCATION_RANGE,
    SCALE_RANGE,
    TARGET_SCALE,
    ClassifierHead,
    CVAEHead,
    DeformationHead,
    LocationHead,
    ScaleHead,
    UnifiedHead,
)
from .training import EpochLoss, append_training_log, train_head

__all__ = [
    "CVAE",
    "DEFORMATION_RANGE",
    "LOCATION_RANGE",
    "SCALE_RANGE",
    "TARGET_SCALE",
    "CVAEDecoder",
    "CVAEEncoder",
    "CVAEHead",
    "ClassCondition",
    "ClassifierHead",
    "DeformationHead",
    "EpochLoss",
    "GenerativeHead",
    "GlobalCondition",
    "HeadDataset",
    "HeadInputs",
    "LatentStats",
    "LocationHead",
    "LossTerms",
    "ScaleHead",
    "TemplateClassifier",
    "UnifiedHead",
    "ViewFeatures",
    "append_training_log",
    "build_shared_condition",
    "cce_loss",
    "kld_loss",
    "predict_class",
    "reconstruction_loss",
    "reparameterize",
    "train_head",
]
