"""Pose normalization and the K-medoids template bank."""

from .bank import TemplateBank, TemplateBankFile, assign_label, build_template_bank
from .kmedoids import ClusteringResult, clustering_cost, kmedoids, pairwise_distances
from .pose import NormalizedPose, Pose, impute_invisible, normalize_pose

__all__ = [
    "ClusteringResult",
    "NormalizedPose",
    "Pose",
    "TemplateBank",
    "TemplateBankFile",
    "assign_label",
    "build_template_bank",
    "clustering_cost",
    "impute_invisible",
    "kmedoids",
    "normalize_pose",
    "pairwise_distances",
]
