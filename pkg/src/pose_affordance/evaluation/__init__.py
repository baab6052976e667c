"""Pose metrics and report tables."""

from .metrics import (
    METRIC_COLUMNS,
    EvalReport,
    akd,
    bounding_box,
    cos_sim,
    evaluate_pairs,
    head_size,
    iou,
    mae,
    mse,
    pck,
    pckh,
    torso_width,
)
from .report import ReportRow, render_table, summary_dict, write_report_csv, write_samples_csv

__all__ = [
    "METRIC_COLUMNS",
    "EvalReport",
    "ReportRow",
    "akd",
    "bounding_box",
    "cos_sim",
    "evaluate_pairs",
    "head_size",
    "iou",
    "mae",
    "mse",
    "pck",
    "pckh",
    "render_table",
    "summary_dict",
    "torso_width",
    "write_report_csv",
    "write_samples_csv",
]
