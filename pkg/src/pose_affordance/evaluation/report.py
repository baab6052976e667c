"""Report tables: CSV files and aligned text rendered with Jinja2."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from jinja2 import Environment, StrictUndefined

from ..core.logging import get_logger
from .metrics import METRIC_COLUMNS, METRIC_TITLES

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence
    from pathlib import Path

    from .metrics import EvalReport

logger = get_logger(__name__)

_TABLE_TEMPLATE = """\
{{ header }}
{{ rule }}
{% for row in rows -%}
{{ row }}
{% endfor -%}
"""

_env = Environment(autoescape=False, undefined=StrictUndefined, keep_trailing_newline=True)  # noqa: S701
_table = _env.from_string(_TABLE_TEMPLATE)


@dataclass
class ReportRow:
    """One labelled line of a comparison table.

    ``spread`` holds per-metric standard deviations when the row summarizes
    several seeds.
    """

    label: str
    values: dict[str, float]
    spread: dict[str, float] = field(default_factory=dict)
    samples: int = 0

    @classmethod
    def from_report(cls, label: str, report: EvalReport) -> ReportRow:
        """Row of metric means."""
        return cls(label, report.means(), samples=report.count)

    @classmethod
    def from_seeds(cls, label: str, reports: Sequence[EvalReport]) -> ReportRow:
        """Mean and standard deviation across per-seed means."""
        per_seed = np.array([[r.mean(name) for name in METRIC_COLUMNS] for r in reports], dtype=np.float64)
        means: dict[str, float] = {}
        spreads: dict[str, float] = {}
        for j, name in enumerate(METRIC_COLUMNS):
            column = per_seed[:, j]
            column = column[~np.isnan(column)]
            means[name] = float(column.mean()) if column.size else math.nan
            spreads[name] = float(column.std()) if column.size else math.nan
        return cls(label, means, spreads, samples=sum(r.count for r in reports))


def _format_cell(value: float, spread: float | None) -> str:
    if math.isnan(value):
        return "n/a"
    if spread is None:
        return f"{value:.3f}"
    return f"{value:.3f}±{spread:.3f}"


def render_table(rows: Sequence[ReportRow], *, label_title: str = "config") -> str:
    """Aligned text table with columns PCK, PCKh, AKD, MAE, MSE, SIM, IOU."""
    cells = [
        [row.label, *(_format_cell(row.values[name], row.spread.get(name)) for name in METRIC_COLUMNS)]
        for row in rows
    ]
    titles = [label_title, *(METRIC_TITLES[name] for name in METRIC_COLUMNS)]
    widths = [max(len(titles[j]), *(len(c[j]) for c in cells)) if cells else len(titles[j]) for j in range(len(titles))]

    def line(values: Sequence[str]) -> str:
        first = values[0].ljust(widths[0])
        rest = (v.rjust(w) for v, w in zip(values[1:], widths[1:], strict=True))
        return "  ".join([first, *rest]).rstrip()

    return _table.render(
        header=line(titles),
        rule="  ".join("-" * w for w in widths),
        rows=[line(c) for c in cells],
    )


def write_report_csv(path: Path, rows: Sequence[ReportRow], *, label_title: str = "config") -> None:
    """CSV with one line per row; ``<metric>_std`` columns appear when any row has spreads."""
    with_spread = any(row.spread for row in rows)
    header = [label_title, "samples"]
    for name in METRIC_COLUMNS:
        header.append(name)
        if with_spread:
            header.append(f"{name}_std")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            out: list[str] = [row.label, str(row.samples)]
            for name in METRIC_COLUMNS:
                out.append(repr(row.values[name]))
                if with_spread:
                    out.append(repr(row.spread.get(name, math.nan)))
            writer.writerow(out)
    logger.info("Wrote report", path=str(path), rows=len(rows))


def write_samples_csv(path: Path, report: EvalReport) -> None:
    """Per-sample metric values, one line per evaluated pair."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample", *METRIC_COLUMNS])
        for i in range(report.count):
            writer.writerow([str(i), *(repr(report.values[name][i]) for name in METRIC_COLUMNS)])


def summary_dict(report: EvalReport) -> Mapping[str, object]:
    """Means, thresholds and exclusion counts as plain data."""
    return {
        "frame": report.frame,
        "alpha": report.alpha,
        "beta": report.beta,
        "samples": report.count,
        "means": report.means(),
        "undefined": dict(report.undefined),
    }
