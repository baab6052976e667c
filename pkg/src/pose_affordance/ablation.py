"""Ablation grid: attention modes, context modalities and head variants.

Each cell trains a full pipeline in its own run directory and evaluates it
on the test split. Cells run in worker processes, at most ``workers`` at a
time; a failing cell is logged and reported as an empty row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any

import anyio
import numpy as np
from anyio import to_process

from .core.config import Settings, deep_merge
from .core.config_models import AttentionMode, ContextModality
from .core.constants import NUM_RAW_LABELS
from .core.error_handling import InputError, with_error_handling
from .core.logging import LogContext, get_logger, setup_logging
from .core.telemetry import ablation_cells_counter
from .core.tracing import get_tracer
from .evaluation import METRIC_COLUMNS, EvalReport, ReportRow, render_table, write_report_csv
from .pipeline import PoseSampler, evaluate_run, load_eval_records, load_run, train_run

logger = get_logger(__name__)
tracer = get_tracer(__name__)

LABEL_MODE_CELLS = (2, 3, 4, NUM_RAW_LABELS)


@dataclass(frozen=True)
class AblationCell:
    """Labelled settings overrides applied on top of the base configuration."""

    label: str
    overrides: dict[str, Any] = field(default_factory=dict)


def default_grid() -> list[AblationCell]:
    """Every attention mode for both modalities, then label granularities and head variants."""
    cells = [
        AblationCell(
            f"{mode.value}/{modality.value}",
            {"attention": {"mode": mode.value}, "dataset": {"modality": modality.value, "label_mode": 8}},
        )
        for modality in ContextModality
        for mode in AttentionMode
    ]
    semantic = {"modality": ContextModality.SEMANTIC.value}
    cells.extend(
        AblationCell(f"labels-{mode}", {"dataset": {**semantic, "label_mode": mode}}) for mode in LABEL_MODE_CELLS
    )
    cells.append(AblationCell("fixed-template", {"dataset": {**semantic, "label_mode": 8}, "heads": {"fixed_template": True}}))
    cells.append(AblationCell("unified", {"dataset": {**semantic, "label_mode": 8}, "heads": {"unified": True}}))
    return cells


@dataclass(frozen=True)
class CellJob:
    """One cell at one training seed; plain data so it crosses process boundaries."""

    cell: AblationCell
    seed: int
    base: dict[str, Any]
    dataset_dir: Path
    run_dir: Path

    def settings(self) -> Settings:
        """Base settings with the cell overrides and this job's seed."""
        data = deep_merge(self.base, self.cell.overrides)
        data = deep_merge(data, {"training": {"seed": self.seed}, "telemetry": {"metrics_textfile": None}})
        return Settings.model_validate(data)


@with_error_handling("ablation cell", continue_on_error=True)
def run_cell(job: CellJob) -> EvalReport:
    """Train and evaluate one job; ``None`` when it fails."""
    settings = job.settings()
    setup_logging(settings.logging.level, json_output=settings.logging.json_output)
    train_run(settings, job.dataset_dir, job.run_dir)
    run = load_run(job.run_dir)
    records = load_eval_records(job.dataset_dir, run)
    return evaluate_run(PoseSampler.from_run(run), records, np.random.default_rng(job.seed))


async def _run_jobs(jobs: list[CellJob], workers: int) -> list[EvalReport | None]:
    limiter = anyio.CapacityLimiter(workers)
    results: list[EvalReport | None] = [None] * len(jobs)

    async def run_one(index: int, job: CellJob) -> None:
        with tracer.start_as_current_span("ablation.cell") as span:
            span.set_attribute("cell", job.cell.label)
            span.set_attribute("seed", job.seed)
            results[index] = await to_process.run_sync(run_cell, job, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, job in enumerate(jobs):
            tg.start_soon(run_one, index, job)
    return results


def _empty_row(label: str) -> ReportRow:
    return ReportRow(label, dict.fromkeys(METRIC_COLUMNS, math.nan))


def run_ablation(
    settings: Settings,
    dataset_dir: Path,
    out_dir: Path,
    *,
    seeds: int = 1,
    workers: int = 1,
    cells: list[AblationCell] | None = None,
) -> list[ReportRow]:
    """Run the grid and write ``ablation.txt`` and ``ablation.csv`` under ``out_dir``.

    Parameters
    ----------
    settings : Settings
        Base configuration; each cell overrides part of it.
    dataset_dir : Path
        Dataset with train and test splits.
    out_dir : Path
        Receives one run directory per cell and seed plus the tables.
    seeds : int, optional
        Training seeds per cell, starting at ``settings.training.seed``.
    workers : int, optional
        Cells trained at the same time; 1 runs them in this process.
    cells : list[AblationCell] | None, optional
        Grid to run, by default :func:`default_grid`.

    Returns
    -------
    list[ReportRow]
        One row per cell, mean ± std over seeds when ``seeds > 1``.

    Raises
    ------
    InputError
        If ``seeds`` or ``workers`` is below 1.

    """
    if seeds < 1 or workers < 1:
        raise InputError(f"seeds and workers must be at least 1, got {seeds} and {workers}")
    grid = default_grid() if cells is None else cells
    base = settings.model_dump(mode="json")
    first_seed = settings.training.seed
    jobs = [
        CellJob(cell, first_seed + offset, base, dataset_dir, out_dir / "cells" / _slug(cell.label) / f"seed-{first_seed + offset}")
        for cell in grid
        for offset in range(seeds)
    ]

    with LogContext(logger, cells=len(grid), seeds=seeds, workers=workers) as ctx:
        ctx.logger.info("Starting ablation")
        if workers == 1:
            results = [run_cell(job) for job in jobs]
        else:
            results = anyio.run(partial(_run_jobs, jobs, workers))

        counter = ablation_cells_counter()
        rows: list[ReportRow] = []
        for i, cell in enumerate(grid):
            reports = [r for r in results[i * seeds : (i + 1) * seeds] if r is not None]
            failed = seeds - len(reports)
            counter.labels(status="ok").inc(len(reports))
            if failed:
                counter.labels(status="failed").inc(failed)
                ctx.logger.warning("Ablation cell failed", cell=cell.label, failed_seeds=failed)
            if not reports:
                rows.append(_empty_row(cell.label))
            elif seeds == 1:
                rows.append(ReportRow.from_report(cell.label, reports[0]))
            else:
                rows.append(ReportRow.from_seeds(cell.label, reports))
            ctx.logger.info("Finished ablation cell", cell=cell.label, runs=len(reports))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ablation.txt").write_text(render_table(rows), encoding="utf-8")
    write_report_csv(out_dir / "ablation.csv", rows)
    return rows


def _slug(label: str) -> str:
    return label.replace("/", "-")
