"""Mini-batch Adam training of one head."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..autodiff import Adam, Tape, save_checkpoint
from ..core.constants import LossComponents
from ..core.error_handling import InputError, TrainingDivergenceError
from ..core.logging import LogContext, get_logger
from ..core.telemetry import (
    checkpoints_written_counter,
    epoch_duration_histogram,
    training_loss_gauge,
    training_steps_counter,
)
from ..core.tracing import get_tracer

if TYPE_CHECKING:
    from pathlib import Path

    from ..core.config_models import TrainingSettings
    from .base import GenerativeHead, HeadDataset

logger = get_logger(__name__)
tracer = get_tracer(__name__)

LOG_HEADER = ("epoch", "head", "loss_total", "loss_mse_or_cce", "loss_kld")


@dataclass(frozen=True)
class EpochLoss:
    """Row-weighted mean losses of one epoch."""

    epoch: int
    head: str
    total: float
    reconstruction: float
    kld: float

    def row(self) -> list[str]:
        """CSV row in :data:`LOG_HEADER` order."""
        return [str(self.epoch), self.head, repr(self.total), repr(self.reconstruction), repr(self.kld)]


def append_training_log(path: Path, losses: list[EpochLoss]) -> None:
    """Append rows to the CSV log, writing the header for a new file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    is_new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        if is_new:
            writer.writerow(LOG_HEADER)
        writer.writerows(loss.row() for loss in losses)


def _record_epoch(loss: EpochLoss, duration: float) -> None:
    gauge = training_loss_gauge()
    gauge.labels(head=loss.head, component=LossComponents.TOTAL.value).set(loss.total)
    gauge.labels(head=loss.head, component=LossComponents.RECONSTRUCTION.value).set(loss.reconstruction)
    gauge.labels(head=loss.head, component=LossComponents.KLD.value).set(loss.kld)
    epoch_duration_histogram().labels(head=loss.head).observe(duration)


def train_head(
    head: GenerativeHead,
    data: HeadDataset,
    config: TrainingSettings,
    *,
    log_path: Path | None = None,
    checkpoint_path: Path | None = None,
) -> list[EpochLoss]:
    """Train ``head`` on ``data`` and optionally write its log and checkpoint.

    Parameters
    ----------
    head : GenerativeHead
        Freshly built or restored head; left in eval mode afterwards.
    data : HeadDataset
        Inputs and 256-frame targets.
    config : TrainingSettings
        Epochs, batch size, Adam hyperparameters and seed.
    log_path : Path | None, optional
        CSV file the per-epoch losses are appended to.
    checkpoint_path : Path | None, optional
        AFLB1 file for the final parameters and optimizer state.

    Returns
    -------
    list[EpochLoss]
        One entry per epoch.

    Raises
    ------
    InputError
        If ``data`` is empty.
    TrainingDivergenceError
        If a mini-batch loss is NaN or infinite.

    """
    if len(data) == 0:
        raise InputError(f"no training rows for head '{head.kind}'", head=head.kind)

    rng = np.random.default_rng(config.seed)
    optimizer = Adam(
        dict(head.named_parameters()),
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
    )
    steps = training_steps_counter().labels(head=head.kind)
    history: list[EpochLoss] = []
    step = 0
    head.train()

    with LogContext(logger, head=head.kind) as ctx:
        ctx.logger.info("Starting training", rows=len(data), epochs=config.epochs, batch_size=config.batch_size)
        for epoch in range(1, config.epochs + 1):
            with tracer.start_as_current_span(f"train.{head.kind}.epoch") as span:
                span.set_attribute("head", head.kind)
                span.set_attribute("epoch", epoch)
                start = time.perf_counter()
                sums = np.zeros(3)
                for inputs, targets in data.batches(config.batch_size, rng):
                    step += 1
                    optimizer.zero_grad()
                    with Tape() as tape:
                        terms = head.loss(inputs, targets, rng)
                    total = terms.total.item()
                    if not math.isfinite(total):
                        span.set_attribute("diverged", True)
                        raise TrainingDivergenceError(head.kind, step, epoch=epoch)
                    tape.backward(terms.total)
                    optimizer.step()
                    steps.inc()
                    kld = terms.kld.item() if terms.kld is not None else 0.0
                    sums += len(inputs) * np.array([total, terms.reconstruction.item(), kld])

                means = sums / len(data)
                loss = EpochLoss(epoch, head.kind, float(means[0]), float(means[1]), float(means[2]))
                history.append(loss)
                duration = time.perf_counter() - start
                span.set_attribute("loss_total", loss.total)
                _record_epoch(loss, duration)
                ctx.logger.info(
                    "Finished epoch",
                    epoch=epoch,
                    loss_total=loss.total,
                    loss_mse_or_cce=loss.reconstruction,
                    loss_kld=loss.kld,
                    duration=duration,
                )

        if log_path is not None:
            append_training_log(log_path, history)
        if checkpoint_path is not None:
            save_checkpoint(checkpoint_path, head, optimizer)
            checkpoints_written_counter().labels(head=head.kind).inc()
            ctx.logger.info("Wrote checkpoint", path=str(checkpoint_path))

    head.eval()
    return history
