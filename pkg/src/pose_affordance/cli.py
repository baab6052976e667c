"""Command-line interface.

Every command exits with status 0 on success. On failure a single
``E_<CATEGORY>: message`` line goes to stderr and the status is nonzero
(2 for invalid configuration, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from . import __version__
from .ablation import run_ablation
from .core.config import Settings, load_settings
from .core.config_models import AttentionMode, BackboneKind, LocationSource, Precision
from .core.constants import FRAME_SIZE
from .core.error_handling import AffordanceError, ConfigurationError, FormatError
from .core.logging import add_global_context, get_logger, setup_logging
from .core.telemetry import get_metrics_manager
from .core.tracing import setup_tracing, shutdown_tracing
from .dataset import all_poses, load_dataset, synth_generate
from .dataset.io import read_json, write_json
from .evaluation import ReportRow, render_table, summary_dict, write_report_csv, write_samples_csv
from .pipeline import (
    HEAD_ALIASES,
    HEAD_ORDER,
    PoseSampler,
    canonical_head,
    classifier_accuracy,
    evaluate_run,
    find_record,
    load_eval_records,
    load_run,
    location_feasibility,
    sample_payload,
    train_run,
)
from .render import render_distribution, save_overlay
from .templates import Pose, build_template_bank

logger = get_logger(__name__)

Handler = Callable[[argparse.Namespace, Settings], int]


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Nested settings overrides from the flags that were given."""
    flag_paths: dict[str, tuple[str, str]] = {
        "mode": ("attention", "mode"),
        "pool": ("attention", "pool_size"),
        "modality": ("dataset", "modality"),
        "labels": ("dataset", "label_mode"),
        "templates": ("templates", "count"),
        "epochs": ("training", "epochs"),
        "batch": ("training", "batch_size"),
        "alpha": ("evaluation", "alpha"),
        "beta": ("evaluation", "beta"),
        "location_source": ("evaluation", "location_source"),
        "precision": ("tensor", "precision"),
        "log_level": ("logging", "level"),
    }
    overrides: dict[str, dict[str, Any]] = {}
    for flag, (section, key) in flag_paths.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    if getattr(args, "train_seed", None) is not None:
        overrides.setdefault("training", {})["seed"] = args.train_seed
    if getattr(args, "fixed_template", False):
        overrides.setdefault("heads", {})["fixed_template"] = True
    if getattr(args, "unified", False):
        overrides.setdefault("heads", {})["unified"] = True
    if getattr(args, "features", None) is not None:
        overrides["backbone"] = {"kind": BackboneKind.PRECOMPUTED.value, "feature_file": str(args.features)}
    if getattr(args, "metrics_textfile", None) is not None:
        overrides.setdefault("telemetry", {})["metrics_textfile"] = str(args.metrics_textfile)
    return overrides


def _write_output(payload: Any, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        write_json(out, payload)


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    """Generate a synthetic dataset."""
    records = synth_generate(args.out, seed=args.seed, n_scenes=args.count)
    sys.stdout.write(f"{len(records)} scenes written to {args.out}\n")
    return 0


def cmd_make_templates(args: argparse.Namespace, settings: Settings) -> int:
    """Cluster the training poses into a template bank file."""
    cfg = settings.templates
    bank = build_template_bank(
        all_poses(load_dataset(args.dataset, split="train")),
        cfg.count,
        seed=cfg.seed,
        max_iterations=cfg.max_iterations,
        swap_refine=cfg.swap_refine,
    )
    bank.save(args.out)
    sys.stdout.write(f"{bank.m} templates written to {args.out} (cost {bank.cost:.6f})\n")
    return 0


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    """Train one head or every active head into a run directory."""
    history = train_run(settings, args.dataset, args.out, head=args.head, templates=args.bank)
    for head, losses in history.items():
        first, last = losses[0], losses[-1]
        sys.stdout.write(f"{head}: loss {first.total:.6f} -> {last.total:.6f} over {len(losses)} epochs\n")
    return 0


def cmd_sample(args: argparse.Namespace, settings: Settings) -> int:
    """Sample poses for one scene with a trained run."""
    run = load_run(args.run)
    record = find_record(load_dataset(args.dataset), args.scene)
    samples = PoseSampler.from_run(run).sample(record, args.count, np.random.default_rng(args.seed))
    _write_output(sample_payload(record, samples), args.out)
    if args.render is not None:
        save_overlay(args.render, record.load_image(), [s.pose for s in samples])
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    """Evaluate a trained run on the test split."""
    run = load_run(args.run)
    if args.location_source is not None:
        run.settings.evaluation.location_source = LocationSource(args.location_source)
    records = load_eval_records(args.dataset, run, split=args.split)
    sampler = PoseSampler.from_run(run)
    rng = np.random.default_rng(args.seed)
    report = evaluate_run(sampler, records, rng, alpha=args.alpha, beta=args.beta)

    summary = dict(summary_dict(report))
    summary["location_source"] = run.settings.evaluation.location_source.value
    summary["classifier_accuracy"] = classifier_accuracy(sampler, records, rng)
    summary["location_feasibility"] = location_feasibility(sampler, records, args.count, rng)

    rows = [ReportRow.from_report(args.run.name or str(args.run), report)]
    table = render_table(rows, label_title="run")
    sys.stdout.write(table)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.txt").write_text(table, encoding="utf-8")
        write_report_csv(args.out / "report.csv", rows, label_title="run")
        write_samples_csv(args.out / "samples.csv", report)
        write_json(args.out / "summary.json", summary)
    return 0


def cmd_render(args: argparse.Namespace, settings: Settings) -> int:
    """Draw ground-truth or sampled skeletons over a scene."""
    record = find_record(load_dataset(args.dataset), args.scene)
    if args.samples is None:
        poses = record.poses
    else:
        payload = read_json(args.samples)
        try:
            poses = [Pose(np.asarray(s["keypoints"], dtype=np.float64)) for s in payload["samples"]]
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{args.samples} is not a sample file: {e}", path=str(args.samples)) from e
    save_overlay(args.out, record.load_image(), poses)
    sys.stdout.write(f"{len(poses)} poses drawn to {args.out}\n")
    return 0


def cmd_ablate(args: argparse.Namespace, settings: Settings) -> int:
    """Run the ablation grid and print the comparison table."""
    rows = run_ablation(settings, args.dataset, args.out, seeds=args.seeds, workers=args.workers)
    sys.stdout.write(render_table(rows))
    return 0


def cmd_distribution(args: argparse.Namespace, settings: Settings) -> int:
    """Write one location heatmap per template class."""
    run = load_run(args.run)
    record = find_record(load_dataset(args.dataset), args.scene)
    samples = PoseSampler.from_run(run).sample(record, args.count, np.random.default_rng(args.seed))
    height, width = record.scene_size
    centers = np.array([[s.center[0] * width / FRAME_SIZE, s.center[1] * height / FRAME_SIZE] for s in samples])
    classes = np.array([s.class_index for s in samples])
    paths = render_distribution(args.out, record.load_image(), centers, classes, run.bank.m)
    sys.stdout.write(f"{len(paths)} heatmaps written to {args.out}\n")
    return 0


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration overrides")
    group.add_argument("--mode", choices=[m.value for m in AttentionMode], help="attention mode")
    group.add_argument("--modality", choices=["semantic", "depth"], help="context map modality")
    group.add_argument("--labels", type=int, help="label granularity: 2, 3, 4, 8 or 150")
    group.add_argument("--templates", type=int, help="template count m")
    group.add_argument("--pool", type=int, help="pooled size P")
    group.add_argument("--epochs", type=int)
    group.add_argument("--batch", type=int)
    group.add_argument("--train-seed", type=int, help="training seed")
    group.add_argument("--fixed-template", action="store_true", help="use one fixed template, no classifier")
    group.add_argument("--unified", action="store_true", help="one CVAE for scale and deformation")
    group.add_argument("--precision", choices=[p.value for p in Precision])
    group.add_argument("--features", type=Path, help="precomputed AFFT1 feature file")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    parser = argparse.ArgumentParser(prog="pose-affordance", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="TOML configuration file")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    parser.add_argument("--metrics-textfile", type=Path, help="write Prometheus metrics here on exit")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(handler=handler)
        return p

    p = command("synth", cmd_synth, "generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200, help="number of scenes")

    p = command("make-templates", cmd_make_templates, "build a template bank from a dataset")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)

    p = command("train", cmd_train, "train heads into a run directory")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="run directory")
    p.add_argument("--head", default="all", choices=[*HEAD_ORDER, *HEAD_ALIASES, "all"])
    p.add_argument("--bank", type=Path, help="template bank file to train against")
    _add_config_flags(p)

    p = command("sample", cmd_sample, "sample poses for a scene")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--scene", required=True, help="record id")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="JSON file; stdout when omitted")
    p.add_argument("--render", type=Path, help="also write an overlay PNG")

    p = command("eval", cmd_eval, "evaluate a trained run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", default="test", choices=["train", "test"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--location-source", choices=[s.value for s in LocationSource])
    p.add_argument("--count", type=int, default=10, help="locations sampled per scene for the feasibility check")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="report directory")

    p = command("render", cmd_render, "draw skeletons over a scene")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--samples", type=Path, help="sample JSON; ground truth when omitted")
    p.add_argument("--out", type=Path, required=True)

    p = command("ablate", cmd_ablate, "run the ablation grid")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seeds", type=int, default=1, help="training seeds per cell")
    p.add_argument("--workers", type=int, default=1, help="cells trained in parallel")
    _add_config_flags(p)

    p = command("distribution", cmd_distribution, "heatmaps of sampled locations per template class")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command; returns the process exit status."""
    args = build_parser().parse_args(argv)
    if getattr(args, "head", None) is not None:
        args.head = canonical_head(args.head)
    try:
        settings = load_settings(args.config, _overrides(args))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "settings"
        sys.stderr.write(ConfigurationError(f"{location}: {first['msg']}").one_line() + "\n")
        return 2
    except AffordanceError as e:
        sys.stderr.write(e.one_line() + "\n")
        return 2

    setup_logging(settings.logging.level, json_output=settings.logging.json_output)
    add_global_context(command=args.command)
    setup_tracing(settings.telemetry, __version__)
    try:
        status = args.handler(args, settings)
    except ConfigurationError as e:
        sys.stderr.write(e.one_line() + "\n")
        return 2
    except AffordanceError as e:
        logger.debug("Command failed", error_code=e.code, **e.context)
        sys.stderr.write(e.one_line() + "\n")
        return 1
    finally:
        shutdown_tracing()
    if settings.telemetry.metrics_textfile is not None:
        get_metrics_manager().write_textfile(settings.telemetry.metrics_textfile)
    return status
