"""Command-line surface: gen | train | eval | plot | bench | keyframe | render.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
All machine-readable outputs are byte-deterministic under --serial --seed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .data.records import load_dataset
from .data.synthetic import generate_synthetic_dataset, load_scene_spec
from .errors import CheckpointError, DataError, InvalidInputError, NumericalError
from .evaluation import (
    DEFAULT_KEYFRAME_POSITIONS,
    build_curves,
    build_report,
    plot_curves,
    read_predictions,
    run_benchmark,
    run_eval,
    run_keyframe_study,
    render_overlays,
    write_predictions,
)
from .network.checkpoint import model_from_checkpoint
from .network.config import EncoderConfig, toy_config
from .objects import load_registry
from .training import TrainConfig, train as run_train, resume as run_resume


def _load_config_file(path):
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable config file {path}: {exc}") from exc


def _apply_serial(serial: bool):
    if serial:
        import torch
        torch.set_num_threads(1)


def _registry_for(dataset, models_path):
    models_dir = Path(models_path) if models_path else dataset.models_dir()
    return load_registry(models_dir)


@click.group()
@click.option("--seed", type=int, default=None, help="Override all seeds.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file mirroring the training settings.")
@click.option("--serial", is_flag=True, help="Single-threaded deterministic mode.")
@click.pass_context
def cli(ctx, seed, config_path, serial):
    """Video 6D object pose estimation toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["config"] = _load_config_file(config_path)
    ctx.obj["serial"] = serial
    _apply_serial(serial)


@cli.command("gen")
@click.argument("spec_path", type=click.Path())
@click.argument("out_dir", type=click.Path())
@click.pass_context
def cmd_gen(ctx, spec_path, out_dir):
    """Render a synthetic dataset from a scene spec."""
    spec = load_scene_spec(spec_path)
    result = generate_synthetic_dataset(spec, out_dir, seed=ctx.obj["seed"])
    click.echo(f"generated {result.num_videos} videos x {result.frames_per_video} frames "
               f"under {result.root}")
    for msg in result.warnings:
        click.echo(f"warning: {msg}", err=True)


@cli.command("train")
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--variant", type=click.Choice(["baseline_rnn", "convgru", "none"]), default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--encoder-size", type=click.Choice(["toy", "default"]), default="toy")
@click.option("--resume", "resume_from", type=click.Path(), default=None,
              help="Continue from a checkpoint instead of starting fresh.")
@click.pass_context
def cmd_train(ctx, dataset_path, out_dir, models_path, variant, epochs, encoder_size, resume_from):
    """Train the pose network and log per-epoch losses and validation AUC."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    file_cfg = dict(ctx.obj["config"])
    encoder_section = file_cfg.pop("encoder", None)
    cfg = TrainConfig.from_dict(file_cfg) if file_cfg else TrainConfig()
    overrides = {}
    if variant is not None:
        overrides["temporal_variant"] = variant
    if epochs is not None:
        overrides["epochs"] = epochs
    if ctx.obj["seed"] is not None:
        overrides["seed"] = ctx.obj["seed"]
    if ctx.obj["serial"]:
        overrides["serial"] = True
    if overrides:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), **overrides})
    if resume_from:
        result = run_resume(resume_from, dataset, registry, out_dir, cfg=cfg)
    else:
        encoder_cfg = (EncoderConfig.from_dict(encoder_section) if encoder_section
                       else (toy_config() if encoder_size == "toy" else EncoderConfig()))
        result = run_train(cfg, dataset, registry, out_dir, encoder_cfg=encoder_cfg)
    last = result.history[-1] if result.history else {}
    click.echo(f"trained {len(result.history)} epochs; "
               f"val ADD-S AUC {last.get('val_add_s_auc')}; log at {result.log_path}")


@cli.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--boxes", "box_source", default="gt",
              help="'gt' or a JSONL file of external detections.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--posecnn-symmetric", is_flag=True,
              help="Report ADD-S in the ADD column for symmetric objects.")
@click.pass_context
def cmd_eval(ctx, checkpoint_path, dataset_path, models_path, box_source, out_dir,
             posecnn_symmetric):
    """Evaluate a checkpoint: predictions file + ADD/ADD-S AUC report."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    model = model_from_checkpoint(checkpoint_path, registry.content_hash())
    records = run_eval(model, dataset, registry, box_source=box_source)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred_path = out / "predictions.jsonl"
    write_predictions(pred_path, records)
    report = build_report(records, dataset, registry,
                          posecnn_symmetric_convention=posecnn_symmetric,
                          metadata={"checkpoint": str(checkpoint_path),
                                    "dataset": str(dataset_path),
                                    "box_source": "gt" if box_source == "gt" else "file"})
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.to_text())
    click.echo(report.to_text(), nl=False)
    click.echo(f"predictions: {pred_path}")


@cli.command("plot")
@click.option("--predictions", "predictions_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--kind", type=click.Choice(["add", "add_s", "rotation", "translation"]),
              required=True)
@click.option("--out", "out_image", type=click.Path(), required=True)
def cmd_plot(predictions_path, dataset_path, models_path, kind, out_image):
    """Accuracy-vs-threshold curves per object plus pooled, with AUC annotated."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    records = read_predictions(predictions_path)
    if not records:
        raise DataError(f"predictions file {predictions_path} is empty")
    curves = build_curves(records, dataset, registry, kind)
    out_image = Path(out_image)
    out_image.parent.mkdir(parents=True, exist_ok=True)
    plot_curves(curves, out_image)
    text_path = out_image.with_suffix(out_image.suffix + ".json")
    text_path.write_text(json.dumps(curves, indent=2, sort_keys=True) + "\n")
    click.echo(f"pooled {kind} AUC: {100 * curves['pooled']['auc']:.2f}")
    click.echo(f"curve image: {out_image}; curve data: {text_path}")


@cli.command("bench")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--frames", type=int, default=100)
@click.option("--warmup", type=int, default=10)
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_bench(checkpoint_path, dataset_path, models_path, frames, warmup, out_path):
    """End-to-end per-frame fps of the checkpoint's temporal variant."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    model = model_from_checkpoint(checkpoint_path, registry.content_hash())
    result = run_benchmark(model, dataset, frames, warmup=warmup)
    click.echo(f"{result.variant}: {result.fps:.2f} fps "
               f"({result.frames} frames in {result.wall_time:.3f}s)")
    if out_path:
        Path(out_path).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")


@cli.command("keyframe")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--positions", default=",".join(str(p) for p in DEFAULT_KEYFRAME_POSITIONS),
              help="Comma-separated clip indices to score.")
@click.option("--out", "out_path", type=click.Path(), default=None)
def cmd_keyframe(checkpoint_path, dataset_path, models_path, positions, out_path):
    """Score predictions at chosen positions inside 20-frame clips."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    model = model_from_checkpoint(checkpoint_path, registry.content_hash())
    try:
        position_list = [int(p) for p in positions.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise InvalidInputError(f"bad --positions value {positions!r}: {exc}") from exc
    study = run_keyframe_study(model, dataset, registry, positions=position_list)
    click.echo(f"{'position':>10}{'count':>8}{'ADD AUC':>12}{'ADD-S AUC':>12}")
    for row in study["rows"]:
        click.echo(f"{row['position']:>10}{row['count']:>8}"
                   f"{row['add_auc']:>12.2f}{row['add_s_auc']:>12.2f}")
    if out_path:
        Path(out_path).write_text(json.dumps(study, indent=2, sort_keys=True) + "\n")


@cli.command("render")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--models", "models_path", type=click.Path(), default=None)
@click.option("--frames", type=int, default=10)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_render(checkpoint_path, dataset_path, models_path, frames, out_dir):
    """Overlay gt (green) and predicted (red) model points on RGB frames."""
    dataset = load_dataset(dataset_path)
    registry = _registry_for(dataset, models_path)
    model = model_from_checkpoint(checkpoint_path, registry.content_hash())
    written = render_overlays(model, dataset, registry, out_dir, frames)
    click.echo(f"wrote {len(written)} overlays under {out_dir}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except (click.UsageError, InvalidInputError) as exc:
        click.echo(f"usage error: {exc}", err=True)
        return 1
    except (DataError, CheckpointError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
