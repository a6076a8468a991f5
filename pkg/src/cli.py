"""Slicekit CLI Interface"""

import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import click

from src import __version__
from src.config import ConfigError, RunConfig, get_settings, load_run_config

EXIT_CONFIG = 2
EXIT_PIPELINE = 3

POLICY_CHOICES = ["adaptive", "adaptive-lookup", "adaptive-regression", "fixed"]


def run_options(command):
    """Options every command accepts."""
    command = click.option("--jobs", type=int, default=None, help="Worker processes")(command)
    command = click.option(
        "--config",
        "config_path",
        type=click.Path(path_type=Path),
        default=None,
        help="JSON run configuration",
    )(command)
    command = click.option("--seed", type=int, default=None, help="Master seed")(command)
    return command


def _resolve(config_path: Optional[Path], **overrides) -> RunConfig:
    """Run configuration from file and flags; exits with code 2 when invalid."""
    try:
        return load_run_config(config_path, **overrides)
    except ConfigError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)


@contextmanager
def _stage(name: str):
    """Report domain failures on stderr and exit with code 3."""
    from src.experiments import PipelineError

    try:
        yield
    except ConfigError as e:
        click.echo(f"❌ Configuration error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except PipelineError as e:
        click.echo(f"❌ Stage '{e.stage}' failed: {type(e.cause).__name__}: {e.cause}", err=True)
        sys.exit(EXIT_PIPELINE)
    except Exception as e:
        click.echo(f"❌ {name} failed: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_PIPELINE)


@contextmanager
def _settings_overrides(**values):
    """Apply flag overrides to settings while the block runs, then restore the environment."""
    saved = {}
    for key, value in values.items():
        if value is not None:
            name = f"SLICEKIT_{key.upper()}"
            saved[name] = os.environ.get(name)
            os.environ[name] = str(value)
    if saved:
        get_settings.cache_clear()
    try:
        yield
    finally:
        for name, previous in saved.items():
            if previous is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = previous
        if saved:
            get_settings.cache_clear()


def _materials(config: RunConfig) -> list:
    from src.simulator import DEFAULT_MATERIALS, load_materials

    return load_materials(config.materials) if config.materials else list(DEFAULT_MATERIALS)


def _policy(name: str, params: Optional[Path] = None):
    from src.sequencer import ParamTable, SlicingPolicy

    if name == "fixed":
        return SlicingPolicy.fixed()
    mode = "adaptive-lookup" if name == "adaptive" else name
    return SlicingPolicy(mode, table=ParamTable.load(params) if params else None)


def _write_json(path: Path, data: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    return path


@click.group()
@click.version_option(version=__version__, prog_name="slicekit")
def cli():
    """Slicekit - Adaptive food cutting with learned skills and event monitoring."""
    pass


# -- simulator ----------------------------------------------------------------


@cli.group()
def sim():
    """Synthetic cutting rig."""
    pass


@sim.command("gen-data")
@click.option("--materials", type=click.Path(path_type=Path), default=None, help="Material library JSON")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("data"), help="Output directory")
@click.option("--label-mode", type=click.Choice(["truth", "labeler"]), default=None)
@run_options
def gen_data(materials, out_dir, label_mode, seed, config_path, jobs):
    """Record the scripted collection and write a featurized dataset."""
    config = _resolve(
        config_path, subcommand="sim gen-data", materials=materials, seed=seed, jobs=jobs, label_mode=label_mode
    )
    digest = config.digest()

    with _stage("gen-data"):
        from src.signals import write_dataset
        from src.simulator import CollectionRecipe, generate_dataset
        from src.tracking import log_action

        library = _materials(config)
        recipe = CollectionRecipe.from_dict(config.recipe) if config.recipe else CollectionRecipe()
        click.echo(f"🔪 Collecting on {len(library)} materials (seed {config.seed})...")
        dataset = generate_dataset(library, recipe, config.seed, config.label_mode, config.jobs)
        path = write_dataset(
            out_dir / "dataset.jsonl", dataset, info={"seed": config.seed, "config_digest": digest}
        )
        log_action(
            "GENERATE_DATASET",
            seed=config.seed,
            config_digest=digest,
            details={"path": str(path), "rows": len(dataset), "materials": [m.name for m in library]},
        )

    labels = dataset.meta["label"].value_counts()
    click.echo(f"✅ Wrote {len(dataset)} windows to {path}")
    for label, count in labels.items():
        click.echo(f"   {label}: {count}")


@sim.command("episode")
@click.option("--material", required=True, help="Material name")
@click.option("--slices", type=int, default=None)
@click.option("--policy", type=click.Choice(POLICY_CHOICES), default=None)
@click.option("--materials", type=click.Path(path_type=Path), default=None, help="Material library JSON")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True, help="Bundle directory")
@run_options
def sim_episode(material, slices, policy, materials, out_dir, seed, config_path, jobs):
    """Record one oracle-monitored cutting episode as a window bundle."""
    config = _resolve(
        config_path, subcommand="sim episode", materials=materials, slices=slices, seed=seed, jobs=jobs,
        policy=policy and ("adaptive-lookup" if policy == "adaptive" else policy),
    )

    with _stage("sim episode"):
        from src.sequencer import run_episode
        from src.simulator import get_material, write_episode

        spec = get_material(material, _materials(config))
        log = run_episode(spec, policy=_policy(config.policy), slices=config.slices, monitor="oracle", seed=config.seed)
        bundle = write_episode(out_dir, log)

    click.echo(f"✅ {log.outcome}: {log.slices_completed}/{log.slices_requested} slices, {len(log.windows)} windows")
    click.echo(f"📁 Bundle written to {bundle}")


@sim.command("materials")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=Path("materials.json"))
def sim_materials(out_path):
    """Write the default material library for editing."""
    from src.simulator import DEFAULT_MATERIALS, save_materials

    path = save_materials(out_path, DEFAULT_MATERIALS)
    click.echo(f"✅ Wrote {len(DEFAULT_MATERIALS)} materials to {path}")


# -- labeling, training, evaluation ---------------------------------------------


@cli.command()
@click.option("--episode", "episode_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="Labels JSON-lines")
@click.option("--hazard", type=float, default=None, help="Changepoint hazard")
@click.option("--threshold", type=float, default=None, help="Force gradient threshold (N per sample)")
@run_options
def label(episode_dir, out_path, hazard, threshold, seed, config_path, jobs):
    """Segment a recorded episode into contact event labels."""
    config = _resolve(config_path, subcommand="label", seed=seed, jobs=jobs)

    with _stage("label"):
        from src.changepoint import label_episode, labels_per_window, write_labels
        from src.simulator import boundary_errors, read_episode
        from src.tracking import log_action

        log = read_episode(episode_dir)
        segments = label_episode(log.windows, log.timeline, hazard=hazard, threshold=threshold)
        path = write_labels(out_path, segments)
        labeled = labels_per_window(segments)
        agreement = sum(a == b for a, b in zip(labeled, log.events)) / max(len(labeled), 1)
        errors = boundary_errors(log.events, labeled)
        log_action(
            "LABEL_EPISODE",
            seed=config.seed,
            config_digest=config.digest(),
            details={"episode": str(episode_dir), "segments": len(segments), "agreement": agreement},
        )

    click.echo(f"✅ {len(segments)} segments written to {path}")
    click.echo(f"📊 Agreement with recorded truth: {agreement:.3f}")
    if errors:
        within = sum(e is not None and e <= 2 for e in errors)
        click.echo(f"📍 Contact onsets within two windows: {within}/{len(errors)}")


@cli.command()
@click.option("--task", type=click.Choice(["slicenet", "hitting", "slicing", "foodnet", "regress"]), required=True)
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="Dataset JSON-lines")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="Model JSON")
@click.option("--mask", default=None, help="Named feature mask")
@click.option("--epochs", type=int, default=None)
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None, help="Held-out report JSON")
@run_options
def train(task, data_path, out_path, mask, epochs, report_path, seed, config_path, jobs):
    """Train one network on a dataset."""
    config = _resolve(
        config_path, subcommand="train", dataset=data_path, mask=mask, epochs=epochs, seed=seed, jobs=jobs
    )
    digest = config.digest()

    with _stage("train"):
        from src.classify import TrainConfig, save_model
        from src.classify import train as train_model
        from src.signals import read_dataset
        from src.tracking import log_action

        dataset = read_dataset(config.dataset).with_mask(config.mask)
        click.echo(f"🧠 Training {task} on {len(dataset)} windows ({dataset.mask.size} features)...")
        result = train_model(
            dataset,
            task,
            TrainConfig(epochs=config.epochs, max_per_class=config.max_per_class),
            seed=config.seed,
        )
        result.model.metadata["config_digest"] = digest
        path = save_model(result.model, out_path)
        if report_path:
            _write_json(report_path, {**result.report.to_dict(), "task": task, "seed": config.seed, "config_digest": digest})
        log_action(
            "TRAIN_MODEL",
            seed=config.seed,
            config_digest=digest,
            details={"task": task, "model": str(path), "mask": config.mask, "rows": len(dataset)},
        )

    if result.report.kind == "classification":
        click.echo(f"📊 Held-out weighted F1: {result.report.weighted_f1:.4f}")
    else:
        mae = result.report.mean_absolute_error
        if mae is not None:
            click.echo(f"📊 Held-out MAE: phi_x {mae[0]:.5f} m, phi_z {mae[1]:.5f} m")
    click.echo(f"✅ Model written to {path}")


@cli.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="Dataset JSON-lines")
@click.option("--report", "report_path", type=click.Path(path_type=Path), required=True, help="Report JSON")
@click.option("--confusion", "confusion_path", type=click.Path(path_type=Path), default=None, help="Confusion CSV")
@click.option("--lomo", "lomo_path", type=click.Path(path_type=Path), default=None,
              help="Leave-one-material-out regression table CSV")
@click.option("--epochs", type=int, default=None)
@run_options
def evaluate(model_path, data_path, report_path, confusion_path, lomo_path, epochs, seed, config_path, jobs):
    """Score a trained network on a labeled dataset."""
    config = _resolve(config_path, subcommand="eval", dataset=data_path, epochs=epochs, seed=seed, jobs=jobs)
    digest = config.digest()

    with _stage("eval"):
        from src.classify import TrainConfig, evaluate as evaluate_model
        from src.classify import leave_one_material_out, load_model, write_confusion_csv
        from src.signals import FeatureMask, read_dataset
        from src.tracking import log_action

        model = load_model(model_path)
        dataset = read_dataset(config.dataset)
        if model.feature_mask:
            dataset = dataset.with_mask(FeatureMask.from_dict(model.feature_mask))
        report = evaluate_model(model, dataset)
        _write_json(report_path, {**report.to_dict(), "model": str(model_path), "seed": config.seed, "config_digest": digest})
        if confusion_path and report.kind == "classification":
            write_confusion_csv(confusion_path, report)
        if lomo_path:
            table = leave_one_material_out(
                dataset, TrainConfig(epochs=config.epochs, max_per_class=config.max_per_class), seed=config.seed
            )
            lomo_path.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(lomo_path, index=False, float_format="%.6g")
        log_action(
            "EVALUATE_MODEL",
            seed=config.seed,
            config_digest=digest,
            details={"model": str(model_path), "kind": report.kind, "weighted_f1": report.weighted_f1},
        )

    if report.kind == "classification":
        click.echo(f"📊 Weighted F1: {report.weighted_f1:.4f} over {int(report.support.sum())} windows")
    click.echo(f"✅ Report written to {report_path}")


# -- movement primitives ----------------------------------------------------------


@cli.group()
def dmp():
    """Movement primitives learned from demonstrations."""
    pass


@dmp.command("demos")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True, help="Demo directory")
@click.option("--count", type=int, default=10, show_default=True)
@run_options
def dmp_demos(out_dir, count, seed, config_path, jobs):
    """Write synthetic slicing demonstrations as t,x,y,z CSV files."""
    config = _resolve(config_path, subcommand="dmp demos", seed=seed, jobs=jobs)

    with _stage("dmp demos"):
        from src.dmp import save_trajectory_csv, synthetic_slicing_demos

        demos = synthetic_slicing_demos(count, seed=config.seed)
        for i, demo in enumerate(demos):
            save_trajectory_csv(out_dir / f"demo_{i:02d}.csv", demo)

    click.echo(f"✅ Wrote {len(demos)} demonstrations to {out_dir}")


@dmp.command("fit")
@click.option("--demos", "demo_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="Model JSON")
@click.option("--ridge", type=float, default=None, help="Ridge coefficient")
@click.option("--material-feature/--no-material-feature", default=True, show_default=True,
              help="Add the material row scaled by the demonstrated displacement")
@run_options
def dmp_fit(demo_dir, out_path, ridge, material_feature, seed, config_path, jobs):
    """Fit X and Z slicing primitives to demonstrations."""
    import numpy as np

    config = _resolve(config_path, subcommand="dmp fit", seed=seed, jobs=jobs)

    with _stage("dmp fit"):
        from src.dmp import attach_material_feature, fit_weights, load_demos, save_dmp_model
        from src.tracking import log_action

        demos = load_demos(demo_dir)
        fitted = fit_weights(demos, ridge_lambda=ridge, axes=("x", "z"))
        if material_feature:
            for axis, primitive in fitted.items():
                scale = float(np.mean([np.abs(d.axis(axis) - d.axis(axis)[0]).max() for d in demos]))
                fitted[axis] = attach_material_feature(primitive, scale)
        path = save_dmp_model(out_path, fitted)
        log_action(
            "FIT_DMP",
            seed=config.seed,
            config_digest=config.digest(),
            details={"demos": len(demos), "model": str(path), "material_feature": material_feature},
        )

    click.echo(f"✅ Fitted {len(fitted)} axes from {len(demos)} demonstrations -> {path}")


@dmp.command("rollout")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--phi-x", type=float, required=True, help="Slicing amplitude (m)")
@click.option("--phi-z", type=float, required=True, help="Slicing height (m)")
@click.option("--start", nargs=3, type=float, default=(0.0, 0.0, 0.0), help="Start x y z (m)")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None, help="Trajectory CSV")
@run_options
def dmp_rollout(model_path, phi_x, phi_z, start, out_path, seed, config_path, jobs):
    """Roll out one slicing action from a fitted model."""
    _resolve(config_path, subcommand="dmp rollout", seed=seed, jobs=jobs)

    with _stage("dmp rollout"):
        from src.dmp import SlicingSkill, load_dmp_model, save_trajectory_csv

        skill = SlicingSkill(load_dmp_model(model_path))
        trajectory = skill.trajectory(dict(zip(("x", "y", "z"), start)), phi_x, phi_z)
        if out_path:
            save_trajectory_csv(out_path, trajectory)

    x, z = trajectory.axis("x"), trajectory.axis("z")
    click.echo(f"🔪 {trajectory.times.size} samples over {trajectory.times[-1]:.2f} s")
    click.echo(f"   x range {x.min():.4f} .. {x.max():.4f} m, z end {z[-1]:.4f} m")
    if out_path:
        click.echo(f"✅ Trajectory written to {out_path}")


# -- cutting ------------------------------------------------------------------------


@cli.command()
@click.option("--material", required=True, help="Material name")
@click.option("--slices", type=int, default=None)
@click.option("--policy", type=click.Choice(POLICY_CHOICES), default=None)
@click.option("--monitor", type=click.Choice(["oracle", "classifier"]), default=None)
@click.option("--models", type=click.Path(path_type=Path), default=None, help="Directory of trained networks")
@click.option("--materials", type=click.Path(path_type=Path), default=None, help="Material library JSON")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Material-to-parameter table JSON")
@click.option("--thickness", type=float, default=None, help="Slice thickness (m)")
@click.option("--lift-height", type=float, default=None, help="Lift after board contact (m)")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None, help="Episode report JSON")
@click.option("--bundle", "bundle_dir", type=click.Path(path_type=Path), default=None, help="Window bundle directory")
@run_options
def cut(material, slices, policy, monitor, models, materials, params_path, thickness, lift_height, out_path,
        bundle_dir, seed, config_path, jobs):
    """Cut slices from one item with the closed-loop state machine."""
    config = _resolve(
        config_path, subcommand="cut", materials=materials, models=models, slices=slices, monitor=monitor,
        seed=seed, jobs=jobs, policy=policy and ("adaptive-lookup" if policy == "adaptive" else policy),
    )
    digest = config.digest()

    with _settings_overrides(slice_thickness=thickness, lift_height=lift_height), _stage("cut"):
        from src.sequencer import CuttingModels, run_episode
        from src.simulator import get_material, write_episode

        spec = get_material(material, _materials(config))
        networks = CuttingModels.load(config.models) if config.models else None
        log = run_episode(
            spec,
            networks,
            _policy(config.policy, params_path),
            slices=config.slices,
            monitor=config.monitor,
            seed=config.seed,
        )
        if out_path:
            _write_json(out_path, {**log.report(), "config_digest": digest})
        if bundle_dir:
            write_episode(bundle_dir, log)

    glyph = "✅" if log.outcome == "completed" else "⚠️ "
    click.echo(f"{glyph} {log.outcome}: {log.slices_completed}/{log.slices_requested} slices of {spec.name}")
    if log.material_prediction:
        click.echo(f"🔍 Recognized as {log.material_prediction}")
    for i, (seconds, actions) in enumerate(zip(log.slice_times, log.slice_actions)):
        click.echo(f"   slice {i + 1}: {seconds:.2f} s, {actions} slicing actions")
    for failure in log.failures:
        state = "recovered" if failure["recovered"] else "not recovered"
        click.echo(f"   {failure['kind']} on slice {failure['slice'] + 1} ({state})")


@cli.command()
@click.option("--materials", type=click.Path(path_type=Path), default=None, help="Material library JSON")
@click.option("--trials", type=int, default=None)
@click.option("--slices", type=int, default=None)
@click.option("--policy", type=click.Choice(["adaptive", "adaptive-lookup", "adaptive-regression"]), default=None,
              help="Adaptive policy compared against the fixed one")
@click.option("--monitor", type=click.Choice(["oracle", "classifier"]), default=None)
@click.option("--models", type=click.Path(path_type=Path), default=None, help="Directory of trained networks")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="Table CSV")
@run_options
def bench(materials, trials, slices, policy, monitor, models, out_path, seed, config_path, jobs):
    """Compare fixed and adaptive slicing over seeded trials."""
    config = _resolve(
        config_path, subcommand="bench", materials=materials, models=models, trials=trials, slices=slices,
        monitor=monitor, seed=seed, jobs=jobs,
        policy=policy and ("adaptive-lookup" if policy == "adaptive" else policy),
    )

    with _stage("bench"):
        import pandas as pd

        from src.sequencer import CuttingModels, benchmark, write_bench_csv
        from src.simulator import SOFT_MATERIALS, get_material

        library = _materials(config)
        if config.bench_materials:
            items = [get_material(name, library) for name in config.bench_materials]
        elif config.materials:
            items = library
        else:
            items = [get_material(name, library) for name in SOFT_MATERIALS]
        networks = CuttingModels.load(config.models) if config.models else None
        adaptive_mode = config.policy if config.policy != "fixed" else "adaptive-lookup"
        click.echo(f"🔪 Benchmarking {len(items)} materials x {config.trials} trials...")
        table = benchmark(
            items,
            trials=config.trials,
            slices=config.slices,
            seed=config.seed,
            monitor=config.monitor,
            models=networks,
            adaptive_mode=adaptive_mode,
            jobs=config.jobs,
        )
        path = write_bench_csv(out_path, table)

    with pd.option_context("display.width", 160, "display.max_columns", None):
        click.echo(table[["material", "fixed_actions", "adaptive_actions", "actions_change_pct"]].to_string(index=False))
    click.echo(f"✅ Table written to {path}")


@cli.command()
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True, help="Full-feature dataset")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="Table CSV")
@click.option("--masks", "-m", multiple=True, help="Named masks (default all)")
@click.option("--epochs", type=int, default=None)
@run_options
def ablate(data_path, out_path, masks, epochs, seed, config_path, jobs):
    """Train event and material networks on each feature subset."""
    config = _resolve(
        config_path, subcommand="ablate", dataset=data_path, ablation_masks=list(masks) or None, epochs=epochs,
        seed=seed, jobs=jobs,
    )

    with _stage("ablate"):
        from src.classify import TrainConfig
        from src.experiments import run_ablation, write_ablation_csv
        from src.signals import read_dataset

        dataset = read_dataset(config.dataset)
        click.echo(f"🧪 Ablating {len(config.ablation_masks or []) or 'all'} masks on {len(dataset)} windows...")
        table = run_ablation(
            dataset,
            config.ablation_masks,
            config=TrainConfig(epochs=config.epochs, max_per_class=config.max_per_class),
            seed=config.seed,
            jobs=config.jobs,
        )
        path = write_ablation_csv(out_path, table)

    click.echo(table.to_string(index=False, float_format="%.3f"))
    click.echo(f"✅ Table written to {path}")


@cli.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("reproduce"), help="Output directory")
@run_options
def reproduce(out_dir, seed, config_path, jobs):
    """Run the whole pipeline and write a hashed manifest of its outputs."""
    config = _resolve(config_path, subcommand="reproduce", output=out_dir, seed=seed, jobs=jobs)

    with _stage("reproduce"):
        from src.experiments import reproduce_all

        manifest = reproduce_all(
            out_dir,
            config=config,
            jobs=config.jobs,
            on_stage=lambda name: click.echo(f"▶️  {name}"),
        )

    click.echo(f"✅ {len(manifest['outputs'])} outputs, config {manifest['config_digest'][:12]}")
    click.echo(f"📄 Manifest written to {out_dir / 'manifest.json'}")


if __name__ == "__main__":
    cli()
