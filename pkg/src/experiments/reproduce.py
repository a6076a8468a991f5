"""End-to-End Reproduction Pipeline"""

import json
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterator, Optional, Union

import numpy as np

from src import __version__
from src.changepoint import label_episode, labels_per_window, timeline_from_skills, write_labels
from src.classify import TrainConfig, TrainResult, save_model, train, write_confusion_csv
from src.config import RunConfig, get_settings
from src.experiments.ablation import run_ablation, write_ablation_csv
from src.sequencer import CuttingModels, SlicingPolicy, benchmark, run_episode, write_bench_csv
from src.signals import write_dataset
from src.signals.dataset import meta_path
from src.simulator import (
    DEFAULT_MATERIALS,
    SOFT_MATERIALS,
    CollectionRecipe,
    boundary_errors,
    generate_dataset,
    get_material,
    load_materials,
    write_episode,
)
from src.tracking import log_action, sha256_file

PathLike = Union[str, Path]

STAGES = ("gen-data", "label", "train", "eval", "ablation", "bench")
MANIFEST_FORMAT = "slicekit.manifest"
LABEL_EPISODES = 3


class PipelineError(RuntimeError):
    """A reproduction stage failed; ``stage`` names it and ``cause`` holds the error."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")


def _write_json(path: Path, data: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True))
    return path


def _train_task(job: tuple) -> TrainResult:
    dataset, task, config, seed = job
    return train(dataset, task, config, seed)


class Reproduction:
    """
    Runs every stage into one output directory and records what it wrote.

    Each stage is wrapped so the first failure surfaces as a
    ``PipelineError`` naming the stage.
    """

    def __init__(
        self,
        out_dir: PathLike,
        config: RunConfig,
        jobs: Optional[int] = None,
        on_stage: Optional[Callable[[str], None]] = None,
    ):
        self.out = Path(out_dir)
        self.config = config
        self.seed = config.seed
        self.digest = config.digest()
        self.jobs = jobs or config.jobs or get_settings().jobs
        self.on_stage = on_stage
        self.outputs: dict[str, str] = {}
        self.materials = load_materials(config.materials) if config.materials else list(DEFAULT_MATERIALS)
        self.train_config = TrainConfig(epochs=config.epochs, max_per_class=config.max_per_class)
        self.dataset = None
        self.results: dict[str, TrainResult] = {}

    def _add(self, path: Path, stage: str) -> None:
        self.outputs[path.relative_to(self.out).as_posix()] = stage

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        if self.on_stage:
            self.on_stage(name)
        try:
            yield
        except Exception as e:
            raise PipelineError(name, e) from e
        log_action("REPRODUCE_STAGE", stage=name, seed=self.seed, config_digest=self.digest)

    # -- stages ---------------------------------------------------------------

    def generate(self) -> None:
        recipe = CollectionRecipe.from_dict(self.config.recipe) if self.config.recipe else CollectionRecipe()
        self.dataset = generate_dataset(self.materials, recipe, self.seed, self.config.label_mode, self.jobs)
        path = write_dataset(
            self.out / "data" / "dataset.jsonl",
            self.dataset,
            info={"seed": self.seed, "config_digest": self.digest},
        )
        self._add(path, "gen-data")
        self._add(meta_path(path), "gen-data")

    def label(self) -> None:
        """Cut one slice from a few items and label the recordings with the changepoint labeler."""
        cuttable = [m for m in self.materials if m.cuttable][:LABEL_EPISODES]
        report = {"seed": self.seed, "config_digest": self.digest, "episodes": {}}
        for material in cuttable:
            log = run_episode(material, slices=1, seed=self.seed, audit=False)
            bundle = write_episode(self.out / "episodes" / material.name, log)
            for name in ("vibration.npy", "forces.npy", "windows.jsonl", "meta.json"):
                self._add(bundle / name, "label")

            segments = label_episode(log.windows, timeline_from_skills(log.skills))
            self._add(write_labels(self.out / "labels" / f"{material.name}.jsonl", segments), "label")
            labeled = labels_per_window(segments)
            errors = boundary_errors(log.events, labeled)
            report["episodes"][material.name] = {
                "windows": len(labeled),
                "agreement": float(np.mean([a == b for a, b in zip(labeled, log.events)])) if labeled else None,
                "onsets": len(errors),
                "onsets_within_two_windows": sum(e is not None and e <= 2 for e in errors),
            }
        self._add(_write_json(self.out / "reports" / "labels.json", report), "label")

    def train(self) -> None:
        work = [(self.dataset, task, self.train_config, self.seed) for task in self.config.tasks]
        if self.jobs > 1 and len(work) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(_train_task, work))
        else:
            results = [_train_task(job) for job in work]
        for task, result in zip(self.config.tasks, results):
            result.model.metadata["config_digest"] = self.digest
            self.results[task] = result
            self._add(save_model(result.model, self.out / "models" / f"{task}.json"), "train")

    def evaluate(self) -> None:
        for task, result in self.results.items():
            report = {**result.report.to_dict(), "task": task, "seed": self.seed, "config_digest": self.digest}
            self._add(_write_json(self.out / "reports" / f"{task}.json", report), "eval")
            if result.report.kind == "classification":
                path = write_confusion_csv(self.out / "reports" / f"{task}_confusion.csv", result.report)
                self._add(path, "eval")

    def ablate(self) -> None:
        table = run_ablation(
            self.dataset,
            self.config.ablation_masks,
            config=self.train_config,
            seed=self.seed,
            jobs=self.jobs,
        )
        self._add(write_ablation_csv(self.out / "reports" / "ablation.csv", table), "ablation")

    def bench(self) -> None:
        names = self.config.bench_materials or [n for n in SOFT_MATERIALS if n in {m.name for m in self.materials}]
        materials = [get_material(name, self.materials) for name in names]
        models = CuttingModels.load(self.out / "models") if self.config.monitor == "classifier" else None
        adaptive_mode = self.config.policy if self.config.policy != "fixed" else "adaptive-lookup"
        table = benchmark(
            materials,
            trials=self.config.trials,
            slices=self.config.slices,
            seed=self.seed,
            monitor=self.config.monitor,
            models=models,
            adaptive_mode=adaptive_mode,
            jobs=self.jobs,
        )
        self._add(write_bench_csv(self.out / "reports" / "bench.csv", table), "bench")

    # -- manifest -------------------------------------------------------------

    def manifest(self) -> dict:
        """Every output with its content hash; no timestamps, so equal runs give equal bytes."""
        return {
            "format": MANIFEST_FORMAT,
            "version": __version__,
            "seed": self.seed,
            "config_digest": self.digest,
            "stages": list(STAGES),
            "outputs": [
                {"path": path, "stage": stage, "sha256": sha256_file(self.out / path)}
                for path, stage in sorted(self.outputs.items())
            ],
        }

    def run(self) -> dict:
        self.out.mkdir(parents=True, exist_ok=True)
        config_path = _write_json(
            self.out / "config.json", self.config.model_dump(mode="json", exclude={"output", "jobs"})
        )
        self._add(config_path, "config")
        steps = {
            "gen-data": self.generate,
            "label": self.label,
            "train": self.train,
            "eval": self.evaluate,
            "ablation": self.ablate,
            "bench": self.bench,
        }
        for name in STAGES:
            with self.stage(name):
                steps[name]()
        manifest = self.manifest()
        _write_json(self.out / "manifest.json", manifest)
        return manifest


def reproduce_all(
    out_dir: PathLike,
    seed: Optional[int] = None,
    config: Optional[RunConfig] = None,
    jobs: Optional[int] = None,
    on_stage: Optional[Callable[[str], None]] = None,
) -> dict:
    """
    Run the whole pipeline and write a manifest of its outputs.

    Stages run in order: dataset generation, changepoint labeling of cut
    recordings, training of every configured task, held-out evaluation,
    feature ablation and the fixed versus adaptive benchmark.

    Args:
        out_dir: Output directory
        seed: Master seed (overrides the config's seed)
        config: Run configuration (defaults when None)
        jobs: Worker processes
        on_stage: Called with each stage name as it starts

    Returns:
        The manifest, also written to ``<out_dir>/manifest.json``

    Raises:
        PipelineError: First failing stage, with the original error as cause
    """
    config = config or RunConfig()
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    manifest = Reproduction(out_dir, config, jobs, on_stage).run()
    log_action(
        "REPRODUCE_ALL",
        seed=config.seed,
        config_digest=manifest["config_digest"],
        details={"outputs": len(manifest["outputs"])},
    )
    return manifest
