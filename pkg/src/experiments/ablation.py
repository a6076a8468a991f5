"""Feature Ablation Harness"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import pandas as pd

from src.classify import TrainConfig, train
from src.config import get_settings
from src.signals import NAMED_MASKS, Dataset, FeatureMask, resolve_mask
from src.tracking import log_action

# column prefix -> trained task
ABLATION_TASKS = {"event": "slicenet", "material": "foodnet"}


def _score(job: tuple) -> float:
    dataset, task, config, seed = job
    return float(train(dataset, task, config, seed).report.weighted_f1)


def _masks(masks: Union[Sequence[str], Mapping[str, FeatureMask], None]) -> dict[str, FeatureMask]:
    if masks is None:
        return dict(NAMED_MASKS)
    if isinstance(masks, Mapping):
        return {name: resolve_mask(mask) for name, mask in masks.items()}
    return {name: resolve_mask(name) for name in masks}


def run_ablation(
    dataset: Dataset,
    masks: Union[Sequence[str], Mapping[str, FeatureMask], None] = None,
    tasks: Sequence[str] = ("event", "material"),
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    Weighted F1 of one network per feature mask and task.

    Every network shares the seed, so all masks of a task see the same
    capped rows, the same split and the same shuffling.

    Args:
        dataset: Labeled windows carrying the full feature layout
        masks: Mask names, a name-to-mask mapping, or None for every named mask
        tasks: Keys of ``ABLATION_TASKS``
        config: Optimization settings
        seed: Shared seed
        jobs: Worker processes

    Returns:
        One row per mask with its feature count and an ``<task>_f1`` column per task

    Raises:
        ValueError: A mask selects no features, or an unknown task
    """
    masks = _masks(masks)
    empty = [name for name, mask in masks.items() if mask.size == 0]
    if empty:
        raise ValueError(f"masks select no features: {empty}")
    unknown = sorted(set(tasks) - set(ABLATION_TASKS))
    if unknown:
        raise ValueError(f"unknown ablation tasks {unknown}; choose from {sorted(ABLATION_TASKS)}")

    views = {name: dataset.with_mask(mask) for name, mask in masks.items()}
    work = [(views[name], ABLATION_TASKS[task], config, seed) for name in masks for task in tasks]
    jobs = jobs or get_settings().jobs
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_score, work))
    else:
        scores = [_score(job) for job in work]

    records = []
    it = iter(scores)
    for name, mask in masks.items():
        row = {"mask": name, "features": mask.size}
        for task in tasks:
            row[f"{task}_f1"] = next(it)
        records.append(row)
    table = pd.DataFrame(records, columns=["mask", "features", *(f"{t}_f1" for t in tasks)])

    log_action(
        "RUN_ABLATION",
        seed=seed,
        details={"masks": list(masks), "tasks": list(tasks), "rows": len(dataset)},
    )
    return table


def write_ablation_csv(path: Union[str, Path], table: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.6g")
    return path
