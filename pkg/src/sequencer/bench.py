"""Adaptive versus Fixed Slicing Benchmark"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import get_settings
from src.sequencer.adaptation import CuttingModels, SlicingPolicy
from src.sequencer.episode import run_episode
from src.simulator import MaterialSpec
from src.tracking import log_action

POLICIES = ("fixed", "adaptive")

BENCH_COLUMNS = [
    "material",
    "trials",
    "fixed_seconds",
    "adaptive_seconds",
    "seconds_change_pct",
    "fixed_actions",
    "adaptive_actions",
    "actions_change_pct",
    "fixed_slices",
    "adaptive_slices",
    "fixed_failures",
    "adaptive_failures",
    "adaptive_uncuttable",
]


def _bench_episode(job: tuple) -> dict:
    material, policy, slices, seed, monitor, models = job
    log = run_episode(material, models, policy, slices, monitor=monitor, seed=seed, audit=False)
    return {
        "material": material.name,
        "policy": "fixed" if policy.mode == "fixed" else "adaptive",
        "seed": seed,
        "outcome": log.outcome,
        "slices": log.slices_completed,
        "slice_seconds": list(log.slice_times),
        "slice_actions": list(log.slice_actions),
        "failures": len(log.failures),
    }


def _mean(values: list) -> float:
    return float(np.mean(values)) if values else float("nan")


def _change(before: float, after: float) -> float:
    if not np.isfinite(before) or not np.isfinite(after) or before == 0:
        return float("nan")
    return 100.0 * (after - before) / before


def run_trials(
    materials: Sequence[MaterialSpec],
    trials: int = 5,
    slices: int = 3,
    seed: int = 0,
    monitor: str = "oracle",
    models: Optional[CuttingModels] = None,
    adaptive_mode: str = "adaptive-lookup",
    jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    One row per (material, policy, trial) episode.

    Both policies of a trial share the world seed ``seed + trial``.
    Episodes are independent, so ``jobs > 1`` runs them in a process pool;
    row order never depends on the worker count.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if not materials:
        raise ValueError("benchmark needs at least one material")
    policies = {"fixed": SlicingPolicy.fixed(), "adaptive": SlicingPolicy(adaptive_mode)}
    jobs_list = [
        (material, policies[name], slices, seed + trial, monitor, models)
        for material in materials
        for name in POLICIES
        for trial in range(trials)
    ]
    jobs = jobs or get_settings().jobs
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_episode, jobs_list))
    else:
        rows = [_bench_episode(job) for job in jobs_list]
    return pd.DataFrame(rows)


def summarize(episodes: pd.DataFrame) -> pd.DataFrame:
    """
    Per-material comparison table with a closing mean row.

    Seconds and actions are averaged over every completed slice of every
    trial; change columns are percentages relative to the fixed policy.
    """
    records = []
    for material, group in episodes.groupby("material", sort=False):
        row = {"material": material, "trials": int(group["seed"].nunique())}
        for name in POLICIES:
            part = group[group["policy"] == name]
            row[f"{name}_seconds"] = _mean([t for ts in part["slice_seconds"] for t in ts])
            row[f"{name}_actions"] = _mean([a for acts in part["slice_actions"] for a in acts])
            row[f"{name}_slices"] = int(part["slices"].sum())
            row[f"{name}_failures"] = int(part["failures"].sum())
        adaptive = group[group["policy"] == "adaptive"]
        row["adaptive_uncuttable"] = int((adaptive["outcome"] == "uncuttable").sum())
        row["seconds_change_pct"] = _change(row["fixed_seconds"], row["adaptive_seconds"])
        row["actions_change_pct"] = _change(row["fixed_actions"], row["adaptive_actions"])
        records.append(row)

    table = pd.DataFrame(records, columns=BENCH_COLUMNS)
    mean = {"material": "mean", "trials": int(table["trials"].max()) if len(table) else 0}
    for column in BENCH_COLUMNS[2:]:
        values = table[column].astype(float)
        mean[column] = float(values.mean()) if values.notna().any() else float("nan")
    mean["seconds_change_pct"] = _change(mean["fixed_seconds"], mean["adaptive_seconds"])
    mean["actions_change_pct"] = _change(mean["fixed_actions"], mean["adaptive_actions"])
    return pd.concat([table, pd.DataFrame([mean], columns=BENCH_COLUMNS)], ignore_index=True)


def benchmark(
    materials: Sequence[MaterialSpec],
    trials: int = 5,
    slices: int = 3,
    seed: int = 0,
    monitor: str = "oracle",
    models: Optional[CuttingModels] = None,
    adaptive_mode: str = "adaptive-lookup",
    jobs: Optional[int] = None,
) -> pd.DataFrame:
    """
    Compare the fixed conservative policy with adaptive slicing.

    Args:
        materials: Items to cut
        trials: Seeded episodes per material and policy
        slices: Slices requested per episode
        seed: First world seed
        monitor: "oracle" or "classifier"
        models: Networks for classifier monitoring
        adaptive_mode: "adaptive-lookup" or "adaptive-regression"
        jobs: Worker processes

    Returns:
        Table with per-slice seconds, actions and failures for both
        policies and their change in percent
    """
    episodes = run_trials(materials, trials, slices, seed, monitor, models, adaptive_mode, jobs)
    table = summarize(episodes)
    log_action(
        "BENCHMARK",
        seed=seed,
        details={
            "materials": [m.name for m in materials],
            "trials": trials,
            "slices": slices,
            "monitor": monitor,
            "adaptive_mode": adaptive_mode,
        },
    )
    return table


def write_bench_csv(path: Union[str, Path], table: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.6g")
    return path
