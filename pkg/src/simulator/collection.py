"""Scripted Data Collection in Simulation"""

import math
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from src.changepoint import label_episode, labels_per_window, timeline_from_skills
from src.config import get_settings
from src.events import (
    IN_AIR,
    IN_AIR_DMP,
    MOVE_DOWN_ON_BOARD,
    MOVE_DOWN_ONTO_OBJECT,
    SCRAPE_BOARD,
    SCRAPE_OBJECT,
    SLICING_ACTION,
)
from src.signals import FULL_MASK, Dataset, DatasetRow, SensorWindow, featurize_windows
from src.simulator.commands import CommandSource, ConstantVelocity, DepthGuard, slicing_playback
from src.simulator.episodes import advance_window
from src.simulator.materials import MaterialSpec
from src.simulator.world import BOARD, OBJECT, WorldState, new_world

LABEL_MODES = ("truth", "labeler")
SLICING_ACTION_WINDOWS = 10
CONTACT_DWELL = 2
MAX_APPROACH_WINDOWS = 60


@dataclass(frozen=True)
class CollectionRecipe:
    """
    How many of each scripted action to record.

    Ranges are inclusive (low, high) draws per material; slicing is counted
    in windows and recorded as whole one-second actions. In-air primitive
    executions are a total over the whole dataset.
    """

    board_hits: tuple[int, int] = (10, 15)
    board_scrapes: int = 2
    object_hits: tuple[int, int] = (10, 15)
    object_scrapes: int = 2
    slicing_windows: tuple[int, int] = (20, 40)
    in_air_dmp: int = 10
    scrape_windows: int = 10

    def __post_init__(self):
        for name in ("board_hits", "object_hits", "slicing_windows"):
            low, high = getattr(self, name)
            if not 0 <= low <= high:
                raise ValueError(f"{name} must be an ordered non-negative range")
            object.__setattr__(self, name, (int(low), int(high)))
        if min(self.board_scrapes, self.object_scrapes, self.in_air_dmp) < 0 or self.scrape_windows < 1:
            raise ValueError("action counts must be non-negative")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "CollectionRecipe":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


@dataclass
class CollectedEpisode:
    """One scripted action with its windows and per-window truth."""

    episode_id: str
    material: str
    params: tuple[float, float]
    windows: list[SensorWindow] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    skills: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)


def _record(
    episode: CollectedEpisode,
    state: WorldState,
    source: CommandSource,
    skill: str,
    n_windows: Optional[int] = None,
    until_contact: bool = False,
) -> WorldState:
    """Record windows for a fixed count, or until contact plus a short dwell."""
    remaining = n_windows
    limit = MAX_APPROACH_WINDOWS if until_contact else n_windows
    for _ in range(limit):
        state, window, event, records = advance_window(state, source)
        episode.windows.append(window)
        episode.events.append(event)
        episode.skills.append(skill)
        if until_contact:
            if remaining is None and any(r.impact for r in records):
                remaining = CONTACT_DWELL
            elif remaining is not None:
                remaining -= 1
            if remaining == 0:
                break
    return state


def board_hit(material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode) -> None:
    """Drop the knife onto bare board beside the item."""
    state = new_world(
        material,
        seed=int(rng.integers(2**31)),
        knife_x=material.width + rng.uniform(0.03, 0.08),
        knife_z=rng.uniform(0.03, 0.05),
    )
    source = ConstantVelocity(0.0, -rng.uniform(0.03, 0.06))
    _record(episode, state, source, MOVE_DOWN_ON_BOARD, until_contact=True)


def object_hit(material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode) -> None:
    """Drop the knife onto the item top."""
    state = new_world(
        material,
        seed=int(rng.integers(2**31)),
        knife_x=rng.uniform(0.2, 0.8) * material.width,
        knife_z=material.height + rng.uniform(0.02, 0.04),
    )
    source = ConstantVelocity(0.0, -rng.uniform(0.03, 0.06))
    _record(episode, state, source, MOVE_DOWN_ONTO_OBJECT, until_contact=True)


def board_scrape(
    material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode, n_windows: int
) -> None:
    """Drag the knife along the board away from the item."""
    state = new_world(material, seed=int(rng.integers(2**31)), knife_z=0.0)
    state = replace(state, knife_x=material.width + 0.05, contact_at=BOARD)
    source = ConstantVelocity(rng.uniform(0.02, 0.05), -0.005)
    _record(episode, state, source, SCRAPE_BOARD, n_windows)


def object_scrape(
    material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode, n_windows: int
) -> None:
    """Drag the knife across the item top without pressing."""
    x = 0.9 * material.width
    state = new_world(material, seed=int(rng.integers(2**31)), knife_x=x, knife_z=material.height)
    state = replace(state, site_x=x, contact_at=OBJECT)
    source = ConstantVelocity(-rng.uniform(0.02, 0.04), 0.0)
    _record(episode, state, source, SCRAPE_OBJECT, n_windows)


def slicing_action(material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode) -> None:
    """
    One slicing primitive with the material's own parameters.

    The knife starts resting on the item top and is kept well clear of the
    board, so every window stays in contact with the item.
    """
    x = rng.uniform(0.3, 0.7) * material.width
    state = new_world(material, seed=int(rng.integers(2**31)), knife_x=x, knife_z=material.height)
    state = replace(state, site_x=x, contact_at=OBJECT)
    source = DepthGuard(slicing_playback(*material.true_params), floor=0.3 * material.height)
    _record(episode, state, source, SLICING_ACTION, SLICING_ACTION_WINDOWS)


def in_air_dmp(material: MaterialSpec, rng: np.random.Generator, episode: CollectedEpisode) -> None:
    """Execute a slicing primitive well above everything."""
    state = new_world(
        material,
        seed=int(rng.integers(2**31)),
        knife_x=material.width + 0.1,
        knife_z=material.height + 0.1,
    )
    _record(episode, state, slicing_playback(*material.true_params), IN_AIR_DMP, SLICING_ACTION_WINDOWS)


def _draw(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def material_episodes(
    material: MaterialSpec, recipe: CollectionRecipe, rng: np.random.Generator
) -> list[CollectedEpisode]:
    """All scripted actions recorded for one material."""
    plan: list[tuple[str, int, Callable]] = [
        ("board-hit", _draw(rng, recipe.board_hits), board_hit),
        (
            "board-scrape",
            recipe.board_scrapes,
            lambda m, r, e: board_scrape(m, r, e, recipe.scrape_windows),
        ),
        ("object-hit", _draw(rng, recipe.object_hits), object_hit),
        (
            "object-scrape",
            recipe.object_scrapes,
            lambda m, r, e: object_scrape(m, r, e, recipe.scrape_windows),
        ),
    ]
    if material.cuttable:
        actions = math.ceil(_draw(rng, recipe.slicing_windows) / SLICING_ACTION_WINDOWS)
        plan.append(("slice", actions, slicing_action))

    episodes = []
    for action, count, run in plan:
        for k in range(count):
            episode = CollectedEpisode(f"{material.name}-{action}-{k:02d}", material.name, material.true_params)
            run(material, rng, episode)
            episodes.append(episode)
    return episodes


def in_air_episodes(
    materials: Sequence[MaterialSpec], count: int, rng: np.random.Generator
) -> list[CollectedEpisode]:
    """Primitive executions in free space, cycling through the materials' parameters."""
    episodes = []
    for k in range(count):
        material = materials[k % len(materials)]
        episode = CollectedEpisode(f"in-air-{k:02d}", "", (0.0, 0.0))
        in_air_dmp(material, rng, episode)
        episodes.append(episode)
    return episodes


def label_windows(episode: CollectedEpisode, mode: str) -> list[str]:
    """Ground-truth labels, or labels inferred by the changepoint labeler."""
    if mode == "truth":
        return list(episode.events)
    segments = label_episode(episode.windows, timeline_from_skills(episode.skills))
    return labels_per_window(segments)


def contact_onsets(labels: Sequence[str]) -> list[int]:
    """Windows where a contact run starts after free motion."""
    return [i for i in range(1, len(labels)) if labels[i] != IN_AIR and labels[i - 1] == IN_AIR]


def boundary_errors(truth: Sequence[str], labeled: Sequence[str]) -> list[Optional[int]]:
    """
    Distance from each true contact onset to the nearest labeled onset.

    None when the labeler found no onset at all.
    """
    found = contact_onsets(labeled)
    errors = []
    for onset in contact_onsets(truth):
        errors.append(min(abs(onset - f) for f in found) if found else None)
    return errors


def generate_dataset(
    materials: Sequence[MaterialSpec],
    recipe: Optional[CollectionRecipe] = None,
    seed: int = 0,
    label_mode: str = "truth",
    jobs: Optional[int] = None,
) -> Dataset:
    """
    Record the scripted collection for every material and featurize it.

    Args:
        materials: Food items to collect on (at least one)
        recipe: Action counts (default recipe when None)
        seed: Master seed; every draw derives from it
        label_mode: "truth" for simulator labels, "labeler" to run the
            changepoint labeler on each action instead
        jobs: Feature extraction workers

    Returns:
        Dataset with full-mask features; ``info`` records the seed, recipe,
        sample rates and, in labeler mode, agreement with the truth
    """
    if not materials:
        raise ValueError("dataset generation needs at least one material")
    if label_mode not in LABEL_MODES:
        raise ValueError(f"label_mode must be one of {LABEL_MODES}, got {label_mode!r}")
    recipe = recipe or CollectionRecipe()
    settings = get_settings()
    rng = np.random.default_rng(seed)

    parts = []
    agree = total = 0
    onset_errors: list[Optional[int]] = []
    batches = [partial(material_episodes, m, recipe, rng) for m in materials]
    batches.append(partial(in_air_episodes, materials, recipe.in_air_dmp, rng))
    for batch in batches:
        episodes = batch()
        rows_meta = []
        windows = []
        for episode in episodes:
            episode.labels = label_windows(episode, label_mode)
            if label_mode == "labeler":
                agree += sum(a == b for a, b in zip(episode.labels, episode.events))
                total += len(episode.events)
                onset_errors += boundary_errors(episode.events, episode.labels)
            for i, (window, label) in enumerate(zip(episode.windows, episode.labels)):
                rows_meta.append((episode, i, label))
                windows.append(window)
        if not windows:
            continue
        features = featurize_windows(windows, FULL_MASK, jobs)
        rows = [
            DatasetRow(
                window_id=f"{episode.episode_id}-w{i:03d}",
                episode_id=episode.episode_id,
                skill=episode.skills[i],
                label=label,
                material=episode.material,
                params=episode.params,
                features=features[j],
            )
            for j, (episode, i, label) in enumerate(rows_meta)
        ]
        parts.append(Dataset.from_rows(rows, FULL_MASK))

    info = {
        "seed": seed,
        "recipe": recipe.to_dict(),
        "label_mode": label_mode,
        "materials": [m.name for m in materials],
        "sample_rate": settings.sample_rate,
        "force_rate": settings.force_rate,
        "window_seconds": settings.window_seconds,
    }
    if label_mode == "labeler":
        info["label_agreement"] = agree / total if total else None
        within = [e is not None and e <= 2 for e in onset_errors]
        info["onsets_within_two_windows"] = float(np.mean(within)) if within else None
    dataset = Dataset.concat(parts)
    dataset.info = info
    return dataset
