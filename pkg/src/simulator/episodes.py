"""Episode Recording and Window Bundles"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.changepoint import SkillSpan, timeline_from_skills
from src.config import get_settings
from src.signals import SensorWindow
from src.simulator.commands import CommandSource
from src.simulator.sensors import emit_sensors
from src.simulator.world import StepRecord, WorldState, physics_dt, step_world, window_event

PathLike = Union[str, Path]

BUNDLE_FORMAT = "slicekit.episode"
FAILURE_KINDS = ("slip", "premature_board_hit")


def advance_window(
    state: WorldState, source: CommandSource
) -> tuple[WorldState, SensorWindow, str, list[StepRecord]]:
    """
    Run the world through one sensor window.

    Returns:
        Tuple of (state, sensor window, ground-truth window event, step records)
    """
    dt = physics_dt()
    records = []
    for _ in range(get_settings().force_samples):
        state, record = step_world(state, source(state), dt)
        records.append(record)
    return state, emit_sensors(state, records), window_event(records), records


@dataclass
class EpisodeLog:
    """
    Everything recorded during one episode, window by window.

    Per-slice entries are appended as slices complete, so
    ``slices_completed`` never exceeds ``slices_requested``.
    """

    material: str
    seed: int = 0
    policy: str = ""
    slices_requested: int = 0
    windows: list[SensorWindow] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    skills: list[str] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    decisions: list[Optional[str]] = field(default_factory=list)
    slice_times: list[float] = field(default_factory=list)
    slice_actions: list[int] = field(default_factory=list)
    slice_params: list[tuple[float, float]] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    outcome: str = "running"
    material_prediction: Optional[str] = None

    def record(
        self,
        window: SensorWindow,
        event: str,
        skill: str,
        time: float,
        decision: Optional[str] = None,
    ) -> int:
        """Append one window; returns its index."""
        if self.times and time <= self.times[-1]:
            raise ValueError(f"window time {time} does not follow {self.times[-1]}")
        self.windows.append(window)
        self.events.append(event)
        self.skills.append(skill)
        self.times.append(float(time))
        self.decisions.append(decision)
        return len(self.windows) - 1

    def complete_slice(self, seconds: float, actions: int, params: tuple[float, float]) -> None:
        if self.slices_requested and self.slices_completed >= self.slices_requested:
            raise ValueError("more slices completed than requested")
        self.slice_times.append(float(seconds))
        self.slice_actions.append(int(actions))
        self.slice_params.append((float(params[0]), float(params[1])))

    def fail(self, kind: str, slice_index: int, recovered: bool = True) -> None:
        if kind not in FAILURE_KINDS:
            raise ValueError(f"unknown failure kind {kind!r}")
        self.failures.append(
            {
                "kind": kind,
                "slice": slice_index,
                "window": len(self.windows) - 1,
                "recovered": recovered,
            }
        )

    @property
    def slices_completed(self) -> int:
        return len(self.slice_times)

    @property
    def timeline(self) -> list[SkillSpan]:
        return timeline_from_skills(self.skills)

    def event_timeline(self) -> list[dict]:
        """Runs of identical ground-truth events as (event, start, end) records."""
        runs = []
        start = 0
        for i in range(1, len(self.events) + 1):
            if i == len(self.events) or self.events[i] != self.events[start]:
                runs.append({"event": self.events[start], "start": start, "end": i})
                start = i
        return runs

    def report(self) -> dict:
        """JSON episode report."""
        actions = self.slice_actions
        return {
            "material": self.material,
            "seed": self.seed,
            "policy": self.policy,
            "outcome": self.outcome,
            "material_prediction": self.material_prediction,
            "slices_requested": self.slices_requested,
            "slices": self.slices_completed,
            "slice_seconds": [round(t, 6) for t in self.slice_times],
            "slice_actions": list(actions),
            "slice_params": [list(p) for p in self.slice_params],
            "mean_actions_per_slice": float(np.mean(actions)) if actions else None,
            "failures": list(self.failures),
            "windows": len(self.windows),
            "event_timeline": self.event_timeline(),
        }


def write_episode(directory: PathLike, log: EpisodeLog) -> Path:
    """
    Write an episode bundle directory.

    ``vibration.npy`` and ``forces.npy`` hold the stacked windows as
    float32, ``windows.jsonl`` the per-window truth, skill and time, and
    ``meta.json`` the sample rates plus the episode report.
    """
    settings = get_settings()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = len(log.windows)
    vibration = (
        np.stack([w.vibration for w in log.windows])
        if n
        else np.zeros((0, 4, settings.window_samples))
    )
    forces = np.stack([w.forces for w in log.windows]) if n else np.zeros((0, settings.force_samples, 6))
    np.save(directory / "vibration.npy", vibration.astype(np.float32))
    np.save(directory / "forces.npy", forces.astype(np.float32))
    with (directory / "windows.jsonl").open("w") as handle:
        for i in range(n):
            record = {
                "index": i,
                "time": round(log.times[i], 6),
                "event": log.events[i],
                "skill": log.skills[i],
                "decision": log.decisions[i],
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    meta = {
        "format": BUNDLE_FORMAT,
        "sample_rate": settings.sample_rate,
        "force_rate": settings.force_rate,
        "window_seconds": settings.window_seconds,
        **log.report(),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return directory


def read_episode(directory: PathLike) -> EpisodeLog:
    """Read a bundle written by ``write_episode``; windows come back as float64."""
    directory = Path(directory)
    meta_file = directory / "meta.json"
    if not meta_file.exists():
        raise FileNotFoundError(f"not an episode bundle: {directory}")
    meta = json.loads(meta_file.read_text())
    if meta.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"not an episode bundle (format={meta.get('format')!r})")
    vibration = np.load(directory / "vibration.npy")
    forces = np.load(directory / "forces.npy")
    log = EpisodeLog(
        material=meta["material"],
        seed=meta["seed"],
        policy=meta["policy"],
        slices_requested=meta["slices_requested"],
        outcome=meta["outcome"],
        material_prediction=meta.get("material_prediction"),
    )
    with (directory / "windows.jsonl").open() as handle:
        for line, v, f in zip(handle, vibration, forces):
            record = json.loads(line)
            log.record(
                SensorWindow(vibration=v, forces=f),
                record["event"],
                record["skill"],
                record["time"],
                record.get("decision"),
            )
    log.slice_times = list(meta["slice_seconds"])
    log.slice_actions = list(meta["slice_actions"])
    log.slice_params = [tuple(p) for p in meta["slice_params"]]
    log.failures = list(meta["failures"])
    return log
