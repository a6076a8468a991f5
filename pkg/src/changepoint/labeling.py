"""Event Segmentation of Recorded Episodes"""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.changepoint.bocd import BocdPrior, run_bocd
from src.config import get_settings
from src.events import APPROACH_SKILLS, AXIS_INDEX, CONSTANT_SKILLS, EVENTS
from src.signals import SensorWindow

SOURCES = ("changepoint", "force-threshold", "skill-context")
KNIFE_MIC = 2


class EpisodeRejectedError(ValueError):
    """Episode cannot be labeled (missing or malformed skill timeline)."""


class NoChangepointWarning(UserWarning):
    """An approach skill ended without a joint sound and force trigger."""


@dataclass(frozen=True)
class SkillSpan:
    """Half-open window range executed by one skill."""

    skill: str
    start: int
    end: int


@dataclass(frozen=True)
class SegmentLabel:
    """Half-open window range sharing one event label."""

    start: int
    end: int
    label: str
    source: str
    skill: str = ""

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"segment end {self.end} must exceed start {self.start}")
        if self.label not in EVENTS:
            raise ValueError(f"unknown event label {self.label!r}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown label source {self.source!r}")

    def to_dict(self) -> dict:
        """JSON-lines record."""
        return {
            "start": self.start,
            "end": self.end,
            "label": self.label,
            "source": self.source,
            "skill": self.skill,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SegmentLabel":
        return cls(**data)


def window_observation(window: Union[SensorWindow, np.ndarray], floor: Optional[float] = None) -> float:
    """Log RMS of the knife microphone over one window."""
    floor = get_settings().log_floor if floor is None else floor
    vibration = window.vibration if isinstance(window, SensorWindow) else np.asarray(window)
    samples = vibration[KNIFE_MIC] if vibration.ndim == 2 else vibration
    return float(np.log(max(np.sqrt(np.mean(samples**2)), floor)))


def force_gradient_trigger(
    forces: np.ndarray, axis: Union[int, str] = "z", threshold: Optional[float] = None
) -> bool:
    """
    True when the force on ``axis`` changes faster than ``threshold`` per sample.

    Args:
        forces: (n, 6) force samples or a 1-D trace, n >= 2
        axis: Axis index or name (x, y, z)
        threshold: N per sample (default from settings)
    """
    threshold = get_settings().force_gradient_threshold if threshold is None else threshold
    forces = np.asarray(forces, dtype=float)
    trace = forces if forces.ndim == 1 else forces[:, AXIS_INDEX.get(axis, axis)]
    if trace.size < 2:
        raise ValueError("force gradient needs at least two samples")
    return bool(np.max(np.abs(np.diff(trace))) > threshold)


def timeline_from_skills(skills: Sequence[str]) -> list[SkillSpan]:
    """Collapse per-window skill ids into contiguous spans."""
    spans = []
    start = 0
    for i in range(1, len(skills) + 1):
        if i == len(skills) or skills[i] != skills[start]:
            spans.append(SkillSpan(skills[start], start, i))
            start = i
    return spans


def validate_partition(segments: Sequence[SegmentLabel], n_windows: int) -> None:
    """Raise unless segments tile [0, n_windows) without gaps or overlaps."""
    cursor = 0
    for segment in segments:
        if segment.start != cursor:
            kind = "gap" if segment.start > cursor else "overlap"
            raise ValueError(f"label {kind} at window {cursor}")
        cursor = segment.end
    if cursor != n_windows:
        raise ValueError(f"labels cover {cursor} of {n_windows} windows")


def _force_triggers(windows: Sequence[SensorWindow], axis: str, threshold: float, lead: Optional[np.ndarray]):
    triggers = []
    previous = lead
    for window in windows:
        trace = window.forces if previous is None else np.vstack([previous, window.forces])
        triggers.append(force_gradient_trigger(trace, axis, threshold))
        previous = window.forces[-1:]
    return triggers


def _approach_boundary(
    windows: Sequence[SensorWindow],
    axis: str,
    hazard: float,
    threshold: float,
    horizon: int,
    prior: Optional[BocdPrior],
    lead: Optional[np.ndarray],
) -> Optional[tuple[int, str]]:
    """First window where sound and force both change, with the deciding source."""
    observations = [window_observation(w) for w in windows]
    _, sound = run_bocd(observations, hazard=hazard, prior=prior or BocdPrior.from_stream(observations))
    force = [i for i, hit in enumerate(_force_triggers(windows, axis, threshold, lead)) if hit]
    for s in sound:
        for f in force:
            if abs(s - f) <= horizon:
                return (f, "force-threshold") if f < s else (s, "changepoint")
    return None


def label_episode(
    windows: Sequence[SensorWindow],
    timeline: Optional[Sequence[SkillSpan]],
    hazard: Optional[float] = None,
    threshold: Optional[float] = None,
    horizon: Optional[int] = None,
    prior: Optional[BocdPrior] = None,
) -> list[SegmentLabel]:
    """
    Segment an episode into event labels.

    Approach skills are labeled pre-contact until the first joint sound and
    force trigger and with their contact label afterwards; constant-contact
    skills take their label for every window.

    Args:
        windows: Time-ordered sensor windows
        timeline: Skill spans covering every window
        hazard: BOCD hazard (default from settings)
        threshold: Force-gradient threshold in N per sample
        horizon: Max window distance between the two triggers
        prior: BOCD prior (default: scaled to each approach span)

    Returns:
        Segments partitioning the episode
    """
    settings = get_settings()
    hazard = settings.bocd_hazard if hazard is None else hazard
    threshold = settings.force_gradient_threshold if threshold is None else threshold
    horizon = settings.coincidence_horizon if horizon is None else horizon

    if not timeline:
        raise EpisodeRejectedError("episode has no skill timeline")
    try:
        validate_partition(
            [SegmentLabel(s.start, s.end, EVENTS[0], "skill-context") for s in timeline],
            len(windows),
        )
    except ValueError as e:
        raise EpisodeRejectedError(f"skill timeline does not cover the episode: {e}") from e

    segments: list[SegmentLabel] = []
    for span in timeline:
        if span.skill in CONSTANT_SKILLS:
            segments.append(SegmentLabel(span.start, span.end, CONSTANT_SKILLS[span.skill], "skill-context", span.skill))
            continue
        if span.skill not in APPROACH_SKILLS:
            raise EpisodeRejectedError(f"no labeling rule for skill {span.skill!r}")

        before, after, axis = APPROACH_SKILLS[span.skill]
        lead = windows[span.start - 1].forces[-1:] if span.start > 0 else None
        found = _approach_boundary(
            windows[span.start : span.end], axis, hazard, threshold, horizon, prior, lead
        )
        if found is None:
            warnings.warn(
                f"no joint changepoint in {span.skill} windows {span.start}-{span.end}",
                NoChangepointWarning,
            )
            segments.append(SegmentLabel(span.start, span.end, before, "skill-context", span.skill))
            continue

        boundary, source = found
        boundary += span.start
        if boundary > span.start:
            segments.append(SegmentLabel(span.start, boundary, before, source, span.skill))
        segments.append(SegmentLabel(boundary, span.end, after, source, span.skill))

    validate_partition(segments, len(windows))
    return segments


def labels_per_window(segments: Sequence[SegmentLabel]) -> list[str]:
    """Expand segments into one label per window."""
    return [s.label for s in segments for _ in range(s.start, s.end)]


def write_labels(path: Union[str, Path], segments: Sequence[SegmentLabel]) -> Path:
    """Segments as JSON lines, one per segment in time order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for segment in segments:
            handle.write(json.dumps(segment.to_dict(), sort_keys=True) + "\n")
    return path


def read_labels(path: Union[str, Path]) -> list[SegmentLabel]:
    with Path(path).open() as handle:
        return [SegmentLabel.from_dict(json.loads(line)) for line in handle if line.strip()]
