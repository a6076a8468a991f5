"""Changepoint Package - Online Segmentation of Sensor Streams"""

from src.changepoint.bocd import BocdPrior, BocdState, bocd_update, detect_reset, run_bocd
from src.changepoint.labeling import (
    EpisodeRejectedError,
    NoChangepointWarning,
    SegmentLabel,
    SkillSpan,
    force_gradient_trigger,
    label_episode,
    labels_per_window,
    read_labels,
    timeline_from_skills,
    validate_partition,
    window_observation,
    write_labels,
)

__all__ = [
    "BocdPrior",
    "BocdState",
    "bocd_update",
    "detect_reset",
    "run_bocd",
    "SegmentLabel",
    "SkillSpan",
    "EpisodeRejectedError",
    "NoChangepointWarning",
    "force_gradient_trigger",
    "window_observation",
    "label_episode",
    "labels_per_window",
    "timeline_from_skills",
    "validate_partition",
    "read_labels",
    "write_labels",
]
