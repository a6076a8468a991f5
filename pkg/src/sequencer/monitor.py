"""Window-by-Window Event Monitoring"""

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from src.classify import MlpModel, forward
from src.config import get_settings
from src.events import EVENTS, MOVE_DOWN_ONTO_OBJECT, SLICING_ACTION
from src.sequencer.skills import BOARD_EVENTS
from src.signals import FULL_MASK, FeatureMask, SensorWindow, fuse

POSTERIOR_TOLERANCE = 1e-6
MONITOR_SOURCES = ("oracle", "classifier")


def event_group(label: str) -> str:
    """Events that count as the same decision; both board events end a cut."""
    return "board" if label in BOARD_EVENTS else label


@dataclass(frozen=True)
class MonitorDecision:
    """
    Posterior over the six events for one window, with its smoothed decision.

    ``smoothed`` is only set once ``streak`` consecutive windows agree.
    """

    posterior: np.ndarray
    label: str
    smoothed: Optional[str] = None
    streak: int = 1

    def __post_init__(self):
        posterior = np.asarray(self.posterior, dtype=float)
        if posterior.shape != (len(EVENTS),):
            raise ValueError(f"posterior must cover {len(EVENTS)} events, got shape {posterior.shape}")
        if np.any(posterior < 0) or abs(posterior.sum() - 1.0) > POSTERIOR_TOLERANCE:
            raise ValueError("posterior must be a probability distribution")
        if self.label not in EVENTS or (self.smoothed is not None and self.smoothed not in EVENTS):
            raise ValueError(f"decision outside the event set: {self.label!r}, {self.smoothed!r}")
        object.__setattr__(self, "posterior", posterior)


class EventMonitor:
    """
    Smooths per-window posteriors into decisions.

    A single window never decides on its own: the smoothed decision needs
    ``consecutive`` agreeing windows, counted since the last ``reset``.
    """

    def __init__(self, consecutive: Optional[int] = None):
        self.consecutive = consecutive or get_settings().monitor_consecutive
        if self.consecutive < 1:
            raise ValueError(f"consecutive must be at least 1, got {self.consecutive}")
        self._group: Optional[str] = None
        self._streak = 0

    def reset(self) -> None:
        self._group = None
        self._streak = 0

    def update(self, posterior: np.ndarray) -> MonitorDecision:
        posterior = np.asarray(posterior, dtype=float)
        label = EVENTS[int(np.argmax(posterior))]
        group = event_group(label)
        self._streak = self._streak + 1 if group == self._group else 1
        self._group = group
        smoothed = label if self._streak >= self.consecutive else None
        return MonitorDecision(posterior, label, smoothed, self._streak)


class EventSource(Protocol):
    """Per-window event posterior for the active skill."""

    def posterior(self, window: SensorWindow, event: str, skill: str) -> np.ndarray: ...


def one_hot(event: str) -> np.ndarray:
    posterior = np.zeros(len(EVENTS))
    posterior[EVENTS.index(event)] = 1.0
    return posterior


class OracleEvents:
    """Reports the simulator's ground-truth event with certainty."""

    def posterior(self, window: SensorWindow, event: str, skill: str) -> np.ndarray:
        return one_hot(event)


def model_mask(model: MlpModel) -> FeatureMask:
    return FeatureMask.from_dict(model.feature_mask) if model.feature_mask else FULL_MASK


def event_posterior(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Model probabilities spread onto the full event order; absent events get zero."""
    probs = forward(model, features)[0]
    posterior = np.zeros(len(EVENTS))
    for label, p in zip(model.labels, probs):
        posterior[EVENTS.index(label)] += p
    return posterior


class ClassifierEvents:
    """
    Event posteriors from trained networks.

    The approach skill uses the hitting network and the slicing skill the
    slicing network when given; everything else falls back to the
    six-event network.
    """

    def __init__(
        self,
        slicenet: Optional[MlpModel] = None,
        hitting: Optional[MlpModel] = None,
        slicing: Optional[MlpModel] = None,
    ):
        if slicenet is None and (hitting is None or slicing is None):
            raise ValueError("classifier monitoring needs slicenet or both hitting and slicing models")
        self.slicenet = slicenet
        self.hitting = hitting
        self.slicing = slicing

    def model_for(self, skill: str) -> MlpModel:
        if skill == MOVE_DOWN_ONTO_OBJECT and self.hitting is not None:
            return self.hitting
        if skill == SLICING_ACTION and self.slicing is not None:
            return self.slicing
        return self.slicenet or self.hitting

    def posterior(self, window: SensorWindow, event: str, skill: str) -> np.ndarray:
        model = self.model_for(skill)
        return event_posterior(model, fuse(window, model_mask(model)).values)
