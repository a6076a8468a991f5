"""Early Fusion of Vibration and Force Features"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Optional, Sequence

import numpy as np

from src.config import get_settings
from src.signals.spectral import (
    chroma,
    force_features,
    mel_features,
    mfcc,
    spectral_contrast,
    spectrogram,
    tonnetz,
)

N_CHANNELS = 4
N_FORCE_AXES = 6
CHANNEL_NAMES = ("board-mic-1", "board-mic-2", "knife-mic", "tong-mic")
FORCE_AXES = ("x", "y", "z", "roll", "pitch", "yaw")

FAMILY_SIZES = {"mfcc": 40, "chroma": 12, "mel": 128, "contrast": 7, "tonnetz": 6}
FAMILIES = tuple(FAMILY_SIZES)
CHANNEL_WIDTH = sum(FAMILY_SIZES.values())
FORCE_WIDTH = 60
FULL_WIDTH = N_CHANNELS * CHANNEL_WIDTH + FORCE_WIDTH


class DimensionMismatchError(ValueError):
    """Array shape does not match the declared layout."""


@dataclass(frozen=True)
class SensorWindow:
    """One 0.1 s synchronized snapshot of the four microphones and the force buffer."""

    vibration: np.ndarray
    forces: np.ndarray

    def __post_init__(self):
        settings = get_settings()
        vibration = np.asarray(self.vibration, dtype=float)
        forces = np.asarray(self.forces, dtype=float)
        expected_v = (N_CHANNELS, settings.window_samples)
        expected_f = (settings.force_samples, N_FORCE_AXES)
        if vibration.shape != expected_v:
            raise DimensionMismatchError(f"vibration shape {vibration.shape} != {expected_v}")
        if forces.shape != expected_f:
            raise DimensionMismatchError(f"forces shape {forces.shape} != {expected_f}")
        object.__setattr__(self, "vibration", vibration)
        object.__setattr__(self, "forces", forces)


@dataclass(frozen=True)
class FeatureMask:
    """Selects microphone channels, feature families and the force block.

    Masked layouts keep the canonical order: channel-major, families in
    MFCC, chroma, mel, contrast, tonnetz order, forces last.
    """

    channels: tuple[int, ...] = (0, 1, 2, 3)
    families: tuple[str, ...] = FAMILIES
    forces: bool = True

    def __post_init__(self):
        channels = tuple(sorted(set(int(c) for c in self.channels)))
        unknown = [c for c in channels if not 0 <= c < N_CHANNELS]
        if unknown:
            raise ValueError(f"unknown channel indices {unknown}")
        bad = set(self.families) - set(FAMILIES)
        if bad:
            raise ValueError(f"unknown feature families {sorted(bad)}")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "families", tuple(f for f in FAMILIES if f in self.families))

    @property
    def size(self) -> int:
        """Length of a masked feature vector."""
        per_channel = sum(FAMILY_SIZES[f] for f in self.families)
        return len(self.channels) * per_channel + (FORCE_WIDTH if self.forces else 0)

    def indices(self) -> np.ndarray:
        """Positions of the masked features inside the full 832 layout."""
        picked = []
        for channel in self.channels:
            offset = channel * CHANNEL_WIDTH
            for family in FAMILIES:
                width = FAMILY_SIZES[family]
                if family in self.families:
                    picked.append(np.arange(offset, offset + width))
                offset += width
        if self.forces:
            picked.append(np.arange(N_CHANNELS * CHANNEL_WIDTH, FULL_WIDTH))
        return np.concatenate(picked) if picked else np.zeros(0, dtype=int)

    def to_dict(self) -> dict:
        """JSON form."""
        return {"channels": list(self.channels), "families": list(self.families), "forces": self.forces}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureMask":
        """Inverse of ``to_dict``."""
        return cls(
            channels=tuple(data.get("channels", range(N_CHANNELS))),
            families=tuple(data.get("families", FAMILIES)),
            forces=bool(data.get("forces", True)),
        )


FULL_MASK = FeatureMask()

NAMED_MASKS: dict[str, FeatureMask] = {
    "combined": FULL_MASK,
    "forces": FeatureMask(channels=(), families=(), forces=True),
    "sound": FeatureMask(forces=False),
    "mic1": FeatureMask(channels=(0,), forces=False),
    "mic2": FeatureMask(channels=(1,), forces=False),
    "mic3": FeatureMask(channels=(2,), forces=False),
    "mic4": FeatureMask(channels=(3,), forces=False),
    "mfcc": FeatureMask(families=("mfcc",), forces=False),
    "chroma": FeatureMask(families=("chroma",), forces=False),
    "mel": FeatureMask(families=("mel",), forces=False),
    "spectral": FeatureMask(families=("contrast",), forces=False),
    "tonal": FeatureMask(families=("tonnetz",), forces=False),
    "mfcc_forces": FeatureMask(families=("mfcc",), forces=True),
}


def resolve_mask(name_or_mask) -> FeatureMask:
    """Accept a FeatureMask, a named mask or None (full mask)."""
    if name_or_mask is None:
        return FULL_MASK
    if isinstance(name_or_mask, FeatureMask):
        return name_or_mask
    try:
        return NAMED_MASKS[name_or_mask]
    except KeyError:
        raise KeyError(f"unknown feature mask {name_or_mask!r}; choose from {sorted(NAMED_MASKS)}")


@dataclass(frozen=True)
class FeatureVector:
    """Ordered feature values with the mask that produced them."""

    values: np.ndarray
    mask: FeatureMask = field(default_factory=FeatureMask)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mask.size,):
            raise DimensionMismatchError(
                f"{values.size} values do not fit a mask of size {self.mask.size}"
            )
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


def channel_features(samples: np.ndarray, families: Sequence[str] = FAMILIES) -> np.ndarray:
    """Features of one microphone channel in canonical family order."""
    spec = spectrogram(samples)
    blocks = {}
    log_mel = mel_features(spec) if {"mel", "mfcc"} & set(families) else None
    if "mfcc" in families:
        blocks["mfcc"] = mfcc(log_mel)
    if {"chroma", "tonnetz"} & set(families):
        profile = chroma(spec)
        blocks["chroma"] = profile
        blocks["tonnetz"] = tonnetz(profile)
    if "mel" in families:
        blocks["mel"] = log_mel
    if "contrast" in families:
        blocks["contrast"] = spectral_contrast(spec)
    return np.concatenate([blocks[f] for f in FAMILIES if f in families] or [np.zeros(0)])


def fuse(window: SensorWindow, mask: Optional[FeatureMask] = None) -> FeatureVector:
    """
    Build the early-fusion feature vector of one window.

    Args:
        window: Synchronized sensor snapshot
        mask: Channels/families/forces to include (default: all 832)

    Returns:
        FeatureVector in canonical masked order
    """
    mask = resolve_mask(mask)
    parts = [channel_features(window.vibration[c], mask.families) for c in mask.channels]
    if mask.forces:
        parts.append(force_features(window.forces))
    values = np.concatenate(parts) if parts else np.zeros(0)
    return FeatureVector(values=values, mask=mask)


def _fuse_values(window: SensorWindow, mask: FeatureMask) -> np.ndarray:
    return fuse(window, mask).values


def featurize_windows(
    windows: Iterable[SensorWindow],
    mask: Optional[FeatureMask] = None,
    jobs: Optional[int] = None,
) -> np.ndarray:
    """
    Fuse many windows into a feature matrix.

    Windows are independent, so ``jobs > 1`` spreads them over a process
    pool; row order always follows the input order.

    Args:
        windows: Sensor windows
        mask: Feature mask (default full)
        jobs: Worker processes (default from settings)

    Returns:
        Array of shape (n_windows, mask.size)
    """
    mask = resolve_mask(mask)
    windows = list(windows)
    jobs = jobs or get_settings().jobs
    if not windows:
        return np.zeros((0, mask.size))

    if jobs > 1 and len(windows) > 1:
        chunksize = max(1, len(windows) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(partial(_fuse_values, mask=mask), windows, chunksize=chunksize))
    else:
        rows = [fuse(w, mask).values for w in windows]
    return np.vstack(rows)
