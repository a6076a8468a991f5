"""Signals Package - Multimodal Feature Extraction"""

from src.signals.dataset import Dataset, DatasetRow, read_dataset, write_dataset
from src.signals.fusion import (
    CHANNEL_NAMES,
    FULL_MASK,
    FULL_WIDTH,
    NAMED_MASKS,
    DimensionMismatchError,
    FeatureMask,
    FeatureVector,
    SensorWindow,
    featurize_windows,
    fuse,
    resolve_mask,
)
from src.signals.spectral import (
    EmptyMelFilterWarning,
    chroma,
    chroma_map,
    force_features,
    mel_features,
    mel_filterbank,
    mfcc,
    power_spectrum,
    spectral_contrast,
    spectrogram,
    tonnetz,
)

__all__ = [
    "SensorWindow",
    "FeatureMask",
    "FeatureVector",
    "DimensionMismatchError",
    "EmptyMelFilterWarning",
    "CHANNEL_NAMES",
    "FULL_MASK",
    "FULL_WIDTH",
    "NAMED_MASKS",
    "resolve_mask",
    "power_spectrum",
    "spectrogram",
    "mel_filterbank",
    "mel_features",
    "mfcc",
    "chroma_map",
    "chroma",
    "spectral_contrast",
    "tonnetz",
    "force_features",
    "fuse",
    "featurize_windows",
    "Dataset",
    "DatasetRow",
    "read_dataset",
    "write_dataset",
]
