"""Spectral Audio Features for Vibration Windows"""

import warnings
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.fft import dct, rfft, rfftfreq
from scipy.signal import get_window

from src.config import get_settings

N_CHROMA = 12
N_TONNETZ = 6

# Slaney-style mel scale: linear below 1 kHz, logarithmic above
_MEL_F_SP = 200.0 / 3.0
_MEL_MIN_LOG_HZ = 1000.0
_MEL_MIN_LOG_MEL = _MEL_MIN_LOG_HZ / _MEL_F_SP
_MEL_LOGSTEP = np.log(6.4) / 27.0


class EmptyMelFilterWarning(UserWarning):
    """Some mel triangles contain no FFT bin."""


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    size = 1
    while size < n:
        size *= 2
    return size


def _one_sided_power(spectrum: np.ndarray, n_fft: int) -> np.ndarray:
    power = np.abs(spectrum) ** 2
    # interior bins stand in for their negative-frequency mirror
    upper = -1 if n_fft % 2 == 0 else None
    power[..., 1:upper] *= 2.0
    return power


def power_spectrum(window: np.ndarray, n_fft: Optional[int] = None) -> np.ndarray:
    """
    One-sided power spectrum of one channel.

    Zero-pads the window to ``n_fft`` (default: next power of two); interior
    bins are doubled so that sum(P) / n_fft equals the time-domain energy.

    Args:
        window: Samples of one channel
        n_fft: FFT size, >= len(window)

    Returns:
        n_fft // 2 + 1 power bins from 0 Hz to Nyquist
    """
    window = np.asarray(window, dtype=float)
    n_fft = n_fft or next_pow2(window.size)
    if n_fft < window.size:
        raise ValueError(f"n_fft={n_fft} is shorter than the window ({window.size})")
    return _one_sided_power(rfft(window, n=n_fft), n_fft)


def spectrogram(
    window: np.ndarray,
    n_fft: Optional[int] = None,
    hop_length: Optional[int] = None,
) -> np.ndarray:
    """
    Framed power spectrogram with a Hann window.

    The signal is zero-padded by n_fft/2 on both sides so every sample
    lands in a frame center region.

    Args:
        window: Samples of one channel
        n_fft: Frame size (default from settings)
        hop_length: Hop between frames (default from settings)

    Returns:
        Power array of shape (n_fft // 2 + 1, n_frames)
    """
    settings = get_settings()
    n_fft = n_fft or settings.n_fft
    hop_length = hop_length or settings.hop_length

    padded = np.pad(np.asarray(window, dtype=float), n_fft // 2)
    n_frames = 1 + (padded.size - n_fft) // hop_length
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop_length][:n_frames]
    frames = frames * get_window("hann", n_fft)
    return _one_sided_power(rfft(frames, n=n_fft, axis=1), n_fft).T


def _as_frames(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    return spectrum[:, np.newaxis] if spectrum.ndim == 1 else spectrum


def _fft_size(spectrum: np.ndarray) -> int:
    return 2 * (np.asarray(spectrum).shape[0] - 1)


def hz_to_mel(frequencies):
    """Slaney mel scale."""
    f = np.asarray(frequencies, dtype=float)
    linear = f / _MEL_F_SP
    logarithmic = _MEL_MIN_LOG_MEL + np.log(np.maximum(f, _MEL_MIN_LOG_HZ) / _MEL_MIN_LOG_HZ) / _MEL_LOGSTEP
    return np.where(f >= _MEL_MIN_LOG_HZ, logarithmic, linear)


def mel_to_hz(mels):
    """Inverse of ``hz_to_mel``."""
    m = np.asarray(mels, dtype=float)
    linear = _MEL_F_SP * m
    logarithmic = _MEL_MIN_LOG_HZ * np.exp(_MEL_LOGSTEP * (m - _MEL_MIN_LOG_MEL))
    return np.where(m >= _MEL_MIN_LOG_MEL, logarithmic, linear)


@lru_cache(maxsize=16)
def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int) -> np.ndarray:
    """
    Triangular mel filterbank from 0 Hz to Nyquist, unit peak height.

    Args:
        sample_rate: Sample rate in Hz
        n_fft: FFT size
        n_mels: Number of bands

    Returns:
        Read-only array of shape (n_mels, n_fft // 2 + 1)
    """
    freqs = rfftfreq(n_fft, 1.0 / sample_rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lower = (freqs - edges[:-2, np.newaxis]) / np.diff(edges)[:-1, np.newaxis]
    upper = (edges[2:, np.newaxis] - freqs) / np.diff(edges)[1:, np.newaxis]
    bank = np.maximum(0.0, np.minimum(lower, upper))

    if np.any(bank.sum(axis=1) == 0.0):
        warnings.warn(
            f"{int(np.sum(bank.sum(axis=1) == 0.0))} mel filters are empty; "
            "increase n_fft or reduce n_mels",
            EmptyMelFilterWarning,
        )
    bank.setflags(write=False)
    return bank


def band_centers(sample_rate: int, n_mels: int) -> np.ndarray:
    """Center frequency (Hz) of every mel band."""
    return mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))[1:-1]


def mel_features(
    spectrum: np.ndarray,
    sample_rate: Optional[int] = None,
    n_mels: Optional[int] = None,
) -> np.ndarray:
    """
    Log mel-band energies averaged over frames.

    Args:
        spectrum: Power spectrum (bins,) or spectrogram (bins, frames)
        sample_rate: Sample rate (default from settings)
        n_mels: Band count (default 128)

    Returns:
        n_mels log energies, floored at log(eps)
    """
    settings = get_settings()
    frames = _as_frames(spectrum)
    bank = mel_filterbank(
        sample_rate or settings.sample_rate, _fft_size(frames), n_mels or settings.n_mels
    )
    energies = bank @ frames
    return np.log(np.maximum(energies, settings.log_floor)).mean(axis=1)


def mfcc(log_mel: np.ndarray, n_mfcc: Optional[int] = None) -> np.ndarray:
    """Orthonormal type-II DCT of log-mel energies, first ``n_mfcc`` coefficients."""
    n_mfcc = n_mfcc or get_settings().n_mfcc
    log_mel = np.asarray(log_mel, dtype=float)
    if n_mfcc > log_mel.size:
        raise ValueError(f"cannot take {n_mfcc} coefficients from {log_mel.size} bands")
    return dct(log_mel, type=2, norm="ortho")[:n_mfcc]


@lru_cache(maxsize=16)
def chroma_map(sample_rate: int, n_fft: int) -> np.ndarray:
    """
    0/1 matrix folding FFT bins onto pitch classes C..B.

    Each bin with f > 0 goes to the pitch class of its nearest equal-tempered
    note, with A4 = 440 Hz.
    """
    freqs = rfftfreq(n_fft, 1.0 / sample_rate)
    mapping = np.zeros((N_CHROMA, freqs.size))
    positive = freqs > 0
    notes = np.rint(69.0 + 12.0 * np.log2(freqs[positive] / 440.0)).astype(int)
    mapping[notes % N_CHROMA, np.flatnonzero(positive)] = 1.0
    mapping.setflags(write=False)
    return mapping


def chroma(spectrum: np.ndarray, sample_rate: Optional[int] = None) -> np.ndarray:
    """
    Pitch-class energy profile of a window.

    Energy is summed over frames and L2-normalized; silence yields zeros.

    Args:
        spectrum: Power spectrum or spectrogram
        sample_rate: Sample rate (default from settings)

    Returns:
        12 values ordered C, C#, ... B
    """
    frames = _as_frames(spectrum)
    mapping = chroma_map(sample_rate or get_settings().sample_rate, _fft_size(frames))
    profile = (mapping @ frames).sum(axis=1)
    norm = np.linalg.norm(profile)
    return profile / norm if norm > 0 else np.zeros(N_CHROMA)


def contrast_band_edges(sample_rate: int, fmin: float, n_bands: int) -> np.ndarray:
    """Octave edges [0, fmin, 2 fmin, ... fmin 2^n_bands]."""
    edges = np.zeros(n_bands + 2)
    edges[1:] = fmin * 2.0 ** np.arange(n_bands + 1)
    if np.any(edges[:-1] >= sample_rate / 2.0):
        raise ValueError("contrast band exceeds Nyquist; reduce fmin or n_bands")
    return edges


def spectral_contrast(
    spectrum: np.ndarray,
    sample_rate: Optional[int] = None,
    fmin: Optional[float] = None,
    n_bands: Optional[int] = None,
    quantile: Optional[float] = None,
) -> np.ndarray:
    """
    Peak-to-valley log energy per octave band, averaged over frames.

    The band below ``fmin`` is the first value; the top band extends to
    Nyquist.

    Args:
        spectrum: Power spectrum or spectrogram
        sample_rate: Sample rate (default from settings)
        fmin: Lower edge of the first octave band
        n_bands: Octave band count
        quantile: Fraction of sorted bins forming peak and valley

    Returns:
        n_bands + 1 contrast values
    """
    settings = get_settings()
    sample_rate = sample_rate or settings.sample_rate
    n_bands = n_bands or settings.contrast_bands
    quantile = quantile or settings.contrast_quantile
    floor = settings.log_floor

    frames = _as_frames(spectrum)
    freqs = rfftfreq(_fft_size(frames), 1.0 / sample_rate)
    edges = contrast_band_edges(sample_rate, fmin or settings.contrast_fmin, n_bands)

    values = np.zeros((n_bands + 1, frames.shape[1]))
    for k, (f_low, f_high) in enumerate(zip(edges[:-1], edges[1:])):
        band = (freqs >= f_low) & (freqs <= f_high)
        idx = np.flatnonzero(band)
        if k > 0 and idx.size and idx[0] > 0:
            band[idx[0] - 1] = True
        if k == n_bands and idx.size:
            band[idx[-1] + 1 :] = True
        sub_band = frames[band]
        if k < n_bands and sub_band.shape[0] > 1:
            sub_band = sub_band[:-1]

        count = max(int(np.rint(quantile * np.sum(band))), 1)
        ordered = np.sort(sub_band, axis=0)
        valley = ordered[:count].mean(axis=0)
        peak = ordered[-count:].mean(axis=0)
        values[k] = np.log(np.maximum(peak, floor)) - np.log(np.maximum(valley, floor))
    return values.mean(axis=1)


def _tonnetz_basis() -> np.ndarray:
    pitch = np.arange(N_CHROMA)
    rows = []
    for angle, radius in ((7.0 * np.pi / 6.0, 1.0), (3.0 * np.pi / 2.0, 1.0), (2.0 * np.pi / 3.0, 0.5)):
        rows.append(radius * np.sin(angle * pitch))
        rows.append(radius * np.cos(angle * pitch))
    return np.vstack(rows)


TONNETZ_BASIS = _tonnetz_basis()


def tonnetz(chroma_values: np.ndarray) -> np.ndarray:
    """
    Tonal centroid of a chroma profile.

    Projects the L1-normalized chroma onto the fifths, minor-thirds and
    major-thirds circles (sine/cosine pairs).
    """
    chroma_values = np.asarray(chroma_values, dtype=float)
    if chroma_values.shape != (N_CHROMA,):
        raise ValueError(f"expected 12 chroma values, got shape {chroma_values.shape}")
    one_norm = np.abs(chroma_values).sum()
    if one_norm == 0:
        return np.zeros(N_TONNETZ)
    return TONNETZ_BASIS @ (chroma_values / one_norm)


def force_features(forces: np.ndarray) -> np.ndarray:
    """Flatten a (samples, 6) force buffer time-major."""
    forces = np.asarray(forces, dtype=float)
    if forces.ndim != 2 or forces.shape[1] != 6:
        raise ValueError(f"force buffer must have shape (n, 6), got {forces.shape}")
    return forces.reshape(-1)
