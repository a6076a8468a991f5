"""Synthetic Contact Microphones and Force Sensor"""

from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.signal import butter, sosfilt

from src.config import get_settings
from src.events import HITTING_BOARD, HITTING_OBJECT, SCRAPING_BOARD, SCRAPING_OBJECT, SLICING_OBJECT
from src.signals import SensorWindow
from src.simulator.world import BOARD, BOARD_FRICTION, BOARD_HARDNESS, OBJECT, StepRecord, WorldState

NOISE_FLOOR = 1e-3
FORCE_NOISE = 0.2

BOARD_RESONANCE_HZ = 2500.0
OBJECT_SCRAPE_BAND = (3000.0, 5000.0)
BOARD_SCRAPE_BAND = (5500.0, 8000.0)
RESONANCE_BANDWIDTH = 0.3

IMPACT_GAIN = 8.0
IMPACT_DECAY = 0.01
SLICE_GAIN = 0.05
SCRAPE_GAIN = 0.04
CREAK_GAIN = 0.004
REFERENCE_SPEED = 0.05

# per-location gains on (board mic 1, board mic 2, knife mic, tong mic);
# the tong mic is damped by its grasp on the item
CHANNEL_GAINS = {
    BOARD: np.array([1.0, 0.8, 0.6, 0.1]),
    OBJECT: np.array([0.3, 0.25, 1.0, 0.15]),
}


@lru_cache(maxsize=256)
def _bandpass(low: float, high: float, sample_rate: int) -> np.ndarray:
    nyquist = sample_rate / 2.0
    high = min(high, 0.95 * nyquist)
    low = min(max(low, 20.0), 0.9 * high)
    return butter(4, [low, high], btype="bandpass", fs=sample_rate, output="sos")


def band_noise(
    rng: np.random.Generator, n: int, low: float, high: float, sample_rate: int
) -> np.ndarray:
    """Unit-RMS Gaussian noise filtered to [low, high] Hz."""
    noise = sosfilt(_bandpass(round(low, 3), round(high, 3), sample_rate), rng.standard_normal(n))
    rms = np.sqrt(np.mean(noise**2))
    return noise / rms if rms > 0 else noise


def _tone(f0: float, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS tone with its second harmonic."""
    phase = rng.uniform(0.0, 2 * np.pi, size=2)
    tone = np.sin(2 * np.pi * f0 * t + phase[0]) + 0.5 * np.sin(4 * np.pi * f0 * t + phase[1])
    return tone / np.sqrt(np.mean(tone**2))


def _speed_factor(speed: float, base: float) -> float:
    return base + speed / REFERENCE_SPEED


def emit_sensors(
    state: WorldState, records: Sequence[StepRecord], sample_rate: Optional[int] = None
) -> SensorWindow:
    """
    Synthesize one sensor window from the physics steps it spans.

    Impacts ring as decaying bursts at the struck surface's resonance with
    amplitude proportional to hardness times impact speed. Slicing and
    scraping produce sustained band-limited noise, static contact a faint
    creak. Channel gains follow the contact location. Forces are the step
    contact wrenches plus Gaussian noise, one sample per step.

    Args:
        state: World after the window's last step (material and generator)
        records: One record per force sample
        sample_rate: Microphone rate (default from settings)

    Returns:
        SensorWindow with 4 vibration channels and the force buffer
    """
    settings = get_settings()
    fs = sample_rate or settings.sample_rate
    n = settings.window_samples
    steps = len(records)
    if steps != settings.force_samples:
        raise ValueError(f"a window spans {settings.force_samples} steps, got {steps}")
    rng = state.rng
    material = state.material
    t = np.arange(n) / fs
    segment = n // steps

    vibration = rng.normal(0.0, NOISE_FLOOR, size=(4, n))
    envelopes = {
        "slice": np.zeros(n),
        "scrape_object": np.zeros(n),
        "scrape_board": np.zeros(n),
        "creak_object": np.zeros(n),
        "creak_board": np.zeros(n),
    }

    for i, record in enumerate(records):
        if record.location is None:
            continue
        span = slice(i * segment, n if i == steps - 1 else (i + 1) * segment)
        on_board = record.location == BOARD
        if record.impact:
            start = i * segment
            tt = t[start:] - t[start]
            hardness = BOARD_HARDNESS if on_board else material.hardness
            f0 = BOARD_RESONANCE_HZ if on_board else material.resonance_hz
            amplitude = IMPACT_GAIN * hardness * record.impact_speed
            ring = 0.6 * np.sin(2 * np.pi * f0 * tt) + 0.4 * rng.standard_normal(tt.size)
            burst = amplitude * np.exp(-tt / IMPACT_DECAY) * ring
            vibration[:, start:] += CHANNEL_GAINS[record.location][:, None] * burst[None, :]
        if record.event == SLICING_OBJECT:
            envelopes["slice"][span] = (
                SLICE_GAIN * (0.2 + material.hardness) * _speed_factor(record.saw_speed, 0.5)
            )
        elif record.event == SCRAPING_OBJECT:
            envelopes["scrape_object"][span] = (
                SCRAPE_GAIN * (0.2 + material.friction) * _speed_factor(record.saw_speed, 0.3)
            )
        elif record.event == SCRAPING_BOARD:
            envelopes["scrape_board"][span] = (
                SCRAPE_GAIN * (0.2 + BOARD_FRICTION) * _speed_factor(record.saw_speed, 0.3)
            )
        elif record.event == HITTING_OBJECT and not record.impact:
            envelopes["creak_object"][span] = CREAK_GAIN * (0.2 + material.hardness)
        elif record.event == HITTING_BOARD and not record.impact:
            envelopes["creak_board"][span] = CREAK_GAIN * (0.2 + BOARD_HARDNESS)

    f0 = material.resonance_hz
    sources = {
        "slice": lambda: band_noise(
            rng, n, f0 * (1 - RESONANCE_BANDWIDTH), f0 * (1 + RESONANCE_BANDWIDTH), fs
        )
        * _crunch(material.crunch_rate_hz, t, rng),
        "scrape_object": lambda: band_noise(rng, n, *OBJECT_SCRAPE_BAND, fs),
        "scrape_board": lambda: band_noise(rng, n, *BOARD_SCRAPE_BAND, fs),
        "creak_object": lambda: _tone(f0, t, rng),
        "creak_board": lambda: _tone(BOARD_RESONANCE_HZ, t, rng),
    }
    locations = {
        "slice": OBJECT,
        "scrape_object": OBJECT,
        "scrape_board": BOARD,
        "creak_object": OBJECT,
        "creak_board": BOARD,
    }
    for name, envelope in envelopes.items():
        if not envelope.any():
            continue
        signal = envelope * sources[name]()
        vibration += CHANNEL_GAINS[locations[name]][:, None] * signal[None, :]

    forces = np.vstack([r.force for r in records]) + rng.normal(0.0, FORCE_NOISE, size=(steps, 6))
    return SensorWindow(vibration=vibration, forces=forces)


def _crunch(rate_hz: float, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if rate_hz <= 0:
        return np.ones_like(t)
    return 1.0 + 0.5 * np.sin(2 * np.pi * rate_hz * t + rng.uniform(0.0, 2 * np.pi))
