"""Unit tests for the signals module."""

import numpy as np
import pytest

SR = 44100
N = 4410


def _tone(freq, amplitude=1.0):
    t = np.arange(N) / SR
    return amplitude * np.sin(2 * np.pi * freq * t)


def _window(rng, scale=0.1):
    from src.signals import SensorWindow

    return SensorWindow(
        vibration=rng.normal(scale=scale, size=(4, N)),
        forces=rng.normal(size=(10, 6)),
    )


def _naive_power(x, n_fft, chunk=256):
    """Reference one-sided power spectrum by direct DFT summation."""
    n = np.arange(x.size)
    bins = np.arange(n_fft // 2 + 1)
    out = np.empty(bins.size)
    for start in range(0, bins.size, chunk):
        k = bins[start : start + chunk, np.newaxis]
        coeffs = np.exp(-2j * np.pi * k * n / n_fft) @ x
        out[start : start + chunk] = np.abs(coeffs) ** 2
    out[1:-1] *= 2.0
    return out


def _naive_spectrogram(x, n_fft=1024, hop=512):
    padded = np.pad(x, n_fft // 2)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n_fft) / n_fft)
    n_frames = 1 + (padded.size - n_fft) // hop
    frames = [padded[i * hop : i * hop + n_fft] * hann for i in range(n_frames)]
    return np.column_stack([_naive_power(f, n_fft) for f in frames])


def _naive_dct(x):
    n = x.size
    k = np.arange(n)[:, np.newaxis]
    basis = np.cos(np.pi * k * (2 * np.arange(n) + 1) / (2 * n))
    scale = np.full(n, np.sqrt(2.0 / n))
    scale[0] = np.sqrt(1.0 / n)
    return scale * (basis @ x)


class TestPowerSpectrum:
    """Tests for the one-sided power spectrum."""

    def test_zero_input(self):
        """Test silence gives an all-zero spectrum."""
        from src.signals import power_spectrum

        assert np.all(power_spectrum(np.zeros(N)) == 0.0)

    def test_sine_peak_matches_naive_dft(self):
        """Test a 1 kHz sine peaks at 1 kHz and matches a direct DFT."""
        from src.signals import power_spectrum

        x = _tone(1000.0)
        spectrum = power_spectrum(x)
        n_fft = 2 * (spectrum.size - 1)
        bin_width = SR / n_fft
        assert abs(np.argmax(spectrum) * bin_width - 1000.0) <= bin_width

        reference = _naive_power(x, n_fft)
        np.testing.assert_allclose(spectrum, reference, rtol=1e-6, atol=1e-6 * reference.max())

    def test_parseval(self):
        """Test time-domain energy equals spectrum energy over n."""
        from src.signals import power_spectrum

        x = np.random.default_rng(0).normal(size=N)
        spectrum = power_spectrum(x)
        n_fft = 2 * (spectrum.size - 1)
        assert spectrum.sum() / n_fft == pytest.approx(np.sum(x**2), rel=1e-6)

    def test_spectrogram_frames(self):
        """Test the centered STFT yields nine frames of 513 bins."""
        from src.signals import spectrogram

        assert spectrogram(np.zeros(N)).shape == (513, 9)

    def test_spectrogram_frames_match_naive_dft(self):
        """Test every frame, edge frames included, matches a direct DFT bin by bin."""
        from src.signals import spectrogram

        x = np.random.default_rng(3).normal(scale=0.2, size=N)
        fast, slow = spectrogram(x), _naive_spectrogram(x)
        np.testing.assert_allclose(fast, slow, rtol=1e-6, atol=1e-9 * slow.max())
        np.testing.assert_allclose(fast.sum(axis=0) / slow.sum(axis=0), 1.0, rtol=1e-6)


class TestMelAndMfcc:
    """Tests for mel energies and cepstral coefficients."""

    def test_zero_spectrum_floor(self):
        """Test silence floors every band at log(eps)."""
        from src.signals import mel_features, spectrogram

        mel = mel_features(spectrogram(np.zeros(N)))
        assert mel.shape == (128,)
        assert np.allclose(mel, np.log(1e-10))

    def test_sine_band(self):
        """Test a 1 kHz sine lands in the band centered nearest 1 kHz."""
        from src.signals import mel_features, power_spectrum
        from src.signals.spectral import band_centers

        mel = mel_features(power_spectrum(_tone(1000.0)))
        nearest = int(np.argmin(np.abs(band_centers(SR, 128) - 1000.0)))
        assert abs(int(np.argmax(mel)) - nearest) <= 1

    def test_white_noise_tracks_bandwidth(self):
        """Test white-noise band energy is proportional to filter area."""
        from src.signals import mel_features, mel_filterbank, power_spectrum

        rng = np.random.default_rng(42)
        energies = np.mean(
            [np.exp(mel_features(power_spectrum(rng.normal(size=N)))) for _ in range(100)], axis=0
        )
        areas = mel_filterbank(SR, 8192, 128).sum(axis=1)
        ratio = energies / areas
        assert np.all(np.abs(ratio / np.median(ratio) - 1.0) < 0.2)

    def test_mfcc_of_constant(self):
        """Test a constant log-mel vector only excites coefficient 0."""
        from src.signals import mfcc

        coeffs = mfcc(np.full(128, 2.5))
        assert coeffs.shape == (40,)
        assert coeffs[0] == pytest.approx(2.5 * np.sqrt(128))
        assert np.allclose(coeffs[1:], 0.0, atol=1e-9)

    def test_mfcc_of_silence(self):
        """Test silence gives log(eps) sqrt(128) then zeros."""
        from src.signals import mel_features, mfcc, spectrogram

        coeffs = mfcc(mel_features(spectrogram(np.zeros(N))))
        assert coeffs[0] == pytest.approx(np.log(1e-10) * np.sqrt(128))
        assert np.allclose(coeffs[1:], 0.0, atol=1e-9)

    def test_mfcc_matches_naive_dct(self):
        """Test the DCT against direct summation."""
        from src.signals import mfcc

        rng = np.random.default_rng(1)
        for _ in range(10):
            mel = rng.normal(size=128)
            np.testing.assert_allclose(mfcc(mel), _naive_dct(mel)[:40], atol=1e-9)

    def test_pipeline_matches_naive_oracle(self):
        """Test mel, MFCC and chroma from the FFT path match a direct-DFT path."""
        from src.signals import chroma, mel_features, mfcc, spectrogram

        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.normal(scale=0.2, size=N)
            fast, slow = spectrogram(x), _naive_spectrogram(x)
            np.testing.assert_allclose(mel_features(fast), mel_features(slow), rtol=1e-6)
            np.testing.assert_allclose(
                mfcc(mel_features(fast)), _naive_dct(mel_features(slow))[:40], rtol=1e-6, atol=1e-9
            )
            np.testing.assert_allclose(chroma(fast), chroma(slow), rtol=1e-6)

    def test_empty_filters_warn(self):
        """Test an over-resolved filterbank warns about empty bands."""
        from src.signals import EmptyMelFilterWarning, mel_filterbank

        with pytest.warns(EmptyMelFilterWarning):
            mel_filterbank(8000, 64, 128)


class TestChromaContrastTonnetz:
    """Tests for pitch-class, contrast and tonal features."""

    def test_a440_is_a(self):
        """Test 440 Hz and 880 Hz both fold onto pitch class A."""
        from src.signals import chroma, spectrogram

        assert int(np.argmax(chroma(spectrogram(_tone(440.0))))) == 9
        assert int(np.argmax(chroma(spectrogram(_tone(880.0))))) == 9

    def test_zero_chroma(self):
        """Test silence yields zero chroma."""
        from src.signals import chroma, spectrogram

        assert np.all(chroma(spectrogram(np.zeros(N))) == 0.0)

    def test_contrast_tone_beats_noise(self):
        """Test an in-band tone has higher contrast than white noise."""
        from src.signals import spectral_contrast, spectrogram

        rng = np.random.default_rng(3)
        tone = spectral_contrast(spectrogram(_tone(1200.0, 0.5)))
        noise = spectral_contrast(spectrogram(rng.normal(scale=0.1, size=N)))
        assert tone.shape == (7,)
        assert tone[3] > noise[3]

    def test_contrast_flat_and_zero(self):
        """Test flat and zero spectra have no contrast."""
        from src.signals import spectral_contrast

        assert np.allclose(spectral_contrast(np.ones((513, 3))), 0.0)
        assert np.allclose(spectral_contrast(np.zeros(513)), 0.0)

    def test_tonnetz_uniform(self):
        """Test a uniform chroma projects to the origin."""
        from src.signals import tonnetz

        assert np.allclose(tonnetz(np.ones(12)), 0.0, atol=1e-12)

    def test_tonnetz_single_class(self):
        """Test one active pitch class returns its basis angles."""
        from src.signals import tonnetz

        k = 4
        profile = np.zeros(12)
        profile[k] = 0.3
        expected = [
            np.sin(k * 7 * np.pi / 6),
            np.cos(k * 7 * np.pi / 6),
            np.sin(k * 3 * np.pi / 2),
            np.cos(k * 3 * np.pi / 2),
            0.5 * np.sin(k * 2 * np.pi / 3),
            0.5 * np.cos(k * 2 * np.pi / 3),
        ]
        np.testing.assert_allclose(tonnetz(profile), expected, atol=1e-12)

    def test_tonnetz_scale_invariant(self):
        """Test positive scaling leaves the centroid unchanged."""
        from src.signals import tonnetz

        profile = np.random.default_rng(2).uniform(size=12)
        np.testing.assert_allclose(tonnetz(profile), tonnetz(7.5 * profile), atol=1e-12)
        assert np.all(tonnetz(np.zeros(12)) == 0.0)


class TestFusion:
    """Tests for early fusion and masks."""

    def test_force_layout(self):
        """Test the force buffer flattens time-major."""
        from src.signals import force_features

        assert np.all(force_features(np.zeros((10, 6))) == 0.0)
        buf = np.zeros((10, 6))
        buf[3, 2] = 4.0
        flat = force_features(buf)
        assert flat[3 * 6 + 2] == 4.0 and np.count_nonzero(flat) == 1
        np.testing.assert_array_equal(flat.reshape(10, 6), buf)

    def test_lengths(self):
        """Test full, MFCC+forces and single-mic layouts."""
        from src.signals import FeatureMask, NAMED_MASKS, fuse

        window = _window(np.random.default_rng(0))
        assert len(fuse(window)) == 832
        assert len(fuse(window, NAMED_MASKS["mfcc_forces"])) == 4 * 40 + 60
        assert len(fuse(window, FeatureMask(channels=(1,), forces=False))) == 193
        assert len(NAMED_MASKS) == 13

    def test_masked_is_subsequence(self):
        """Test masked vectors equal the full vector at the mask indices."""
        from src.signals import NAMED_MASKS, fuse

        window = _window(np.random.default_rng(1))
        full = fuse(window).values
        for mask in NAMED_MASKS.values():
            np.testing.assert_array_equal(fuse(window, mask).values, full[mask.indices()])

    def test_deterministic(self):
        """Test identical windows give bit-identical features."""
        from src.signals import fuse

        a = fuse(_window(np.random.default_rng(5))).values
        b = fuse(_window(np.random.default_rng(5))).values
        np.testing.assert_array_equal(a, b)
        assert np.all(np.isfinite(a))

    def test_amplitude_robustness(self):
        """Test scaling the vibration shifts only MFCC coefficient 0."""
        from src.signals import SensorWindow
        from src.signals.fusion import channel_features

        window = _window(np.random.default_rng(9))
        scaled = SensorWindow(vibration=3.0 * window.vibration, forces=window.forces)
        a = channel_features(window.vibration[2])
        b = channel_features(scaled.vibration[2])
        assert b[0] - a[0] == pytest.approx(2 * np.log(3.0) * np.sqrt(128), rel=1e-9)
        np.testing.assert_allclose(b[1:40], a[1:40], atol=1e-9)
        np.testing.assert_allclose(b[40:52], a[40:52], atol=1e-12)
        np.testing.assert_allclose(b[-6:], a[-6:], atol=1e-12)

    def test_window_shape_checked(self):
        """Test malformed windows are rejected."""
        from src.signals import DimensionMismatchError, SensorWindow

        with pytest.raises(DimensionMismatchError):
            SensorWindow(vibration=np.zeros((4, 100)), forces=np.zeros((10, 6)))
        with pytest.raises(DimensionMismatchError):
            SensorWindow(vibration=np.zeros((4, N)), forces=np.zeros((9, 6)))

    def test_featurize_pool_keeps_order(self):
        """Test the process pool returns rows in input order."""
        from src.signals import featurize_windows

        rng = np.random.default_rng(4)
        windows = [_window(rng) for _ in range(3)]
        serial = featurize_windows(windows, "mfcc_forces", jobs=1)
        pooled = featurize_windows(windows, "mfcc_forces", jobs=2)
        np.testing.assert_array_equal(serial, pooled)


class TestDataset:
    """Tests for JSON-lines datasets."""

    def _dataset(self):
        from src.signals import Dataset, DatasetRow

        rng = np.random.default_rng(0)
        rows = [
            DatasetRow(f"w{i}", "ep0", "slicing_action", "slicing object", "tofu", (0.002, 0.05), rng.normal(size=832))
            for i in range(4)
        ]
        return Dataset.from_rows(rows, info={"seed": 3})

    def test_round_trip_is_byte_stable(self, tmp_path):
        """Test rewriting a read dataset reproduces the same bytes."""
        from src.signals import read_dataset, write_dataset

        first = write_dataset(tmp_path / "a.jsonl", self._dataset())
        loaded = read_dataset(first)
        second = write_dataset(tmp_path / "b.jsonl", loaded)
        assert first.read_bytes() == second.read_bytes()
        assert loaded.info["seed"] == 3
        assert (tmp_path / "a.meta.json").exists()

    def test_with_mask(self):
        """Test narrowing a dataset to a named mask."""
        from src.signals import NAMED_MASKS

        data = self._dataset()
        narrow = data.with_mask("mfcc_forces")
        assert narrow.features.shape == (4, 220)
        np.testing.assert_array_equal(narrow.features, data.features[:, NAMED_MASKS["mfcc_forces"].indices()])
