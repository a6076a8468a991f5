"""Unit tests for changepoint detection and episode labeling."""

import numpy as np
import pytest


def _episode(n_windows=20, contact=12, seed=0, creak=0.0):
    """Quiet approach that hits something at window ``contact``, optionally creaking afterwards."""
    from src.signals import SensorWindow

    rng = np.random.default_rng(seed)
    t = np.arange(4410) / 44100
    windows = []
    for i in range(n_windows):
        vibration = rng.normal(scale=1e-3, size=(4, 4410))
        forces = rng.normal(scale=0.05, size=(10, 6))
        if i == contact:
            decay = np.exp(-np.arange(2205) / 300.0)
            vibration[:, 2205:] += 0.3 * decay * rng.normal(size=(4, 2205))
            forces[5:, 2] += 15.0
        elif i > contact:
            vibration += creak * np.sin(2 * np.pi * 900.0 * t)
            forces[:, 2] += 15.0
        windows.append(SensorWindow(vibration=vibration, forces=forces))
    return windows


def _level_stream(n=20, shift_at=12, low=-6.9, high=-2.89, noise=0.01, seed=0):
    """Log-RMS-like stream that steps from ``low`` to ``high``."""
    stream = low + np.random.default_rng(seed).normal(scale=noise, size=n)
    stream[shift_at:] += high - low
    return stream


class TestBocd:
    """Tests for the run-length recursion."""

    def test_stationary_run_grows(self):
        """Test the MAP run length tracks elapsed time on a stationary stream."""
        from src.changepoint import run_bocd

        stream = np.random.default_rng(0).normal(scale=0.1, size=200)
        maps, _ = run_bocd(stream, hazard=1 / 200)
        assert np.mean(maps == np.arange(1, 201)) >= 0.95

    def test_mean_shift_latency(self):
        """Test 5-sigma shifts are caught within 10 windows in 95% of trials."""
        from src.changepoint import run_bocd

        caught = 0
        for trial in range(50):
            rng = np.random.default_rng(100 + trial)
            stream = rng.normal(size=150)
            stream[100:] += 5.0
            maps, _ = run_bocd(stream, hazard=1 / 200)
            for t in range(100, 111):
                if maps[t] < maps[t - 1] and maps[t] < 5:
                    caught += 1
                    break
        assert caught >= 48

    def test_false_alarm_rate(self):
        """Test stationary streams raise resets on under 1% of windows."""
        from src.changepoint import run_bocd

        alarms = 0
        for trial in range(50):
            _, changepoints = run_bocd(np.random.default_rng(trial).normal(size=200), hazard=1 / 200)
            alarms += len(changepoints)
        assert alarms / (50 * 200) < 0.01

    def test_hazard_near_one(self):
        """Test a near-certain hazard keeps the mass on run length 0."""
        from src.changepoint import run_bocd

        maps, _ = run_bocd(np.random.default_rng(1).normal(size=20), hazard=1 - 1e-9)
        assert np.all(maps == 0)

    def test_posterior_valid(self):
        """Test the posterior stays a distribution with one entry per surviving run length."""
        from src.changepoint import BocdState, bocd_update

        state = BocdState.initial(hazard=1 / 200)
        for obs in np.random.default_rng(2).normal(size=300):
            state, _ = bocd_update(state, obs)
            assert state.posterior.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(state.posterior >= 0)
            assert len(np.unique(state.run_lengths)) == len(state.run_lengths)
        assert state.steps == 300
        assert state.run_lengths.max() <= 300

    def test_pruning_drops_stale_runs(self):
        """Test runs spanning a large shift fall below the prune mass and are dropped."""
        from src.changepoint import BocdState, bocd_update

        stream = np.random.default_rng(4).normal(size=300)
        stream[150:] += 20.0
        state = BocdState.initial(hazard=1 / 200)
        for obs in stream:
            state, _ = bocd_update(state, obs, prune_mass=1e-8)
        assert state.posterior.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(state.posterior >= 1e-8)
        assert state.run_lengths.max() <= 150
        assert len(state.run_lengths) <= 151

    def test_scaled_prior(self):
        """Test the stream prior takes the noise level and median but a vague mean."""
        from src.changepoint import BocdPrior

        stream = _level_stream()
        prior = BocdPrior.from_stream(stream)
        assert prior.mu0 == pytest.approx(np.median(stream))
        assert 0.25 * 0.01**2 < prior.beta0 < 4 * 0.01**2
        assert prior.kappa0 < 1e-3
        assert BocdPrior.from_stream([1.0]) == BocdPrior()
        assert BocdPrior.from_stream(np.full(10, -3.0)).kappa0 == 1.0

    def test_scaled_prior_finds_log_level_step(self):
        """Test a step in a log-scale stream far from zero is found within the coincidence horizon."""
        from src.changepoint import BocdPrior, run_bocd

        for seed in range(10):
            stream = _level_stream(seed=seed)
            _, changepoints = run_bocd(stream, hazard=1 / 200, prior=BocdPrior.from_stream(stream))
            assert any(abs(c - 12) <= 3 for c in changepoints), (seed, changepoints)

    def test_rejects_bad_input(self):
        """Test non-finite observations and improper hazards are rejected."""
        from src.changepoint import BocdState, bocd_update

        with pytest.raises(ValueError):
            bocd_update(BocdState.initial(hazard=0.01), float("nan"))
        with pytest.raises(ValueError):
            BocdState.initial(hazard=1.0)

    def test_detect_reset(self):
        """Test only drops in the MAP run length count as resets."""
        from src.changepoint import detect_reset

        assert detect_reset(10, 1)
        assert not detect_reset(10, 11)
        assert not detect_reset(None, 0)


class TestForceTrigger:
    """Tests for force-gradient thresholding."""

    def test_flat(self):
        """Test a flat trace never triggers."""
        from src.changepoint import force_gradient_trigger

        assert not force_gradient_trigger(np.full(10, 3.0), threshold=2.0)

    def test_step(self):
        """Test a 5 N one-sample step triggers at 2 N/sample."""
        from src.changepoint import force_gradient_trigger

        forces = np.zeros((10, 6))
        forces[4:, 2] = 5.0
        assert force_gradient_trigger(forces, "z", 2.0)
        assert not force_gradient_trigger(forces, "x", 2.0)

    def test_ramp(self):
        """Test a slow ramp stays below threshold."""
        from src.changepoint import force_gradient_trigger

        assert not force_gradient_trigger(0.1 * np.arange(10), threshold=2.0)

    def test_needs_two_samples(self):
        """Test a single sample has no gradient."""
        from src.changepoint import force_gradient_trigger

        with pytest.raises(ValueError):
            force_gradient_trigger(np.zeros(1))


class TestLabelEpisode:
    """Tests for episode segmentation."""

    def test_approach_boundary(self):
        """Test the contact window is found from joint sound and force changes."""
        from src.changepoint import SkillSpan, label_episode, labels_per_window

        windows = _episode(contact=12)
        segments = label_episode(windows, [SkillSpan("move_down_on_board", 0, 20)])
        labels = labels_per_window(segments)
        assert len(segments) == 2
        assert abs(segments[1].start - 12) <= 2
        assert labels[0] == "in air" and labels[-1] == "hitting cutting board"

    def test_sustained_contact_boundary(self):
        """Test an impact followed by steady contact noise is split at the impact window."""
        from src.changepoint import SkillSpan, label_episode

        windows = _episode(contact=8, creak=2e-3)
        segments = label_episode(windows, [SkillSpan("move_down_onto_object", 0, 20)])
        assert [(s.start, s.end, s.label) for s in segments] == [
            (0, 8, "in air"),
            (8, 20, "hitting object"),
        ]

    def test_constant_contact(self):
        """Test slicing spans become one slicing segment."""
        from src.changepoint import SkillSpan, label_episode

        segments = label_episode(_episode(), [SkillSpan("slicing_action", 0, 20)])
        assert [(s.start, s.end, s.label, s.source) for s in segments] == [
            (0, 20, "slicing object", "skill-context")
        ]

    def test_no_trigger_warns(self):
        """Test an approach without contact keeps its pre-contact label."""
        from src.changepoint import NoChangepointWarning, SkillSpan, label_episode

        windows = _episode(contact=99)
        with pytest.warns(NoChangepointWarning):
            segments = label_episode(windows, [SkillSpan("move_down_onto_object", 0, 20)])
        assert [(s.label, s.end) for s in segments] == [("in air", 20)]

    def test_missing_timeline(self):
        """Test episodes without a timeline are rejected."""
        from src.changepoint import EpisodeRejectedError, SkillSpan, label_episode

        with pytest.raises(EpisodeRejectedError):
            label_episode(_episode(), None)
        with pytest.raises(EpisodeRejectedError):
            label_episode(_episode(), [SkillSpan("slicing_action", 0, 10)])

    def test_mixed_timeline_partitions(self):
        """Test multi-skill episodes are tiled without gaps."""
        from src.changepoint import label_episode, timeline_from_skills, validate_partition

        skills = ["move_down_on_board"] * 20 + ["move_up_and_over"] * 5
        windows = _episode(n_windows=25)
        timeline = timeline_from_skills(skills)
        assert [(s.skill, s.start, s.end) for s in timeline] == [
            ("move_down_on_board", 0, 20),
            ("move_up_and_over", 20, 25),
        ]
        validate_partition(label_episode(windows, timeline), 25)

    def test_partition_validation(self):
        """Test gaps and overlaps are reported."""
        from src.changepoint import SegmentLabel, validate_partition

        with pytest.raises(ValueError, match="gap"):
            validate_partition([SegmentLabel(0, 3, "in air", "changepoint"), SegmentLabel(4, 6, "in air", "changepoint")], 6)
        with pytest.raises(ValueError, match="overlap"):
            validate_partition([SegmentLabel(0, 3, "in air", "changepoint"), SegmentLabel(2, 6, "in air", "changepoint")], 6)

    def test_observation_is_knife_log_rms(self):
        """Test the observation summary reads the knife microphone."""
        from src.changepoint import window_observation

        vibration = np.zeros((4, 4410))
        vibration[2] = 0.5
        assert window_observation(vibration) == pytest.approx(np.log(0.5))
        assert window_observation(np.zeros((4, 4410))) == pytest.approx(np.log(1e-10))
