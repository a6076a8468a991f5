"""Unit tests for the DMP module."""

import numpy as np
import pytest


def _random_dmp(rng, n_rows=1, scale=0.05, **config_kwargs):
    from src.dmp import AxisDmp, DmpConfig

    config = DmpConfig.default(**config_kwargs)
    weights = rng.uniform(-scale, scale, size=(n_rows, config.n_basis + 1))
    return AxisDmp(config=config, weights=weights)


class TestDmpConfig:
    """Tests for DMP configuration."""

    def test_default_layout(self):
        """Test equally spaced centers and critical damping default."""
        from src.dmp import DmpConfig

        config = DmpConfig.default()
        assert config.n_basis == 30
        assert config.alpha_z == 25.0
        assert config.beta_z == pytest.approx(25.0 / 4.0)
        assert config.basis_centers[0] == 1.0
        assert np.all(np.diff(config.basis_centers) < 0)
        assert np.all(config.basis_widths > 0)

    def test_neighbour_overlap(self):
        """Test neighbouring Gaussians meet at the configured overlap."""
        from src.dmp import DmpConfig, basis_activations

        config = DmpConfig.default(n_basis=10)
        midpoint = (config.basis_centers[0] + config.basis_centers[1]) / 2.0
        psi = basis_activations(midpoint, config)
        assert psi[1] == pytest.approx(0.7)
        assert psi[2] == pytest.approx(0.7)

    def test_rejects_invalid_values(self):
        """Test invariant violations are rejected."""
        from src.dmp import DmpConfig

        with pytest.raises(ValueError):
            DmpConfig(1.0, 1.0, 0.0, np.array([0.5]), np.array([1.0]), 0.001)
        with pytest.raises(ValueError):
            DmpConfig(1.0, 1.0, 1.0, np.array([0.5]), np.array([-1.0]), 0.001)
        with pytest.raises(ValueError):
            DmpConfig(-1.0, 1.0, 1.0, np.array([0.5]), np.array([1.0]), 0.001)


class TestCanonicalSystem:
    """Tests for the phase clock."""

    def test_initial_condition(self):
        """Test a single step returns the start phase."""
        from src.dmp import canonical_rollout

        assert canonical_rollout(1.0, 0.01, 1).tolist() == [1.0]

    def test_exponential_decay(self):
        """Test phase matches exp(-tau t)."""
        from src.dmp import canonical_rollout

        x = canonical_rollout(1.0, 0.001, 101)
        assert x[100] == pytest.approx(np.exp(-0.1), abs=1e-9)

        x = canonical_rollout(2.0, 0.001, 1001)
        assert x[1000] == pytest.approx(np.exp(-2.0), abs=1e-9)
        assert np.all(np.diff(x) < 0)

    def test_rejects_non_positive(self):
        """Test non-positive tau or dt is rejected."""
        from src.dmp import canonical_rollout

        with pytest.raises(ValueError):
            canonical_rollout(0.0, 0.01, 5)
        with pytest.raises(ValueError):
            canonical_rollout(1.0, -0.01, 5)


class TestBasisAndForcing:
    """Tests for basis activations and the forcing term."""

    def test_gaussian_peak_at_center(self):
        """Test psi_k equals 1 at its own center."""
        from src.dmp import DmpConfig, basis_activations

        config = DmpConfig.default()
        psi = basis_activations(config.basis_centers[4], config)
        assert psi[5] == pytest.approx(1.0)

    def test_minimum_jerk_endpoints(self):
        """Test psi_0 rises from 0 at x=1 toward 1 as x -> 0."""
        from src.dmp import DmpConfig, basis_activations

        config = DmpConfig.default()
        assert basis_activations(1.0, config)[0] == 0.0
        assert basis_activations(1e-9, config)[0] == pytest.approx(1.0, abs=1e-9)

    def test_clamp_warns(self):
        """Test phase outside (0, 1] is clamped with a warning."""
        from src.dmp import DmpConfig, PhaseClampWarning, basis_activations

        config = DmpConfig.default()
        with pytest.warns(PhaseClampWarning):
            psi = basis_activations(1.5, config)
        assert psi[0] == 0.0

    def test_zero_weights(self):
        """Test zero weights give zero forcing everywhere."""
        from src.dmp import DmpConfig, forcing

        config = DmpConfig.default()
        x = np.linspace(0.01, 1.0, 50)
        assert np.all(forcing(x, np.zeros(config.n_basis + 1), config) == 0.0)

    def test_minimum_jerk_weight_limit(self):
        """Test only w_0 = g drives the forcing to alpha beta g as x -> 0."""
        from src.dmp import DmpConfig, forcing

        config = DmpConfig.default()
        weights = np.zeros(config.n_basis + 1)
        weights[0] = 0.3
        value = forcing(1e-8, weights, config)
        assert value == pytest.approx(config.alpha_z * config.beta_z * 0.3, rel=1e-6)

    def test_matches_hand_evaluation(self):
        """Test forcing matches a term-by-term evaluation."""
        from src.dmp import DmpConfig, forcing

        config = DmpConfig.default(n_basis=8)
        rng = np.random.default_rng(3)
        w = rng.normal(size=config.n_basis + 1)
        x = 0.5

        psi = [np.exp(-h * (x - c) ** 2) for c, h in zip(config.basis_centers, config.basis_widths)]
        s = 1.0 - x
        psi0 = 10 * s**3 - 15 * s**4 + 6 * s**5
        expected = sum(p * wk * x for p, wk in zip(psi, w[1:])) / sum(psi) + w[0] * psi0
        expected *= config.alpha_z * config.beta_z

        assert forcing(x, w, config) == pytest.approx(expected, rel=1e-12)


class TestRollout:
    """Tests for integrating the transformation system."""

    def test_zero_weights_hold(self):
        """Test an unforced system at rest stays at y0."""
        from src.dmp import AxisDmp, DmpConfig, ObjectFeatures, rollout

        config = DmpConfig.default()
        dmp = AxisDmp(config=config, weights=np.zeros((1, config.n_basis + 1)))
        traj = rollout(dmp, ObjectFeatures(), y0=0.3, duration=2.0)
        assert np.all(traj.positions == 0.3)
        assert len(traj) == 2001

    def test_bias_fixed_point(self):
        """Test w_00 = 0.05 drives the state to y0 + 0.05."""
        from src.dmp import AxisDmp, DmpConfig, ObjectFeatures, rollout

        config = DmpConfig.default()
        weights = np.zeros((1, config.n_basis + 1))
        weights[0, 0] = 0.05
        traj = rollout(AxisDmp(config, weights), ObjectFeatures(), y0=0.0, duration=10.0)
        assert traj.positions[0, -1] == pytest.approx(0.05, abs=1e-3)

    def test_linear_in_phi(self):
        """Test doubling phi_1 doubles its displacement contribution."""
        from src.dmp import ObjectFeatures, rollout

        rng = np.random.default_rng(11)
        dmp = _random_dmp(rng, n_rows=2)
        end = {
            a: rollout(dmp, ObjectFeatures.material(a), 0.1, 3.0).positions[0, -1]
            for a in (0.0, 0.01, 0.02)
        }
        assert end[0.02] - end[0.0] == pytest.approx(2 * (end[0.01] - end[0.0]), abs=1e-6)

    def test_fixed_point_property(self):
        """Test random models converge to y0 + sum phi_j w_j0 by t = 10/tau."""
        from src.dmp import ObjectFeatures, fixed_point, rollout

        rng = np.random.default_rng(0)
        for _ in range(100):
            tau = rng.uniform(0.5, 3.0)
            dmp = _random_dmp(rng, n_rows=2, scale=0.1, tau=tau)
            phi = ObjectFeatures.material(rng.uniform(0.0, 2.0))
            y0 = rng.uniform(-0.5, 0.5)
            traj = rollout(dmp, phi, y0, duration=10.0 / tau)
            assert abs(traj.positions[0, -1] - fixed_point(dmp, phi, y0)) < 1e-3

    def test_phase_invariance(self):
        """Test scaling tau and duration together rescales time only."""
        from src.dmp import AxisDmp, ObjectFeatures, rollout
        from dataclasses import replace

        rng = np.random.default_rng(5)
        slow = _random_dmp(rng, tau=1.0)
        fast = AxisDmp(config=replace(slow.config, tau=2.0), weights=slow.weights)

        a = rollout(slow, ObjectFeatures(), 0.0, 2.0).positions[0]
        b = rollout(fast, ObjectFeatures(), 0.0, 1.0).positions[0]
        np.testing.assert_allclose(a[::2], b, atol=2e-4)

    def test_phi_length_mismatch(self):
        """Test phi must match the number of weight rows."""
        from src.dmp import ObjectFeatures, rollout

        dmp = _random_dmp(np.random.default_rng(1), n_rows=2)
        with pytest.raises(ValueError):
            rollout(dmp, ObjectFeatures(), 0.0, 1.0)

    def test_phi_bias_enforced(self):
        """Test phi[0] must be exactly one."""
        from src.dmp import ObjectFeatures

        with pytest.raises(ValueError):
            ObjectFeatures(np.array([0.5, 0.1]))

    def test_divergence_names_step(self):
        """Test an unstable step size raises an instability error."""
        from dataclasses import replace

        from src.dmp import AxisDmp, IntegrationInstabilityError, ObjectFeatures, rollout

        dmp = _random_dmp(np.random.default_rng(2), scale=1.0)
        coarse = AxisDmp(config=replace(dmp.config, dt=0.2), weights=dmp.weights)
        with pytest.raises(IntegrationInstabilityError, match="dt=0.2"):
            rollout(coarse, ObjectFeatures(), 0.0, 20.0)


class TestImitation:
    """Tests for ridge-regression imitation learning."""

    def test_self_consistency_round_trip(self):
        """Test weights are recovered from a rollout of a known model."""
        from src.dmp import ObjectFeatures, fit_weights, rollout

        dmp = _random_dmp(np.random.default_rng(21))
        demo = rollout(dmp, ObjectFeatures(), 0.2, 4.0, axis="x")
        fitted = fit_weights([demo], dmp.config, ridge_lambda=1e-9)["x"]
        np.testing.assert_allclose(fitted.weights, dmp.weights, atol=1e-4)

    def test_minimum_jerk_demos(self):
        """Test a fit to ten synthetic demos reproduces each within 2% of range."""
        from src.dmp import ObjectFeatures, fit_weights, rollout, synthetic_slicing_demos

        demos = synthetic_slicing_demos(10, seed=0)
        fitted = fit_weights(demos, axes=("x", "z"))
        for demo in demos:
            for axis in ("x", "z"):
                target = demo.axis(axis)
                produced = rollout(fitted[axis], ObjectFeatures(), target[0], 1.0).positions[0]
                rmse = np.sqrt(np.mean((produced[: target.size] - target) ** 2))
                assert rmse < 0.02 * np.ptp(target)

    def test_refit_is_contractive(self):
        """Test refitting a rollout of a fitted model barely moves the weights."""
        from src.dmp import ObjectFeatures, fit_weights, rollout, synthetic_slicing_demos

        fitted = fit_weights(synthetic_slicing_demos(3, seed=1), axes=("z",))["z"]
        replay = rollout(fitted, ObjectFeatures(), 0.0, 4.0, axis="z")
        refit = fit_weights([replay], fitted.config, ridge_lambda=1e-9)["z"]
        drift = np.max(np.abs(refit.weights - fitted.weights))
        assert drift < 1e-6 * max(1.0, np.max(np.abs(fitted.weights)))

    def test_large_lambda_degenerates_to_hold(self):
        """Test a huge ridge coefficient drives weights and motion to zero."""
        from src.dmp import ObjectFeatures, fit_weights, rollout, synthetic_slicing_demos

        fitted = fit_weights(synthetic_slicing_demos(2), ridge_lambda=1e15, axes=("z",))["z"]
        assert np.max(np.abs(fitted.weights)) < 1e-6
        traj = rollout(fitted, ObjectFeatures(), 0.4, 1.0)
        assert np.max(np.abs(traj.positions - 0.4)) < 1e-6

    def test_ill_conditioned_requires_lambda(self):
        """Test singular normal equations at lambda=0 report the condition number."""
        from src.dmp import DmpConfig, IllConditionedError, Trajectory, fit_weights

        config = DmpConfig.default()
        times = np.arange(6) * config.dt
        demo = Trajectory(times=times, positions=np.linspace(0, 1e-3, 6)[np.newaxis], axes=("x",))
        with pytest.raises(IllConditionedError) as excinfo:
            fit_weights([demo], config, ridge_lambda=0.0)
        assert excinfo.value.condition_number > 1e12

    def test_resamples_off_grid_demo(self):
        """Test demos on another clock are interpolated onto dt."""
        from src.dmp import Trajectory, resample

        times = np.linspace(0.0, 1.0, 41)
        demo = Trajectory(times=times, positions=(times**2)[np.newaxis], axes=("z",))
        out = resample(demo, 0.001)
        assert len(out) == 1001
        assert out.axis("z")[500] == pytest.approx(0.25, abs=1e-9)


class TestSkillsAndChaining:
    """Tests for material-conditioned skills and DMP chaining."""

    def test_material_height_deepens_cut(self):
        """Test larger phi_z descends further and larger phi_x sweeps wider."""
        from src.dmp import build_slicing_skill

        skill = build_slicing_skill()
        start = {"x": 0.0, "y": 0.0, "z": 0.05}
        shallow = skill.trajectory(start, 0.0, 0.005)
        deep = skill.trajectory(start, 0.0, 0.03)
        assert deep.axis("z").min() < shallow.axis("z").min() - 0.02
        wide = skill.trajectory(start, 0.02, 0.005)
        assert np.ptp(wide.axis("x")) > np.ptp(shallow.axis("x")) + 0.015
        assert np.all(shallow.axis("y") == 0.0)

    def test_single_segment_chain_equals_rollout(self):
        """Test a chain of one is the plain rollout."""
        from src.dmp import ObjectFeatures, chain, rollout_skill

        rng = np.random.default_rng(4)
        dmps = {"x": _random_dmp(rng), "z": _random_dmp(rng)}
        feats = {"x": ObjectFeatures(), "z": ObjectFeatures()}
        start = {"x": 0.1, "y": 0.0, "z": 0.2}
        a = chain([(dmps, feats)], start, 1.0)
        b = rollout_skill(dmps, feats, start, 1.0)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_zero_segments_constant(self):
        """Test two zero-weight segments produce a constant trajectory."""
        from src.dmp import AxisDmp, DmpConfig, ObjectFeatures, chain

        config = DmpConfig.default()
        zero = AxisDmp(config, np.zeros((1, config.n_basis + 1)))
        seg = ({"x": zero, "z": zero}, {"x": ObjectFeatures(), "z": ObjectFeatures()})
        traj = chain([seg, seg], {"x": 0.1, "y": 0.2, "z": 0.3}, 0.5)
        assert np.all(traj.axis("z") == 0.3)
        assert np.all(np.diff(traj.times) > 0)

    def test_seams_are_exact(self):
        """Test chained slicing segments start exactly where the previous ended."""
        from src.dmp import build_slicing_skill, chain_segments

        skill = build_slicing_skill()
        seg = (skill.dmps, skill.features(0.01, 0.01))
        pieces = chain_segments([seg, seg, seg], {"x": 0.0, "y": 0.0, "z": 0.05}, 1.0)
        for prev, nxt in zip(pieces, pieces[1:]):
            assert np.max(np.abs(nxt.positions[:, 0] - prev.positions[:, -1])) == 0.0

    def test_axis_mismatch_rejected(self):
        """Test segments with different axes are rejected."""
        from src.dmp import ObjectFeatures, chain

        rng = np.random.default_rng(8)
        a = ({"x": _random_dmp(rng)}, {"x": ObjectFeatures()})
        b = ({"z": _random_dmp(rng)}, {"z": ObjectFeatures()})
        with pytest.raises(ValueError):
            chain([a, b], {"x": 0.0, "z": 0.0}, 1.0)


class TestStorage:
    """Tests for DMP persistence."""

    def test_model_file(self, tmp_path):
        """Test model JSON preserves config and weights."""
        from src.dmp import build_slicing_skill, load_dmp_model, save_dmp_model

        skill = build_slicing_skill()
        path = save_dmp_model(tmp_path / "model.json", skill.dmps)
        loaded = load_dmp_model(path)
        assert set(loaded) == {"x", "z"}
        np.testing.assert_array_equal(loaded["z"].weights, skill.dmps["z"].weights)
        assert loaded["x"].config.tau == skill.dmps["x"].config.tau

    def test_trajectory_csv_header(self, tmp_path):
        """Test trajectory CSV uses the t,x,y,z header."""
        from src.dmp import load_demos, save_trajectory_csv, synthetic_slicing_demos

        demo = synthetic_slicing_demos(1)[0]
        path = save_trajectory_csv(tmp_path / "demo_00.csv", demo)
        assert path.read_text().splitlines()[0] == "t,x,y,z"
        loaded = load_demos(tmp_path)[0]
        np.testing.assert_allclose(loaded.positions, demo.positions, atol=1e-9)
