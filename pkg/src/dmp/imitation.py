"""Imitation Learning of DMP Weights via Ridge Regression"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from src.config import get_settings
from src.dmp.primitives import (
    AxisDmp,
    DmpConfig,
    ObjectFeatures,
    Trajectory,
    basis_activations,
    canonical_rollout,
    minimum_jerk,
    rollout_skill,
)

CONDITION_LIMIT = 1e12

DEMO_AMPLITUDE = 0.02
DEMO_DEPTH = 0.01
DEMO_DURATION = 1.0


class IllConditionedError(ValueError):
    """Normal equations cannot be solved without regularization."""

    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(
            f"normal equations are ill-conditioned (cond={condition_number:.3e}); "
            "use a ridge coefficient lambda > 0"
        )


def _on_grid(times: np.ndarray, dt: float) -> bool:
    if times.size < 2:
        return True
    return abs(times[0]) < 1e-12 and np.allclose(np.diff(times), dt, rtol=1e-9, atol=1e-12)


def resample(demo: Trajectory, dt: float) -> Trajectory:
    """
    Resample a demonstration onto a uniform grid starting at t=0.

    Demos already on the grid are returned unchanged; others are
    interpolated with a cubic spline.

    Args:
        demo: Recorded trajectory
        dt: Target step in seconds

    Returns:
        Trajectory on the dt grid
    """
    if _on_grid(demo.times, dt):
        return demo
    if len(demo) < 2:
        raise ValueError("cannot resample a single-sample demonstration")

    times = demo.times - demo.times[0]
    n = int(np.floor(times[-1] / dt + 1e-9)) + 1
    grid = np.arange(n) * dt
    spline = CubicSpline(times, demo.positions, axis=1)
    return Trajectory(times=grid, positions=spline(grid), axes=demo.axes)


def _design_rows(config: DmpConfig, n_samples: int) -> np.ndarray:
    """Regression rows alpha_z beta_z [psi_0, psi_k x / sum psi] at interior samples."""
    x = canonical_rollout(config.tau, config.dt, n_samples)[1:-1]
    psi = basis_activations(x, config)
    gaussians = psi[:, 1:]
    total = gaussians.sum(axis=1, keepdims=True)
    normalized = np.where(total < 1e-12, 0.0, gaussians * x[:, np.newaxis] / np.maximum(total, 1e-12))
    return config.alpha_z * config.beta_z * np.hstack([psi[:, :1], normalized])


def forcing_target(y: np.ndarray, config: DmpConfig) -> np.ndarray:
    """
    Invert the transformation system on a sampled path.

    Uses central differences at interior samples, which matches the
    rollout integrator exactly.

    Args:
        y: Positions on the dt grid
        config: DMP configuration

    Returns:
        Target forcing at samples 1..n-2
    """
    dt, tau = config.dt, config.tau
    ydot = (y[2:] - y[:-2]) / (2.0 * dt)
    yddot = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / dt**2
    spring = config.alpha_z * (config.beta_z * (y[0] - y[1:-1]) - ydot / tau)
    return yddot / tau**2 - spring


def ridge_solve(design: np.ndarray, target: np.ndarray, ridge_lambda: float) -> np.ndarray:
    """Solve (X^T X + lambda I) w = X^T y."""
    gram = design.T @ design
    if ridge_lambda == 0.0:
        cond = float(np.linalg.cond(gram))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise IllConditionedError(cond)
    else:
        gram.ravel()[:: gram.shape[0] + 1] += ridge_lambda
    return scipy.linalg.solve(gram, design.T @ target, assume_a="sym")


def fit_weights(
    demos: Sequence[Trajectory],
    config: Optional[DmpConfig] = None,
    ridge_lambda: Optional[float] = None,
    axes: Optional[Sequence[str]] = None,
) -> dict[str, AxisDmp]:
    """
    Learn one weight row per axis from demonstrations.

    All demos are resampled to the config's dt and stacked into a joint
    ridge problem per axis.

    Args:
        demos: One or more demonstrations sharing axis labels
        config: DMP configuration (default from settings)
        ridge_lambda: Ridge coefficient, >= 0
        axes: Axes to fit (default all demo axes)

    Returns:
        Axis label -> AxisDmp with a single (bias) feature row

    Raises:
        IllConditionedError: lambda == 0 and the normal equations are singular
    """
    if not demos:
        raise ValueError("fit_weights needs at least one demonstration")
    config = config or DmpConfig.default()
    if ridge_lambda is None:
        ridge_lambda = get_settings().dmp_ridge_lambda
    if ridge_lambda < 0:
        raise ValueError(f"ridge lambda must be >= 0, got {ridge_lambda}")

    axes = tuple(axes or demos[0].axes)
    sampled = [resample(demo, config.dt) for demo in demos]
    for demo in sampled:
        missing = set(axes) - set(demo.axes)
        if missing:
            raise ValueError(f"demonstration lacks axes {sorted(missing)}")
        if len(demo) < 3:
            raise ValueError("demonstrations need at least 3 samples on the dt grid")

    designs = {len(d): _design_rows(config, len(d)) for d in sampled}
    design = np.vstack([designs[len(d)] for d in sampled])

    fitted = {}
    for axis in axes:
        target = np.concatenate([forcing_target(d.axis(axis), config) for d in sampled])
        weights = ridge_solve(design, target, ridge_lambda)
        fitted[axis] = AxisDmp(config=config, weights=weights[np.newaxis, :])
    return fitted


def attach_material_feature(dmp: AxisDmp, scale: float) -> AxisDmp:
    """
    Extend a fitted single-row DMP with a material feature row.

    Row 0 keeps the demonstrated motion (phi_0 bias); row 1 is the same
    shape divided by the demonstrated displacement, so each meter of phi_1
    adds one meter of that displacement.

    Args:
        dmp: Fitted DMP with one feature row
        scale: Magnitude of the demonstrated displacement (m), nonzero

    Returns:
        AxisDmp with M=2
    """
    if dmp.n_features != 1:
        raise ValueError("material feature can only be attached to a single-row DMP")
    if scale == 0 or not np.isfinite(scale):
        raise ValueError(f"scale must be finite and nonzero, got {scale}")
    bias = dmp.weights[0]
    return AxisDmp(config=dmp.config, weights=np.vstack([bias, bias / scale]))


def synthetic_slicing_demos(
    n: int = 10,
    seed: int = 0,
    dt: Optional[float] = None,
    jitter: float = 0.01,
) -> list[Trajectory]:
    """
    Kinesthetic-style slicing demonstrations.

    X performs an out-and-back sawing stroke, Z descends while cutting and
    Y is held. Amplitude and depth carry seeded +/-1% jitter; all demos
    share the same time-normalized duration.

    Args:
        n: Number of demonstrations
        seed: RNG seed
        dt: Sample step (default DMP dt)
        jitter: Relative jitter half-width

    Returns:
        List of Trajectory with axes (x, y, z)
    """
    if n < 1:
        raise ValueError(f"need at least one demonstration, got {n}")
    dt = dt or get_settings().dmp_dt
    rng = np.random.default_rng(seed)
    times = np.arange(int(round(DEMO_DURATION / dt)) + 1) * dt

    demos = []
    for _ in range(n):
        amplitude, depth = np.array([DEMO_AMPLITUDE, DEMO_DEPTH]) * (
            1.0 + rng.uniform(-jitter, jitter, size=2)
        )
        s = times / times[-1]
        stroke = np.where(s < 0.5, minimum_jerk(2.0 * s), minimum_jerk(2.0 - 2.0 * s))
        positions = np.vstack(
            [amplitude * stroke, np.zeros_like(s), -depth * minimum_jerk(s)]
        )
        demos.append(Trajectory(times=times, positions=positions, axes=("x", "y", "z")))
    return demos


@dataclass(frozen=True)
class SlicingSkill:
    """Material-conditioned slicing primitive for the X and Z axes."""

    dmps: Mapping[str, AxisDmp]
    duration: float = DEMO_DURATION

    def features(self, phi_x: float, phi_z: float) -> dict[str, ObjectFeatures]:
        """Object features for amplitude phi_x and height phi_z (m)."""
        return {
            "x": ObjectFeatures.material(phi_x),
            "z": ObjectFeatures.material(phi_z),
        }

    def trajectory(self, start: Mapping[str, float], phi_x: float, phi_z: float) -> Trajectory:
        """Roll out one slicing action from ``start``."""
        return rollout_skill(
            self.dmps, self.features(phi_x, phi_z), start, self.duration, hold_axes=("y",)
        )


@lru_cache
def build_slicing_skill(n_demos: int = 10, seed: int = 0) -> SlicingSkill:
    """
    Fit the slicing skill from synthetic demonstrations.

    Args:
        n_demos: Demonstrations used for fitting
        seed: Demonstration seed

    Returns:
        SlicingSkill with M=2 rows on X and Z
    """
    demos = synthetic_slicing_demos(n_demos, seed=seed)
    fitted = fit_weights(demos, axes=("x", "z"))
    return SlicingSkill(
        dmps={
            "x": attach_material_feature(fitted["x"], DEMO_AMPLITUDE),
            "z": attach_material_feature(fitted["z"], DEMO_DEPTH),
        }
    )
