"""Parameterized Dynamic Movement Primitives"""

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.signal import lfilter, lfiltic

from src.config import get_settings

DEGENERATE_PHASE_MASS = 1e-12


class IntegrationInstabilityError(RuntimeError):
    """Raised when a rollout leaves the sanity bound."""


class PhaseClampWarning(UserWarning):
    """Canonical phase outside (0, 1] was clamped to the boundary."""


@dataclass(frozen=True)
class DmpConfig:
    """Gains, time coefficient, basis layout and integration step of a DMP."""

    alpha_z: float
    beta_z: float
    tau: float
    basis_centers: np.ndarray
    basis_widths: np.ndarray
    dt: float

    def __post_init__(self):
        centers = np.atleast_1d(np.asarray(self.basis_centers, dtype=float))
        widths = np.atleast_1d(np.asarray(self.basis_widths, dtype=float))
        object.__setattr__(self, "basis_centers", centers)
        object.__setattr__(self, "basis_widths", widths)

        if self.alpha_z <= 0 or self.beta_z <= 0:
            raise ValueError(
                f"gains must be positive (alpha_z={self.alpha_z}, beta_z={self.beta_z})"
            )
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if centers.size < 1 or centers.shape != widths.shape:
            raise ValueError("basis centers and widths must be non-empty and equal length")
        if np.any(widths <= 0):
            raise ValueError("basis widths must be positive")

    @property
    def n_basis(self) -> int:
        """Number of Gaussian basis functions K."""
        return int(self.basis_centers.size)

    @classmethod
    def default(
        cls,
        n_basis: Optional[int] = None,
        alpha_z: Optional[float] = None,
        beta_z: Optional[float] = None,
        tau: Optional[float] = None,
        dt: Optional[float] = None,
        overlap: Optional[float] = None,
    ) -> "DmpConfig":
        """
        Build a config with centers equally spaced in phase.

        Widths are chosen so that neighbouring Gaussians reach ``overlap``
        of their peak halfway between centers.

        Args:
            n_basis: Number of Gaussian bases K
            alpha_z: Spring gain (default from settings)
            beta_z: Damper gain (default alpha_z / 4)
            tau: Time coefficient in 1/s
            dt: Integration step in seconds
            overlap: Neighbour activation at the midpoint, in (0, 1)

        Returns:
            DmpConfig
        """
        settings = get_settings()
        k = n_basis or settings.dmp_n_basis
        alpha = alpha_z or settings.dmp_alpha_z
        beta = beta_z or (alpha / 4.0 if alpha_z else settings.dmp_beta_z)
        overlap = overlap or settings.dmp_overlap
        if not 0.0 < overlap < 1.0:
            raise ValueError(f"overlap must lie in (0, 1), got {overlap}")

        centers = np.linspace(1.0, 1.0 / k, k)
        spacing = 1.0 / k
        width = -np.log(overlap) / (spacing / 2.0) ** 2
        return cls(
            alpha_z=alpha,
            beta_z=beta,
            tau=tau or settings.dmp_tau,
            basis_centers=centers,
            basis_widths=np.full(k, width),
            dt=dt or settings.dmp_dt,
        )

    def to_dict(self) -> dict:
        """JSON-serializable form."""
        return {
            "alpha_z": self.alpha_z,
            "beta_z": self.beta_z,
            "tau": self.tau,
            "basis_centers": self.basis_centers.tolist(),
            "basis_widths": self.basis_widths.tolist(),
            "dt": self.dt,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DmpConfig":
        """Inverse of ``to_dict``."""
        return cls(
            alpha_z=float(data["alpha_z"]),
            beta_z=float(data["beta_z"]),
            tau=float(data["tau"]),
            basis_centers=np.asarray(data["basis_centers"], dtype=float),
            basis_widths=np.asarray(data["basis_widths"], dtype=float),
            dt=float(data["dt"]),
        )


@dataclass(frozen=True)
class AxisDmp:
    """One axis of a skill: config plus an M x (K+1) weight matrix.

    Column 0 holds the minimum-jerk weight w_j0, columns 1..K the Gaussian
    weights w_jk. Row j is scaled by object feature phi_j.
    """

    config: DmpConfig
    weights: np.ndarray

    def __post_init__(self):
        weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "weights", weights)
        if weights.shape[0] < 1:
            raise ValueError("weights need at least one feature row")
        if weights.shape[1] != self.config.n_basis + 1:
            raise ValueError(
                f"weights have {weights.shape[1]} columns, expected K+1 = "
                f"{self.config.n_basis + 1}"
            )
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")

    @property
    def n_features(self) -> int:
        """Number of feature rows M."""
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class ObjectFeatures:
    """Object features phi; phi[0] is the bias and is always 1."""

    phi: np.ndarray = field(default_factory=lambda: np.array([1.0]))

    def __post_init__(self):
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "phi", phi)
        if phi.size < 1 or phi[0] != 1.0:
            raise ValueError("phi[0] must be exactly 1.0 (bias feature)")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi must be finite")

    @classmethod
    def material(cls, phi1: float) -> "ObjectFeatures":
        """Bias plus one material parameter (meters)."""
        return cls(np.array([1.0, float(phi1)]))


@dataclass(frozen=True)
class Trajectory:
    """Sampled multi-axis positions; derivatives are computed, not stored."""

    times: np.ndarray
    positions: np.ndarray
    axes: tuple[str, ...]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "axes", tuple(self.axes))

        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if positions.shape != (len(self.axes), times.size):
            raise ValueError(
                f"positions shape {positions.shape} does not match "
                f"{len(self.axes)} axes x {times.size} samples"
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)

    def axis(self, name: str) -> np.ndarray:
        """Positions of one axis."""
        return self.positions[self.axes.index(name)]

    @property
    def final(self) -> dict[str, float]:
        """Last sample of every axis."""
        return {a: float(self.positions[i, -1]) for i, a in enumerate(self.axes)}


def canonical_rollout(tau: float, dt: float, n_steps: int) -> np.ndarray:
    """
    Phase x(t) of the canonical system x' = -tau x, starting at 1.

    The per-step propagator exp(-tau dt) is the exact discrete solution.

    Args:
        tau: Time coefficient in 1/s
        dt: Step in seconds
        n_steps: Number of samples

    Returns:
        Phase samples, x[0] == 1
    """
    if tau <= 0 or dt <= 0:
        raise ValueError(f"tau and dt must be positive (tau={tau}, dt={dt})")
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    return np.exp(-tau * dt * np.arange(n_steps))


def minimum_jerk(s: np.ndarray) -> np.ndarray:
    """Minimum-jerk progress 10s^3 - 15s^4 + 6s^5 for s clamped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def basis_activations(x, config: DmpConfig) -> np.ndarray:
    """
    Evaluate [psi_0(x), psi_1(x) ... psi_K(x)].

    psi_k are unnormalized Gaussians in phase; psi_0 is the minimum-jerk
    profile of progress 1 - x, so it rises from 0 at x=1 to 1 as x -> 0.

    Args:
        x: Phase value or array in (0, 1]
        config: DMP configuration

    Returns:
        Array of shape (..., K+1)
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x > 1.0)):
        warnings.warn("canonical phase outside (0, 1] clamped", PhaseClampWarning)
        x = np.clip(x, np.finfo(float).tiny, 1.0)

    xe = x[..., np.newaxis]
    gaussians = np.exp(-config.basis_widths * (xe - config.basis_centers) ** 2)
    psi0 = minimum_jerk(1.0 - x)[..., np.newaxis]
    return np.concatenate([psi0, gaussians], axis=-1)


def _forcing_from_activations(
    x: np.ndarray, psi: np.ndarray, weights: np.ndarray, config: DmpConfig
) -> np.ndarray:
    """Eq. 2 evaluated for every weight row; returns shape (M, n)."""
    weights = np.atleast_2d(weights)
    gaussians = psi[..., 1:]
    total = gaussians.sum(axis=-1)
    safe = np.where(total < DEGENERATE_PHASE_MASS, 1.0, total)
    mixture = (gaussians @ weights[:, 1:].T) * (x / safe)[..., np.newaxis]
    mixture = np.where((total < DEGENERATE_PHASE_MASS)[..., np.newaxis], 0.0, mixture)
    minjerk = psi[..., :1] * weights[:, 0]
    return (config.alpha_z * config.beta_z * (mixture + minjerk)).T


def forcing(x, weights: np.ndarray, config: DmpConfig):
    """
    Forcing term f(x; w_j) for one weight row.

    Args:
        x: Phase value or array
        weights: One row [w_j0, w_j1 ... w_jK]
        config: DMP configuration

    Returns:
        alpha_z beta_z (sum_k psi_k w_jk x / sum_k psi_k + w_j0 psi_0), same
        shape as ``x``
    """
    row = np.asarray(weights, dtype=float)
    if row.ndim != 1 or row.size != config.n_basis + 1:
        raise ValueError(f"expected one weight row of length {config.n_basis + 1}")
    x_arr = np.asarray(x, dtype=float)
    psi = basis_activations(np.atleast_1d(x_arr), config)
    values = _forcing_from_activations(
        np.clip(np.atleast_1d(x_arr), np.finfo(float).tiny, 1.0), psi, row, config
    )[0]
    return float(values[0]) if x_arr.ndim == 0 else values.reshape(x_arr.shape)


def _n_samples(duration: float, dt: float) -> int:
    return int(round(duration / dt)) + 1


def step_coefficients(config: DmpConfig) -> tuple[float, float, float]:
    """
    Coefficients (A, B, C) of the central-difference step
    e[n+1] = A e[n] + B e[n-1] + C F[n], with e = y - y0.

    Stiffness is explicit and damping implicit, so the central stencils
    recover F exactly from sampled positions.
    """
    tau, dt = config.tau, config.dt
    k = config.alpha_z * tau * dt / 2.0
    a = (2.0 - dt**2 * tau**2 * config.alpha_z * config.beta_z) / (1.0 + k)
    b = -(1.0 - k) / (1.0 + k)
    c = dt**2 * tau**2 / (1.0 + k)
    return a, b, c


def rollout(
    dmp: AxisDmp,
    phi: ObjectFeatures,
    y0: float,
    duration: float,
    axis: str = "y",
) -> Trajectory:
    """
    Integrate one axis from rest at y0.

    Integrates y'' = tau^2 [alpha_z (beta_z (y0 - y) - y'/tau) + sum_j phi_j f(x; w_j)]
    with the canonical clock; the state converges to y0 + sum_j phi_j w_j0.

    Args:
        dmp: Axis primitive
        phi: Object features (length must match weight rows)
        y0: Start position (m)
        duration: Seconds to integrate
        axis: Label of the produced axis

    Returns:
        Single-axis Trajectory

    Raises:
        IntegrationInstabilityError: If the state leaves the sanity bound
    """
    config = dmp.config
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if phi.phi.size != dmp.n_features:
        raise ValueError(
            f"phi has {phi.phi.size} entries but the DMP has {dmp.n_features} feature rows"
        )

    n = _n_samples(duration, config.dt)
    x = canonical_rollout(config.tau, config.dt, n)
    psi = basis_activations(x, config)
    drive = phi.phi @ _forcing_from_activations(x, psi, dmp.weights, config)

    a, b, c = step_coefficients(config)
    offsets = np.zeros(n)
    if n > 1:
        # rest start: central velocity at n=0 is zero, so e[-1] == e[1]
        first = c * drive[0] / (1.0 - b)
        zi = lfiltic([c], [1.0, -a, -b], y=[0.0, first])
        tail, _ = lfilter([c], [1.0, -a, -b], drive[: n - 1], zi=zi)
        offsets[1:] = tail

    bound = get_settings().dmp_divergence_bound
    positions = y0 + offsets
    if not np.all(np.isfinite(positions)) or np.max(np.abs(positions)) > bound:
        raise IntegrationInstabilityError(
            f"rollout diverged (|y| > {bound} m) with dt={config.dt} and tau={config.tau}; "
            "reduce dt or tau"
        )
    return Trajectory(times=np.arange(n) * config.dt, positions=positions[np.newaxis], axes=(axis,))


def fixed_point(dmp: AxisDmp, phi: ObjectFeatures, y0: float) -> float:
    """Analytic end state y0 + sum_j phi_j w_j0."""
    return float(y0 + phi.phi @ dmp.weights[:, 0])


SkillDmps = Mapping[str, AxisDmp]
SkillFeatures = Mapping[str, ObjectFeatures]


def rollout_skill(
    dmps: SkillDmps,
    features: SkillFeatures,
    start: Mapping[str, float],
    duration: float,
    hold_axes: Sequence[str] = ("y",),
) -> Trajectory:
    """
    Roll out every adapted axis and hold the pass-through axes.

    Args:
        dmps: Axis label -> primitive (e.g. x, z)
        features: Axis label -> object features
        start: Axis label -> start position, including held axes
        duration: Seconds
        hold_axes: Axes passed through as a straight hold

    Returns:
        Multi-axis Trajectory with axes ordered x, y, z where present
    """
    order = [a for a in ("x", "y", "z") if a in dmps or a in hold_axes]
    order += sorted(a for a in dmps if a not in order)
    rows = []
    times = None
    for axis in order:
        if axis in dmps:
            traj = rollout(dmps[axis], features[axis], start[axis], duration, axis=axis)
            times = traj.times
            rows.append(traj.positions[0])
        else:
            rows.append(None)
    if times is None:
        raise ValueError("a skill needs at least one adapted axis")
    positions = [
        row if row is not None else np.full(times.size, float(start.get(axis, 0.0)))
        for axis, row in zip(order, rows)
    ]
    return Trajectory(times=times, positions=np.vstack(positions), axes=tuple(order))


def chain_segments(
    segments: Sequence[tuple[SkillDmps, SkillFeatures]],
    y_start: Mapping[str, float],
    duration: float,
    hold_axes: Sequence[str] = ("y",),
) -> list[Trajectory]:
    """Roll out each segment starting from the previous segment's final state."""
    if not segments:
        raise ValueError("chain needs at least one segment")
    axes = set(segments[0][0])
    pieces = []
    start = dict(y_start)
    for index, (dmps, features) in enumerate(segments):
        if set(dmps) != axes or set(features) != axes:
            raise ValueError(f"segment {index} axes {sorted(dmps)} differ from {sorted(axes)}")
        piece = rollout_skill(dmps, features, start, duration, hold_axes=hold_axes)
        pieces.append(piece)
        start.update(piece.final)
    return pieces


def chain(
    segments: Sequence[tuple[SkillDmps, SkillFeatures]],
    y_start: Mapping[str, float],
    duration: float,
    hold_axes: Sequence[str] = ("y",),
) -> Trajectory:
    """
    Chain DMP segments into one continuous trajectory.

    Each segment starts at rest at the previous final pose; the duplicated
    seam sample is dropped so times stay strictly increasing.

    Args:
        segments: Ordered (axis primitives, axis features) pairs
        y_start: Start pose for every axis
        duration: Seconds per segment
        hold_axes: Pass-through axes

    Returns:
        Concatenated Trajectory
    """
    pieces = chain_segments(segments, y_start, duration, hold_axes=hold_axes)
    times = [pieces[0].times]
    positions = [pieces[0].positions]
    offset = pieces[0].times[-1]
    for piece in pieces[1:]:
        times.append(piece.times[1:] + offset)
        positions.append(piece.positions[:, 1:])
        offset += piece.times[-1]
    return Trajectory(
        times=np.concatenate(times), positions=np.hstack(positions), axes=pieces[0].axes
    )
