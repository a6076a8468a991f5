"""Online Bayesian Changepoint Detection"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from src.config import get_settings

# median absolute deviation to standard deviation for Gaussian noise
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class BocdPrior:
    """Normal-Inverse-Gamma prior over an unknown mean and variance."""

    mu0: float = 0.0
    kappa0: float = 1.0
    alpha0: float = 1.0
    beta0: float = 1.0

    def __post_init__(self):
        if self.kappa0 <= 0 or self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError(
                f"kappa0, alpha0 and beta0 must be positive, got "
                f"{self.kappa0}, {self.alpha0}, {self.beta0}"
            )

    @classmethod
    def from_stream(
        cls, stream: Sequence[float], alpha0: float = 1.0, floor: float = 1e-6
    ) -> "BocdPrior":
        """
        Prior scaled to one observation stream.

        The noise variance comes from the median absolute successive
        difference, which ignores isolated level shifts. The mean is centered
        on the stream median, vague enough to cover the whole observed range,
        so a fresh run may start at any level while settled runs stay tight.

        Args:
            stream: Observations the detector will see
            alpha0: Inverse-gamma shape
            floor: Smallest admissible noise variance

        Returns:
            BocdPrior; the default prior for streams under two samples
        """
        values = np.asarray(stream, dtype=float)
        if values.size < 2 or not np.all(np.isfinite(values)):
            return cls()
        sigma = MAD_TO_SIGMA * np.median(np.abs(np.diff(values))) / np.sqrt(2.0)
        variance = max(float(sigma**2), floor)
        spread = float(np.ptp(values))
        kappa0 = min(1.0, variance / spread**2) if spread > 0 else 1.0
        return cls(mu0=float(np.median(values)), kappa0=kappa0, alpha0=alpha0, beta0=alpha0 * variance)


@dataclass
class BocdState:
    """
    Run-length posterior with per-run sufficient statistics.

    Entry i of every array describes the hypothesis that the current run
    holds the last ``run_lengths[i]`` observations.
    """

    hazard: float
    prior: BocdPrior = field(default_factory=BocdPrior)
    run_lengths: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=int))
    log_posterior: np.ndarray = field(default_factory=lambda: np.zeros(1))
    mu: Optional[np.ndarray] = None
    kappa: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    steps: int = 0

    def __post_init__(self):
        if not 0.0 < self.hazard < 1.0:
            raise ValueError(f"hazard must lie in (0, 1), got {self.hazard}")
        if self.mu is None:
            self.mu = np.array([self.prior.mu0])
            self.kappa = np.array([self.prior.kappa0])
            self.alpha = np.array([self.prior.alpha0])
            self.beta = np.array([self.prior.beta0])

    @classmethod
    def initial(cls, hazard: Optional[float] = None, prior: Optional[BocdPrior] = None) -> "BocdState":
        """Fresh state before any observation."""
        return cls(
            hazard=get_settings().bocd_hazard if hazard is None else hazard,
            prior=prior or BocdPrior(),
        )

    @property
    def posterior(self) -> np.ndarray:
        """Run-length probabilities aligned with ``run_lengths``."""
        return np.exp(self.log_posterior)

    @property
    def map_run_length(self) -> int:
        """Most probable run length."""
        return int(self.run_lengths[np.argmax(self.log_posterior)])


def _log_predictive(state: BocdState, obs: float) -> np.ndarray:
    """Student-t posterior predictive of every run hypothesis."""
    scale = np.sqrt(state.beta * (state.kappa + 1.0) / (state.alpha * state.kappa))
    return stats.t.logpdf(obs, df=2.0 * state.alpha, loc=state.mu, scale=scale)


def bocd_update(
    state: BocdState, obs: float, prune_mass: Optional[float] = None
) -> tuple[BocdState, int]:
    """
    Advance the run-length recursion by one observation.

    Args:
        state: Current state (not modified)
        obs: Scalar summary of one window
        prune_mass: Drop hypotheses whose probability falls below this

    Returns:
        Tuple of (new state, MAP run length)
    """
    if not np.isfinite(obs):
        raise ValueError(f"observation must be finite, got {obs}")
    prune_mass = get_settings().bocd_prune_mass if prune_mass is None else prune_mass
    prior = state.prior

    log_pred = _log_predictive(state, obs) + state.log_posterior
    growth = log_pred + np.log1p(-state.hazard)
    change = logsumexp(log_pred) + np.log(state.hazard)
    log_posterior = np.concatenate([[change], growth])
    log_posterior -= logsumexp(log_posterior)

    kappa_new = state.kappa + 1.0
    mu = np.concatenate([[prior.mu0], (state.kappa * state.mu + obs) / kappa_new])
    beta = np.concatenate(
        [[prior.beta0], state.beta + state.kappa * (obs - state.mu) ** 2 / (2.0 * kappa_new)]
    )
    kappa = np.concatenate([[prior.kappa0], kappa_new])
    alpha = np.concatenate([[prior.alpha0], state.alpha + 0.5])
    run_lengths = np.concatenate([[0], state.run_lengths + 1])

    keep = log_posterior >= np.log(prune_mass)
    keep[0] = True
    keep[np.argmax(log_posterior)] = True
    log_posterior = log_posterior[keep]
    log_posterior -= logsumexp(log_posterior)

    new_state = BocdState(
        hazard=state.hazard,
        prior=prior,
        run_lengths=run_lengths[keep],
        log_posterior=log_posterior,
        mu=mu[keep],
        kappa=kappa[keep],
        alpha=alpha[keep],
        beta=beta[keep],
        steps=state.steps + 1,
    )
    return new_state, new_state.map_run_length


def detect_reset(previous_map: Optional[int], current_map: int) -> bool:
    """A changepoint is declared when the MAP run length drops."""
    return previous_map is not None and current_map < previous_map


def run_bocd(
    stream: Iterable[float],
    hazard: Optional[float] = None,
    prior: Optional[BocdPrior] = None,
    prune_mass: Optional[float] = None,
) -> tuple[np.ndarray, list[int]]:
    """
    Run the detector over a whole stream.

    Returns:
        Tuple of (MAP run length per step, estimated changepoint indices).
        A reset at step t with MAP run length r places the new run's first
        observation at index t - r + 1.
    """
    state = BocdState.initial(hazard, prior)
    maps = []
    changepoints = []
    previous = None
    for t, obs in enumerate(stream):
        state, current = bocd_update(state, float(obs), prune_mass)
        if detect_reset(previous, current):
            changepoints.append(t - current + 1)
        maps.append(current)
        previous = current
    return np.asarray(maps, dtype=int), changepoints
