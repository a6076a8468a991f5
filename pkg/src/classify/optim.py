"""Adam Optimizer"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from src.config import get_settings


@dataclass(frozen=True)
class AdamState:
    """Moment accumulators and hyperparameters of one optimization run."""

    lr: float
    beta1: float
    beta2: float
    epsilon: float
    step: int = 0
    m: tuple[np.ndarray, ...] = field(default=())
    v: tuple[np.ndarray, ...] = field(default=())

    @classmethod
    def for_params(
        cls,
        params: Sequence[np.ndarray],
        lr: Optional[float] = None,
        beta1: Optional[float] = None,
        beta2: Optional[float] = None,
        epsilon: Optional[float] = None,
    ) -> "AdamState":
        """Zero moments shaped like ``params``; hyperparameters default from settings."""
        settings = get_settings()
        return cls(
            lr=settings.learning_rate if lr is None else lr,
            beta1=settings.adam_beta1 if beta1 is None else beta1,
            beta2=settings.adam_beta2 if beta2 is None else beta2,
            epsilon=settings.adam_epsilon if epsilon is None else epsilon,
            m=tuple(np.zeros_like(p, dtype=float) for p in params),
            v=tuple(np.zeros_like(p, dtype=float) for p in params),
        )


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """
    One bias-corrected Adam update.

    Args:
        params: Current parameters
        grads: Gradients aligned with ``params``
        state: Optimizer state (not modified)

    Returns:
        Tuple of (new parameters, new state)
    """
    if not (len(params) == len(grads) == len(state.m)):
        raise ValueError(f"{len(params)} params, {len(grads)} grads, {len(state.m)} moments")
    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if np.shape(p) != np.shape(g) or np.shape(p) != np.shape(m):
            raise ValueError(f"shape mismatch: param {np.shape(p)} vs grad {np.shape(g)}")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        new_params.append(p - update)
        new_m.append(m)
        new_v.append(v)
    return new_params, replace(state, step=step, m=tuple(new_m), v=tuple(new_v))
