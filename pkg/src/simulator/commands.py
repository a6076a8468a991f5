"""Knife Velocity Command Sources"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Protocol

import numpy as np

from src.dmp import build_slicing_skill
from src.simulator.world import WorldState, physics_dt

Command = tuple[float, float]


class CommandSource(Protocol):
    """Produces one velocity command per physics step."""

    def __call__(self, state: WorldState) -> Command: ...


@dataclass
class ConstantVelocity:
    vx: float = 0.0
    vz: float = 0.0

    def __call__(self, state: WorldState) -> Command:
        return self.vx, self.vz


@dataclass
class VelocityPlayback:
    """Replays a velocity profile, then holds still."""

    velocities: np.ndarray
    index: int = 0

    @property
    def done(self) -> bool:
        return self.index >= len(self.velocities)

    def __call__(self, state: WorldState) -> Command:
        if self.done:
            return 0.0, 0.0
        vx, vz = self.velocities[self.index]
        self.index += 1
        return float(vx), float(vz)


@dataclass
class MoveTo:
    """
    Straight-line moves: first vertically to ``z``, then horizontally to ``x``.

    Either target may be None to leave that axis alone.
    """

    x: Optional[float] = None
    z: Optional[float] = None
    speed: float = 0.05
    tolerance: float = 1e-5

    def remaining(self, state: WorldState) -> tuple[float, float]:
        dx = 0.0 if self.x is None else self.x - state.knife_x
        dz = 0.0 if self.z is None else self.z - state.knife_z
        return dx, dz

    def done(self, state: WorldState) -> bool:
        dx, dz = self.remaining(state)
        return abs(dx) <= self.tolerance and abs(dz) <= self.tolerance

    def __call__(self, state: WorldState) -> Command:
        dx, dz = self.remaining(state)
        limit = self.speed * physics_dt()
        if abs(dz) > self.tolerance:
            return 0.0, float(np.clip(dz, -limit, limit)) / physics_dt()
        if abs(dx) > self.tolerance:
            return float(np.clip(dx, -limit, limit)) / physics_dt(), 0.0
        return 0.0, 0.0


@dataclass
class DepthGuard:
    """Wraps a source and stops descending below ``floor``."""

    source: CommandSource
    floor: float

    def __call__(self, state: WorldState) -> Command:
        vx, vz = self.source(state)
        if vz < 0 and state.knife_z + vz * physics_dt() < self.floor:
            vz = 0.0
        return vx, vz


@lru_cache(maxsize=128)
def _slicing_velocities(phi_x: float, phi_z: float, dt: float) -> np.ndarray:
    skill = build_slicing_skill()
    trajectory = skill.trajectory({"x": 0.0, "y": 0.0, "z": 0.0}, phi_x, phi_z)
    grid = np.arange(int(round(skill.duration / dt)) + 1) * dt
    x = np.interp(grid, trajectory.times, trajectory.axis("x"))
    z = np.interp(grid, trajectory.times, trajectory.axis("z"))
    velocities = np.column_stack([np.diff(x), np.diff(z)]) / dt
    velocities.setflags(write=False)
    return velocities


def slicing_velocities(phi_x: float, phi_z: float, dt: Optional[float] = None) -> np.ndarray:
    """
    Per-step knife velocities of one slicing action.

    The slicing primitive is rolled out with object features (phi_x, phi_z)
    and differentiated on the physics step grid, so successive actions
    chain from wherever the knife actually is.
    """
    dt = physics_dt() if dt is None else dt
    return _slicing_velocities(round(float(phi_x), 9), round(float(phi_z), 9), dt)


def slicing_playback(phi_x: float, phi_z: float) -> VelocityPlayback:
    return VelocityPlayback(slicing_velocities(phi_x, phi_z))
