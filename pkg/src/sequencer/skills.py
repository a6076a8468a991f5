"""Cutting Skills and Their Termination Conditions"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.config import get_settings
from src.events import (
    AXIS_INDEX,
    DONE,
    HITTING_BOARD,
    HITTING_OBJECT,
    MOVE_DOWN_ON_BOARD,
    MOVE_DOWN_ONTO_OBJECT,
    MOVE_LEFT_TO_HIT_OBJECT,
    MOVE_UP_AND_OVER,
    SCRAPING_BOARD,
    SCRAPING_OBJECT,
    SLICING_ACTION,
)

CONTINUE = "continue"
TERMINATE = "terminate"
FAILURE = "failure"

SLIP = "slip"
PREMATURE_BOARD_HIT = "premature_board_hit"

BOARD_EVENTS = (HITTING_BOARD, SCRAPING_BOARD)


class UnknownSkillError(KeyError):
    """Skill id is not part of the cutting state machine."""


@dataclass(frozen=True)
class SkillState:
    """
    One state of the cutting state machine.

    ``failures`` maps each failure kind the skill can raise to the skill
    the machine recovers through; ``final_successor`` is taken instead of
    ``successor`` once the requested slices are done.
    """

    id: str
    termination: str
    successor: str
    failures: dict[str, str] = field(default_factory=dict)
    force_axis: Optional[str] = None
    final_successor: Optional[str] = None


SKILL_TABLE: dict[str, SkillState] = {
    MOVE_DOWN_ON_BOARD: SkillState(
        MOVE_DOWN_ON_BOARD, "contact on Z axis", MOVE_LEFT_TO_HIT_OBJECT, force_axis="z"
    ),
    MOVE_LEFT_TO_HIT_OBJECT: SkillState(
        MOVE_LEFT_TO_HIT_OBJECT, "contact on X axis", MOVE_UP_AND_OVER, force_axis="x"
    ),
    MOVE_UP_AND_OVER: SkillState(MOVE_UP_AND_OVER, "motion complete", MOVE_DOWN_ONTO_OBJECT),
    MOVE_DOWN_ONTO_OBJECT: SkillState(
        MOVE_DOWN_ONTO_OBJECT,
        "hitting event monitoring",
        SLICING_ACTION,
        failures={PREMATURE_BOARD_HIT: MOVE_UP_AND_OVER},
    ),
    SLICING_ACTION: SkillState(
        SLICING_ACTION,
        "slicing event monitoring",
        MOVE_UP_AND_OVER,
        failures={SLIP: MOVE_UP_AND_OVER},
        final_successor=DONE,
    ),
    DONE: SkillState(DONE, "terminal", DONE),
}


@dataclass(frozen=True)
class Termination:
    """Outcome of checking one window against the active skill."""

    status: str = CONTINUE
    failure: Optional[str] = None

    @property
    def terminated(self) -> bool:
        return self.status == TERMINATE

    @property
    def failed(self) -> bool:
        return self.status == FAILURE


def get_skill(skill_id: str) -> SkillState:
    """Look up a skill state by id."""
    try:
        return SKILL_TABLE[skill_id]
    except KeyError:
        raise UnknownSkillError(f"unknown skill {skill_id!r}; choose from {sorted(SKILL_TABLE)}")


def contact_force(forces: np.ndarray, axis: str) -> float:
    """Largest absolute force on one axis over a window's buffer."""
    return float(np.max(np.abs(np.asarray(forces)[:, AXIS_INDEX[axis]])))


def termination_check(
    skill: str,
    decision,
    forces: np.ndarray,
    motion_done: bool = False,
    threshold: Optional[float] = None,
) -> Termination:
    """
    Decide whether the active skill continues, ends or failed.

    Localization skills end on a directional force threshold; the approach
    and slicing skills end on the monitor's smoothed decision, never on a
    single window.

    Args:
        skill: Active skill id
        decision: MonitorDecision for this window (None when unmonitored)
        forces: (force_samples, 6) buffer of the window
        motion_done: Whether a position-controlled motion reached its target
        threshold: Contact force threshold in N (default from settings)

    Returns:
        Termination

    Raises:
        UnknownSkillError: Skill id not in the state machine
    """
    state = get_skill(skill)
    if state.id == DONE:
        return Termination(TERMINATE)
    if state.force_axis is not None:
        threshold = get_settings().contact_force_threshold if threshold is None else threshold
        if contact_force(forces, state.force_axis) > threshold:
            return Termination(TERMINATE)
        return Termination()
    if state.id == MOVE_UP_AND_OVER:
        return Termination(TERMINATE) if motion_done else Termination()

    smoothed = getattr(decision, "smoothed", None)
    if state.id == MOVE_DOWN_ONTO_OBJECT:
        if smoothed == HITTING_OBJECT:
            return Termination(TERMINATE)
        if smoothed in BOARD_EVENTS:
            return Termination(FAILURE, PREMATURE_BOARD_HIT)
    elif state.id == SLICING_ACTION:
        if smoothed in BOARD_EVENTS:
            return Termination(TERMINATE)
        if smoothed == SCRAPING_OBJECT:
            return Termination(FAILURE, SLIP)
    return Termination()


def reachable_skills(start: str = MOVE_DOWN_ON_BOARD) -> set[str]:
    """Skills reachable from ``start`` through successors and recoveries."""
    seen = set()
    frontier = [start]
    while frontier:
        skill = get_skill(frontier.pop())
        if skill.id in seen:
            continue
        seen.add(skill.id)
        frontier.append(skill.successor)
        frontier.extend(skill.failures.values())
        if skill.final_successor:
            frontier.append(skill.final_successor)
    return seen
