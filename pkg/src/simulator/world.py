"""Kinematic Knife-versus-Food World"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from src.config import get_settings
from src.events import (
    EVENTS,
    HITTING_BOARD,
    HITTING_OBJECT,
    IN_AIR,
    SCRAPING_BOARD,
    SCRAPING_OBJECT,
    SLICING_OBJECT,
)
from src.simulator.materials import MaterialSpec

BOARD = "board"
OBJECT = "object"

CONTACT_BAND = 1e-4
MOTION_EPS = 1e-3
KERF_LOCK = 2e-3
BLADE_GAP = 1e-3

# cutting model
PRESS_RATE = 0.05
SAW_GAIN = 1.0
SKIN_TRAVEL = 0.02

# contact forces (N)
PRESS_BASE = 10.0
PRESS_HARDNESS = 10.0
PRESS_SPEED = 200.0
IMPACT_FORCE_GAIN = 400.0
REST_FORCE = 2.0
CUT_BASE = 4.0
CUT_HARDNESS = 15.0
CUT_SPEED = 100.0
BOARD_FRICTION = 0.3
BOARD_HARDNESS = 1.0
LEVER_ARM = 0.05


@dataclass(frozen=True)
class StepRecord:
    """What happened during one physics step."""

    event: str
    location: Optional[str] = None
    impact_speed: float = 0.0
    saw_speed: float = 0.0
    pressing: bool = False
    cutting: bool = False
    slipping: bool = False
    force: np.ndarray = field(default_factory=lambda: np.zeros(6))
    x: float = 0.0
    z: float = 0.0

    @property
    def impact(self) -> bool:
        return self.impact_speed > 0.0


@dataclass(frozen=True)
class WorldState:
    """
    Knife pose, food geometry and cut progress.

    The food occupies ``[food_left, food_right] x [board_z, board_z + height]``.
    Once the blade rests on the food top its cut site is locked: lateral
    knife motion then saws along the blade instead of moving the contact
    point. ``kerf_x`` marks a cut in progress; ``cut_total`` only grows.
    The random generator is shared by successive states of one world.
    """

    material: MaterialSpec
    knife_x: float
    knife_z: float
    rng: np.random.Generator
    seed: int = 0
    vel_x: float = 0.0
    vel_z: float = 0.0
    food_left: float = 0.0
    food_right: float = 0.0
    board_z: float = 0.0
    site_x: Optional[float] = None
    kerf_x: Optional[float] = None
    kerf_depth: float = 0.0
    kerf_complete: bool = False
    skin_progress: float = 0.0
    slipping: bool = False
    contact_at: Optional[str] = None
    event: str = IN_AIR
    engagement: float = 1.0
    cut_total: float = 0.0
    slices_cut: int = 0
    time: float = 0.0

    @property
    def top(self) -> float:
        return self.board_z + self.material.height

    @property
    def in_kerf(self) -> bool:
        return self.kerf_x is not None and self.knife_z < self.top - CONTACT_BAND

    @property
    def food_width(self) -> float:
        return max(self.food_right - self.food_left, 0.0)

    def over_food(self, x: float) -> bool:
        return self.food_left < x < self.food_right


def physics_dt() -> float:
    """Seconds per physics step: one force sample."""
    settings = get_settings()
    return settings.window_seconds / settings.force_samples


def new_world(
    material: MaterialSpec,
    seed: int = 0,
    knife_x: Optional[float] = None,
    knife_z: Optional[float] = None,
) -> WorldState:
    """
    Fresh world with the item at the origin and the knife parked above the board.

    Args:
        material: Food item on the board
        seed: Seed for slips and sensor noise
        knife_x: Initial knife X (default 6 cm right of the item)
        knife_z: Initial knife Z (default 5 cm above the item)
    """
    return WorldState(
        material=material,
        knife_x=material.width + 0.06 if knife_x is None else knife_x,
        knife_z=material.height + 0.05 if knife_z is None else knife_z,
        rng=np.random.default_rng(seed),
        seed=seed,
        food_right=material.width,
    )


def cut_rate(material: MaterialSpec, saw_speed: float, engagement: float = 1.0) -> float:
    """Fastest descent (m/s) the blade achieves through the flesh."""
    return (1.0 - material.hardness) * (PRESS_RATE + SAW_GAIN * saw_speed) * engagement


def skin_travel_needed(material: MaterialSpec) -> float:
    """Sawing travel (m) under pressure before the skin gives way."""
    if not material.cuttable:
        return float("inf")
    return SKIN_TRAVEL * material.skin_toughness / (1.0 - material.hardness)


def slip_probability(material: MaterialSpec, engagement: float = 1.0) -> float:
    """Chance per 0.1 s window of skidding while working through the skin."""
    return min(1.0, material.slip_propensity * material.skin_slope / engagement**2)


def press_force(hardness: float, speed_into: float) -> float:
    return PRESS_BASE + PRESS_HARDNESS * hardness + PRESS_SPEED * max(speed_into, 0.0)


def _wrench(fx: float, fz: float) -> np.ndarray:
    return np.array([fx, 0.0, fz, LEVER_ARM * fz, LEVER_ARM * fx, 0.2 * LEVER_ARM * fx])


def _friction(coefficient: float, normal: float, vx: float) -> float:
    if abs(vx) <= MOTION_EPS:
        return 0.0
    return -np.sign(vx) * coefficient * normal


def _board_step(s: WorldState, vx: float, vz: float) -> tuple[float, StepRecord]:
    z = s.board_z
    impact = abs(vz) if s.contact_at != BOARD else 0.0
    pressing = vz < 0
    fz = press_force(BOARD_HARDNESS, -vz) if pressing else REST_FORCE
    fz += IMPACT_FORCE_GAIN * BOARD_HARDNESS * impact
    saw = abs(vx)
    if impact:
        event = HITTING_BOARD
    else:
        event = SCRAPING_BOARD if saw > MOTION_EPS else HITTING_BOARD
    record = StepRecord(
        event=event,
        location=BOARD,
        impact_speed=impact,
        saw_speed=saw,
        pressing=pressing,
        force=_wrench(_friction(BOARD_FRICTION, fz, vx), fz),
    )
    return z, record


def step_world(
    state: WorldState, command: Sequence[float], dt: float
) -> tuple[WorldState, StepRecord]:
    """
    Advance the world by one physics step under a knife velocity command.

    The knife moves kinematically; the board and the item block it, and the
    item yields to the blade at a hardness-dependent rate once its skin is
    broken. Slips are drawn from the world's generator.

    Args:
        state: Current world
        command: Knife velocity (x_dot, z_dot) in m/s
        dt: Step length in seconds

    Returns:
        Tuple of (next state, step record carrying the ground-truth event)
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    vx, vz = float(command[0]), float(command[1])
    s = state
    m = s.material
    top = s.top
    x, z = s.knife_x, s.knife_z
    nx, nz = x + vx * dt, z + vz * dt
    updates: dict = {}
    record: Optional[StepRecord] = None

    if s.in_kerf:
        new_x = nx
        if nz >= top:
            new_z = nz
            updates.update(site_x=None, slipping=False)
            if s.kerf_complete:
                updates.update(kerf_x=None, kerf_depth=0.0, kerf_complete=False)
            record = StepRecord(event=IN_AIR)
        elif s.kerf_complete:
            if nz <= s.board_z + CONTACT_BAND:
                new_z, record = _board_step(s, vx, vz)
            else:
                new_z = nz
                record = StepRecord(event=IN_AIR)
        else:
            new_z, record, updates = _kerf_step(s, z, nz, vx, vz, dt)
    elif s.site_x is not None:
        new_x = nx
        if nz > top + CONTACT_BAND:
            new_z = nz
            updates.update(site_x=None, slipping=False)
            record = StepRecord(event=IN_AIR)
        else:
            new_z, record, updates = _top_step(s, nz, vx, vz, dt)
    else:
        new_x, new_z = nx, nz
        entering = s.over_food(nx) and not s.over_food(x)
        if s.over_food(nx) and vz <= 0 and z >= top - CONTACT_BAND and nz <= top + CONTACT_BAND:
            new_z = top
            updates["site_x"] = nx
            speed = abs(vz) if s.contact_at != OBJECT else 0.0
            pressing = vz < 0
            fz = press_force(m.hardness, -vz) if pressing else REST_FORCE + 3.0 * m.hardness
            fz += IMPACT_FORCE_GAIN * m.hardness * speed
            if speed:
                event = HITTING_OBJECT
            else:
                event = SCRAPING_OBJECT if abs(vx) > MOTION_EPS else HITTING_OBJECT
            record = StepRecord(
                event=event,
                location=OBJECT,
                impact_speed=speed,
                saw_speed=abs(vx),
                pressing=pressing,
                force=_wrench(_friction(m.friction, fz, vx), fz),
            )
        elif entering and nz < top:
            new_x = s.food_right if x >= s.food_right else s.food_left
            new_z = max(nz, s.board_z)
            speed = abs(vx) if s.contact_at != OBJECT else 0.0
            fx = press_force(m.hardness, abs(vx)) + IMPACT_FORCE_GAIN * m.hardness * speed
            record = StepRecord(
                event=HITTING_OBJECT,
                location=OBJECT,
                impact_speed=speed,
                pressing=True,
                force=_wrench(-np.sign(vx) * fx, 0.0),
            )
        elif nz <= s.board_z + CONTACT_BAND and not s.over_food(nx):
            new_z, record = _board_step(s, vx, vz)
        else:
            record = StepRecord(event=IN_AIR)

    record = replace(record, x=new_x, z=new_z)
    next_state = replace(
        s,
        knife_x=new_x,
        knife_z=new_z,
        vel_x=(new_x - x) / dt,
        vel_z=(new_z - z) / dt,
        contact_at=record.location,
        event=record.event,
        time=s.time + dt,
        **updates,
    )
    return next_state, record


def _kerf_step(s: WorldState, z: float, nz: float, vx: float, vz: float, dt: float):
    """Blade inside an unfinished cut."""
    m = s.material
    top = s.top
    bottom = top - s.kerf_depth
    updates: dict = {}
    saw = abs(vx)
    if nz >= min(z, bottom):
        new_z = nz
        fz = REST_FORCE * m.hardness
        cutting = False
    else:
        rate = cut_rate(m, saw, s.engagement)
        new_z = max(nz, min(z, bottom) - rate * dt)
        cutting = new_z < bottom
        speed = (z - new_z) / dt
        fz = CUT_BASE + CUT_HARDNESS * m.hardness + CUT_SPEED * max(speed, 0.0)

    if new_z <= s.board_z + CONTACT_BAND:
        new_z = s.board_z
        depth = m.height
        updates.update(
            kerf_depth=depth,
            kerf_complete=True,
            food_right=s.kerf_x - BLADE_GAP,
            slices_cut=s.slices_cut + 1,
            cut_total=s.cut_total + (depth - s.kerf_depth),
            site_x=None,
            skin_progress=0.0,
        )
        impact = max((z - new_z) / dt, 0.0)
        fz = press_force(BOARD_HARDNESS, -vz) + IMPACT_FORCE_GAIN * BOARD_HARDNESS * impact
        record = StepRecord(
            event=HITTING_BOARD,
            location=BOARD,
            impact_speed=impact,
            saw_speed=saw,
            pressing=vz < 0,
            force=_wrench(_friction(BOARD_FRICTION, fz, vx), fz),
        )
        return new_z, record, updates

    if cutting:
        depth = top - new_z
        updates.update(kerf_depth=depth, cut_total=s.cut_total + (depth - s.kerf_depth))
    record = StepRecord(
        event=SLICING_OBJECT,
        location=OBJECT,
        saw_speed=saw,
        pressing=vz < 0,
        cutting=cutting,
        force=_wrench(_friction(m.friction, fz, vx), fz),
    )
    return new_z, record, updates


def _top_step(s: WorldState, nz: float, vx: float, vz: float, dt: float):
    """Blade resting or pressing on the food top at its locked site."""
    m = s.material
    top = s.top
    updates: dict = {}
    saw = abs(vx)
    pressing = vz < 0
    slipping = s.slipping
    new_z = top

    if pressing and s.kerf_x is not None and abs(s.site_x - s.kerf_x) <= KERF_LOCK:
        new_z, record, updates = _kerf_step(s, top, nz, vx, vz, dt)
        if record.location == OBJECT:
            updates["site_x"] = s.kerf_x
        return new_z, record, updates
    if pressing and saw > MOTION_EPS and not slipping:
        progress = s.skin_progress + saw * dt
        updates["skin_progress"] = progress
        window = dt / 0.1
        p_slip = 1.0 - (1.0 - slip_probability(m, s.engagement)) ** window
        if p_slip > 0 and s.rng.random() < p_slip:
            slipping = True
            updates["slipping"] = True
        elif progress >= skin_travel_needed(m):
            rate = cut_rate(m, saw, s.engagement)
            new_z = max(nz, top - rate * dt)
            depth = top - new_z
            updates.update(
                kerf_x=s.site_x,
                kerf_depth=depth,
                kerf_complete=False,
                cut_total=s.cut_total + depth,
            )

    if pressing:
        fz = press_force(m.hardness, -vz)
    else:
        fz = REST_FORCE + 3.0 * m.hardness
    if slipping:
        event = SCRAPING_OBJECT
    elif new_z < top or (pressing and saw > MOTION_EPS):
        event = SLICING_OBJECT
    elif saw > MOTION_EPS:
        event = SCRAPING_OBJECT
    else:
        event = HITTING_OBJECT
    record = StepRecord(
        event=event,
        location=OBJECT,
        saw_speed=saw,
        pressing=pressing,
        cutting=new_z < top,
        slipping=slipping,
        force=_wrench(_friction(m.friction, fz, vx), fz),
    )
    return new_z, record, updates


def window_event(records: Sequence[StepRecord]) -> str:
    """
    Ground-truth label of one window of steps.

    The first impact wins; otherwise the most frequent contact event, ties
    broken by the canonical event order; windows without contact are in air.
    """
    for record in records:
        if record.impact:
            return record.event
    contact = [r.event for r in records if r.location is not None]
    if not contact:
        return IN_AIR
    counts = {event: contact.count(event) for event in EVENTS}
    return max(EVENTS, key=lambda event: (counts[event], -EVENTS.index(event)))


def check_consistency(previous: WorldState, state: WorldState, record: StepRecord) -> list[str]:
    """
    Geometry violations of one step; an empty list means consistent.

    Board events need the blade at board height, object events need it on
    or inside the item, in-air steps carry no contact force, and cut
    progress never decreases.
    """
    problems = []
    band = CONTACT_BAND + 1e-12
    if record.event not in EVENTS:
        problems.append(f"unknown event {record.event!r}")
    if record.event in (HITTING_BOARD, SCRAPING_BOARD) and state.knife_z > state.board_z + band:
        problems.append(f"{record.event} with knife at z={state.knife_z:.6f}")
    if record.event == IN_AIR and np.any(record.force != 0):
        problems.append("in-air step with contact force")
    if record.location == OBJECT and state.knife_z > state.top + band:
        problems.append(f"object contact above the item top at z={state.knife_z:.6f}")
    if state.knife_z < state.board_z - band:
        problems.append(f"knife below the board at z={state.knife_z:.6f}")
    if state.cut_total < previous.cut_total:
        problems.append("cut progress decreased")
    if state.kerf_depth > state.material.height + band:
        problems.append("kerf deeper than the item")
    return problems
