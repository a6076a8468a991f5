"""Closed-Loop Cutting Episodes"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from src.classify import predict_slice_params
from src.config import get_settings
from src.events import (
    HITTING_OBJECT,
    MOVE_DOWN_ON_BOARD,
    MOVE_DOWN_ONTO_OBJECT,
    MOVE_LEFT_TO_HIT_OBJECT,
    MOVE_UP_AND_OVER,
    SLICING_ACTION,
)
from src.sequencer.adaptation import (
    CuttingModels,
    ParamTable,
    SlicingPolicy,
    adapt_params,
    is_uncuttable,
    vote_material,
)
from src.sequencer.monitor import (
    MONITOR_SOURCES,
    ClassifierEvents,
    EventMonitor,
    MonitorDecision,
    OracleEvents,
    model_mask,
)
from src.sequencer.skills import (
    CONTINUE,
    PREMATURE_BOARD_HIT,
    SLIP,
    Termination,
    termination_check,
)
from src.signals import SensorWindow, featurize_windows
from src.simulator import (
    DEFAULT_MATERIALS,
    CommandSource,
    ConstantVelocity,
    EpisodeLog,
    MaterialSpec,
    MoveTo,
    VelocityPlayback,
    WorldState,
    advance_window,
    new_world,
    slicing_playback,
)
from src.tracking import log_action

OUTCOMES = ("completed", "uncuttable", "aborted", "budget_exhausted")


class StepBudgetExhausted(RuntimeError):
    """The episode used every window it was allowed."""


@dataclass
class ActionChain:
    """Chains slicing actions back to back, counting each one started."""

    phi_x: float
    phi_z: float
    actions: int = 0
    current: Optional[VelocityPlayback] = None

    @property
    def between_actions(self) -> bool:
        return self.current is None or self.current.done

    def __call__(self, state: WorldState):
        if self.between_actions:
            self.current = slicing_playback(self.phi_x, self.phi_z)
            self.actions += 1
        return self.current(state)


class CuttingEpisode:
    """
    Runs the cutting state machine against a simulated world.

    Localizes the board and the item by force, then for each slice moves
    over the next cut position, descends until the monitor reports the item,
    and chains slicing actions until the knife reaches the board. Slips are
    recovered by re-descending with more engagement; a board hit on the way
    down aborts the attempt and shifts the cut position. Every attempt
    counts against one retry limit per slice.
    """

    def __init__(
        self,
        world: WorldState,
        policy: SlicingPolicy,
        slices: int,
        models: Optional[CuttingModels] = None,
        monitor: str = "oracle",
        step_budget: Optional[int] = None,
    ):
        if slices < 0:
            raise ValueError(f"slices must be non-negative, got {slices}")
        if monitor not in MONITOR_SOURCES:
            raise ValueError(f"monitor must be one of {MONITOR_SOURCES}, got {monitor!r}")
        self.settings = get_settings()
        self.models = models or CuttingModels()
        self.models.require(policy, monitor)
        if policy.mode == "adaptive-lookup" and policy.table is None:
            table = ParamTable.from_materials((*DEFAULT_MATERIALS, world.material))
            policy = replace(policy, table=table)

        self.state = world
        self.policy = policy
        self.slices = slices
        self.oracle = monitor == "oracle"
        if self.oracle:
            self.events = OracleEvents()
        else:
            self.events = ClassifierEvents(self.models.slicenet, self.models.hitting, self.models.slicing)
        self.monitor = EventMonitor()
        self.step_budget = step_budget or self.settings.step_budget
        self.log = EpisodeLog(
            material=world.material.name,
            seed=world.seed,
            policy=policy.mode,
            slices_requested=slices,
        )
        self.params: Optional[tuple[float, float]] = None if policy.adaptive else policy.fixed_params
        self.board_z: Optional[float] = None
        self.top_z: Optional[float] = None
        self.next_x: Optional[float] = None
        self.contact_windows: list[SensorWindow] = []

    # -- windows and skills -------------------------------------------------

    def _window(
        self, source: CommandSource, skill: str, monitored: bool
    ) -> tuple[SensorWindow, str, Optional[MonitorDecision]]:
        if len(self.log.windows) >= self.step_budget:
            raise StepBudgetExhausted(f"step budget of {self.step_budget} windows exhausted")
        self.state, window, event, _ = advance_window(self.state, source)
        decision = None
        if monitored:
            decision = self.monitor.update(self.events.posterior(window, event, skill))
        self.log.record(window, event, skill, self.state.time, decision.label if decision else None)
        return window, event, decision

    def _run(
        self,
        skill: str,
        source: CommandSource,
        motion: Optional[MoveTo] = None,
        give_up: Optional[Callable[[], bool]] = None,
    ) -> Optional[Termination]:
        """Run one skill until it terminates or fails; None when ``give_up`` fires first."""
        self.monitor.reset()
        monitored = skill in (MOVE_DOWN_ONTO_OBJECT, SLICING_ACTION)
        while True:
            if give_up is not None and give_up():
                return None
            window, event, decision = self._window(source, skill, monitored)
            if skill == MOVE_DOWN_ONTO_OBJECT and decision is not None and decision.label == HITTING_OBJECT:
                self.contact_windows.append(window)
            done = motion.done(self.state) if motion is not None else False
            result = termination_check(
                skill,
                decision,
                window.forces,
                motion_done=done,
                threshold=self.settings.contact_force_threshold,
            )
            if result.status != CONTINUE:
                return result

    def _localize(self) -> None:
        speed = self.settings.approach_speed
        self._run(MOVE_DOWN_ON_BOARD, ConstantVelocity(0.0, -speed))
        self.board_z = self.state.knife_z

        lift = MoveTo(z=self.state.knife_z + self.settings.lift_height, speed=speed)
        push = ConstantVelocity(-speed, 0.0)
        self._run(MOVE_LEFT_TO_HIT_OBJECT, lambda state: lift(state) if not lift.done(state) else push(state))
        self.next_x = self.state.knife_x - self.settings.slice_thickness

    def _move_over(self, x: float) -> None:
        if self.top_z is None:
            z = self.board_z + self.settings.approach_clearance
        else:
            z = self.top_z + self.settings.hover_height
        mover = MoveTo(x=x, z=z, speed=self.settings.approach_speed)
        self._run(MOVE_UP_AND_OVER, mover, motion=mover)

    def _descend(self) -> Termination:
        self.contact_windows = []
        return self._run(MOVE_DOWN_ONTO_OBJECT, ConstantVelocity(0.0, -self.settings.approach_speed))

    # -- adaptation -----------------------------------------------------------

    def _identify(self) -> tuple[float, float]:
        """Slicing parameters from the first descent onto the item."""
        material = self.state.material
        if self.oracle:
            self.log.material_prediction = material.name
            if self.policy.mode == "adaptive-lookup":
                return adapt_params(self.policy, label=material.name)
            return adapt_params(self.policy, regressed=np.asarray(material.true_params))

        if self.policy.mode == "adaptive-lookup":
            model = self.models.foodnet
            features = featurize_windows(self.contact_windows, model_mask(model), jobs=1)
            label = vote_material(list(model.predict(features)))
            self.log.material_prediction = label
            return adapt_params(self.policy, label=label)
        model = self.models.regress
        features = featurize_windows(self.contact_windows, model_mask(model), jobs=1)
        return adapt_params(self.policy, regressed=predict_slice_params(model, features))

    # -- slices ---------------------------------------------------------------

    def _retry(self, kind: str, index: int, retries: int) -> bool:
        """Record a failure; False once the retry limit is exceeded."""
        allowed = retries <= self.settings.max_retries
        self.log.fail(kind, index, recovered=allowed)
        if not allowed:
            self.log.outcome = "aborted"
        return allowed

    def _cut_slice(self, index: int) -> bool:
        """Cut one slice; False when the episode must stop."""
        settings = self.settings
        start = self.state.time
        target = self.next_x
        retries = 0
        gain = 1.0
        actions = 0
        self.state = replace(self.state, engagement=1.0)

        while True:
            self._move_over(target)
            if self._descend().failed:
                retries += 1
                if not self._retry(PREMATURE_BOARD_HIT, index, retries):
                    return False
                target -= settings.slice_thickness
                continue
            landing = self.state.knife_x
            if self.top_z is None:
                self.top_z = self.state.knife_z
            if self.params is None:
                self.params = self._identify()
            if is_uncuttable(self.params):
                self.log.outcome = "uncuttable"
                return False

            phi_x, phi_z = self.params[0], self.params[1] * gain
            chain = ActionChain(phi_x, phi_z)
            limit = settings.max_actions_per_slice - actions
            result = self._run(
                SLICING_ACTION,
                chain,
                give_up=lambda: chain.between_actions and chain.actions >= limit,
            )
            actions += chain.actions
            if result is None:
                self.log.outcome = "aborted"
                return False
            if result.terminated:
                self.log.complete_slice(self.state.time - start, actions, (phi_x, phi_z))
                self.next_x = landing - settings.slice_thickness
                return True

            retries += 1
            if not self._retry(SLIP, index, retries):
                return False
            gain *= settings.slip_engagement_gain
            self.state = replace(self.state, engagement=gain)

    def run(self) -> EpisodeLog:
        try:
            self._localize()
            for index in range(self.slices):
                if not self._cut_slice(index):
                    break
            else:
                self.log.outcome = "completed"
        except StepBudgetExhausted:
            self.log.outcome = "budget_exhausted"
        return self.log


def run_episode(
    world: Union[WorldState, MaterialSpec],
    models: Optional[CuttingModels] = None,
    policy: Optional[SlicingPolicy] = None,
    slices: int = 1,
    monitor: str = "oracle",
    seed: int = 0,
    step_budget: Optional[int] = None,
    audit: bool = True,
) -> EpisodeLog:
    """
    Cut ``slices`` slices from one item.

    Args:
        world: Initialized world, or a material to place in a fresh world
        models: Trained networks (needed for classifier monitoring)
        policy: Slicing policy (default adaptive lookup)
        slices: Requested slice count
        monitor: "classifier" for trained networks, "oracle" for
            simulator ground truth
        seed: World seed when ``world`` is a material
        step_budget: Window budget (default from settings)
        audit: Record the run in the ledger

    Returns:
        EpisodeLog whose outcome is one of completed, uncuttable, aborted
        or budget_exhausted

    Raises:
        MissingModelsError: Classifier monitoring without the needed networks
    """
    if isinstance(world, MaterialSpec):
        world = new_world(world, seed=seed)
    policy = policy or SlicingPolicy()
    log = CuttingEpisode(world, policy, slices, models, monitor, step_budget).run()
    if audit:
        log_action(
            "RUN_EPISODE",
            seed=world.seed,
            details={
                "material": log.material,
                "policy": log.policy,
                "monitor": monitor,
                "outcome": log.outcome,
                "slices": log.slices_completed,
            },
        )
    return log
