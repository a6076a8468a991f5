"""Simulator Package - Synthetic Cutting Rig"""

from src.simulator.collection import (
    CollectedEpisode,
    CollectionRecipe,
    boundary_errors,
    generate_dataset,
    label_windows,
    material_episodes,
)
from src.simulator.commands import (
    CommandSource,
    ConstantVelocity,
    DepthGuard,
    MoveTo,
    VelocityPlayback,
    slicing_playback,
    slicing_velocities,
)
from src.simulator.episodes import EpisodeLog, advance_window, read_episode, write_episode
from src.simulator.materials import (
    DEFAULT_MATERIALS,
    SOFT_MATERIALS,
    MaterialSpec,
    get_material,
    load_materials,
    param_table,
    save_materials,
)
from src.simulator.sensors import NOISE_FLOOR, emit_sensors
from src.simulator.world import (
    BOARD,
    CONTACT_BAND,
    OBJECT,
    StepRecord,
    WorldState,
    check_consistency,
    cut_rate,
    new_world,
    physics_dt,
    skin_travel_needed,
    slip_probability,
    step_world,
    window_event,
)

__all__ = [
    "MaterialSpec",
    "DEFAULT_MATERIALS",
    "SOFT_MATERIALS",
    "get_material",
    "load_materials",
    "save_materials",
    "param_table",
    "WorldState",
    "StepRecord",
    "BOARD",
    "OBJECT",
    "CONTACT_BAND",
    "new_world",
    "step_world",
    "physics_dt",
    "cut_rate",
    "skin_travel_needed",
    "slip_probability",
    "window_event",
    "check_consistency",
    "NOISE_FLOOR",
    "emit_sensors",
    "CommandSource",
    "ConstantVelocity",
    "VelocityPlayback",
    "MoveTo",
    "DepthGuard",
    "slicing_playback",
    "slicing_velocities",
    "EpisodeLog",
    "advance_window",
    "write_episode",
    "read_episode",
    "CollectionRecipe",
    "CollectedEpisode",
    "material_episodes",
    "label_windows",
    "boundary_errors",
    "generate_dataset",
]
