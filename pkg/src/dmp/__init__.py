"""DMP Package - Parameterized Movement Primitives"""

from src.dmp.imitation import (
    IllConditionedError,
    SlicingSkill,
    attach_material_feature,
    build_slicing_skill,
    fit_weights,
    resample,
    synthetic_slicing_demos,
)
from src.dmp.primitives import (
    AxisDmp,
    DmpConfig,
    IntegrationInstabilityError,
    ObjectFeatures,
    PhaseClampWarning,
    Trajectory,
    basis_activations,
    canonical_rollout,
    chain,
    chain_segments,
    fixed_point,
    forcing,
    minimum_jerk,
    rollout,
    rollout_skill,
)
from src.dmp.storage import (
    load_demos,
    load_dmp_model,
    load_trajectory_csv,
    save_dmp_model,
    save_trajectory_csv,
)

__all__ = [
    "DmpConfig",
    "AxisDmp",
    "ObjectFeatures",
    "Trajectory",
    "IntegrationInstabilityError",
    "IllConditionedError",
    "PhaseClampWarning",
    "canonical_rollout",
    "basis_activations",
    "minimum_jerk",
    "forcing",
    "rollout",
    "rollout_skill",
    "fixed_point",
    "chain",
    "chain_segments",
    "fit_weights",
    "resample",
    "attach_material_feature",
    "synthetic_slicing_demos",
    "SlicingSkill",
    "build_slicing_skill",
    "save_dmp_model",
    "load_dmp_model",
    "save_trajectory_csv",
    "load_trajectory_csv",
    "load_demos",
]
