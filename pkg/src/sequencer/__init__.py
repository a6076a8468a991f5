"""Sequencer Package - Cutting State Machine"""

from src.sequencer.adaptation import (
    MODEL_NAMES,
    POLICY_MODES,
    CuttingModels,
    MissingModelsError,
    MissingParamsError,
    ParamTable,
    SlicingPolicy,
    adapt_params,
    is_uncuttable,
    vote_material,
)
from src.sequencer.bench import benchmark, run_trials, summarize, write_bench_csv
from src.sequencer.episode import OUTCOMES, CuttingEpisode, run_episode
from src.sequencer.monitor import (
    MONITOR_SOURCES,
    ClassifierEvents,
    EventMonitor,
    MonitorDecision,
    OracleEvents,
    event_group,
)
from src.sequencer.skills import (
    PREMATURE_BOARD_HIT,
    SKILL_TABLE,
    SLIP,
    SkillState,
    Termination,
    UnknownSkillError,
    get_skill,
    reachable_skills,
    termination_check,
)

__all__ = [
    "SkillState",
    "SKILL_TABLE",
    "Termination",
    "UnknownSkillError",
    "SLIP",
    "PREMATURE_BOARD_HIT",
    "get_skill",
    "reachable_skills",
    "termination_check",
    "MonitorDecision",
    "EventMonitor",
    "OracleEvents",
    "ClassifierEvents",
    "MONITOR_SOURCES",
    "event_group",
    "ParamTable",
    "SlicingPolicy",
    "POLICY_MODES",
    "MODEL_NAMES",
    "CuttingModels",
    "MissingParamsError",
    "MissingModelsError",
    "adapt_params",
    "vote_material",
    "is_uncuttable",
    "CuttingEpisode",
    "OUTCOMES",
    "run_episode",
    "benchmark",
    "run_trials",
    "summarize",
    "write_bench_csv",
]
