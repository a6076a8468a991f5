"""Experiments Package - Ablation and Reproduction Harnesses"""

from src.experiments.ablation import ABLATION_TASKS, run_ablation, write_ablation_csv
from src.experiments.reproduce import MANIFEST_FORMAT, STAGES, PipelineError, Reproduction, reproduce_all

__all__ = [
    "ABLATION_TASKS",
    "run_ablation",
    "write_ablation_csv",
    "PipelineError",
    "Reproduction",
    "reproduce_all",
    "STAGES",
    "MANIFEST_FORMAT",
]
