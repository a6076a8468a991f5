"""Classify Package - Event and Material Networks"""

from src.classify.metrics import (
    EvalReport,
    classification_report,
    regression_report,
    weighted_f1,
    write_confusion_csv,
)
from src.classify.mlp import (
    MlpModel,
    MlpSpec,
    forward,
    load_model,
    loss_and_gradients,
    save_model,
)
from src.classify.optim import AdamState, adam_step
from src.classify.tasks import TASKS, Task, get_task
from src.classify.training import (
    TrainConfig,
    TrainResult,
    cap_per_class,
    evaluate,
    leave_one_material_out,
    predict_slice_params,
    stratified_split,
    train,
)

__all__ = [
    "MlpSpec",
    "MlpModel",
    "forward",
    "loss_and_gradients",
    "save_model",
    "load_model",
    "AdamState",
    "adam_step",
    "EvalReport",
    "classification_report",
    "regression_report",
    "weighted_f1",
    "write_confusion_csv",
    "Task",
    "TASKS",
    "get_task",
    "TrainConfig",
    "TrainResult",
    "train",
    "evaluate",
    "predict_slice_params",
    "cap_per_class",
    "stratified_split",
    "leave_one_material_out",
]
