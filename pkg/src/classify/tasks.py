"""Registry of Trainable Tasks"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

from src.events import EVENTS, HITTING_EVENTS, HITTING_OBJECT, MOVE_DOWN_ONTO_OBJECT, SLICING_EVENTS

REGRESSION_OUTPUTS = ("phi_x", "phi_z")


def _all_rows(meta: pd.DataFrame) -> np.ndarray:
    return np.ones(len(meta), dtype=bool)


def _label_in(categories: tuple[str, ...]) -> Callable[[pd.DataFrame], np.ndarray]:
    def select(meta: pd.DataFrame) -> np.ndarray:
        return meta["label"].isin(categories).to_numpy()

    return select


def _descent_contact(meta: pd.DataFrame) -> np.ndarray:
    """Windows where the knife comes down onto the item."""
    return ((meta["skill"] == MOVE_DOWN_ONTO_OBJECT) & (meta["label"] == HITTING_OBJECT)).to_numpy()


@dataclass(frozen=True)
class Task:
    """
    What a network is trained to predict and from which rows.

    ``categories`` fixes the softmax label order; None means the sorted
    distinct values of ``label_field`` in the training data.
    """

    name: str
    head: str
    activation: str
    label_field: str
    row_filter: Callable[[pd.DataFrame], np.ndarray]
    categories: Optional[tuple[str, ...]] = None
    description: str = ""

    @property
    def is_regression(self) -> bool:
        return self.head == "regression"

    def select(self, meta: pd.DataFrame) -> np.ndarray:
        """Boolean row selector for this task."""
        return np.asarray(self.row_filter(meta), dtype=bool)

    def label_set(self, meta: pd.DataFrame) -> tuple[str, ...]:
        if self.is_regression:
            return REGRESSION_OUTPUTS
        if self.categories is not None:
            return self.categories
        return tuple(sorted(meta.loc[self.select(meta), self.label_field].unique()))


TASKS: dict[str, Task] = {
    "slicenet": Task(
        "slicenet", "softmax", "sigmoid", "label", _all_rows, EVENTS,
        "Six contact events from every window",
    ),
    "hitting": Task(
        "hitting", "softmax", "sigmoid", "label", _label_in(HITTING_EVENTS), HITTING_EVENTS,
        "Approach events: in air, board hit, object hit",
    ),
    "slicing": Task(
        "slicing", "softmax", "sigmoid", "label", _label_in(SLICING_EVENTS), SLICING_EVENTS,
        "Events while cutting: slicing, slipping, reaching the board",
    ),
    "foodnet": Task(
        "foodnet", "softmax", "sigmoid", "material", _descent_contact, None,
        "Material category from descent contact windows",
    ),
    "regress": Task(
        "regress", "regression", "relu", "material", _descent_contact, None,
        "Slicing parameters regressed from descent contact windows",
    ),
}


def get_task(name: str) -> Task:
    """Look up a task by name."""
    try:
        return TASKS[name]
    except KeyError:
        raise KeyError(f"unknown task {name!r}; choose from {sorted(TASKS)}")
