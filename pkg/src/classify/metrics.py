"""Evaluation Reports for Classifiers and Regressors"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support


@dataclass
class EvalReport:
    """
    Held-out performance of one model.

    Classification reports carry the confusion matrix (rows true, columns
    predicted) and per-class scores; regression reports carry the per-class
    mean absolute error of each output.
    """

    labels: tuple[str, ...]
    support: np.ndarray
    confusion: Optional[np.ndarray] = None
    precision: Optional[np.ndarray] = None
    recall: Optional[np.ndarray] = None
    f1: Optional[np.ndarray] = None
    weighted_f1: Optional[float] = None
    mae: Optional[np.ndarray] = None
    outputs: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "classification" if self.confusion is not None else "regression"

    @property
    def mean_absolute_error(self) -> Optional[np.ndarray]:
        """Support-weighted MAE per output."""
        if self.mae is None or self.support.sum() == 0:
            return None
        return np.average(self.mae, axis=0, weights=self.support)

    def normalized_confusion(self) -> np.ndarray:
        """Row-normalized confusion matrix; empty rows stay zero."""
        rows = self.confusion.sum(axis=1, keepdims=True)
        return np.divide(self.confusion, rows, out=np.zeros(self.confusion.shape), where=rows > 0)

    def confusion_frame(self, normalize: bool = False) -> pd.DataFrame:
        matrix = self.normalized_confusion() if normalize else self.confusion
        return pd.DataFrame(matrix, index=list(self.labels), columns=list(self.labels))

    def to_dict(self) -> dict:
        """JSON form."""
        data = {"kind": self.kind, "labels": list(self.labels), "support": self.support.tolist()}
        if self.kind == "classification":
            data.update(
                confusion=self.confusion.tolist(),
                precision=self.precision.tolist(),
                recall=self.recall.tolist(),
                f1=self.f1.tolist(),
                weighted_f1=self.weighted_f1,
            )
        else:
            data.update(
                outputs=list(self.outputs),
                mae=self.mae.tolist(),
                mean_absolute_error=None
                if self.mean_absolute_error is None
                else self.mean_absolute_error.tolist(),
            )
        data.update(self.extra)
        return data


def weighted_f1(f1: np.ndarray, support: np.ndarray) -> float:
    """Per-class F1 averaged with class support as weights."""
    support = np.asarray(support, dtype=float)
    if support.sum() == 0:
        return 0.0
    return float(np.average(f1, weights=support))


def classification_report(
    true_labels: Sequence[str], predicted: Sequence[str], labels: Sequence[str]
) -> EvalReport:
    """
    Confusion matrix and F1 scores over a fixed label order.

    Args:
        true_labels: Ground-truth category per row
        predicted: Predicted category per row
        labels: Category order for rows and columns
    """
    labels = tuple(labels)
    confusion = confusion_matrix(list(true_labels), list(predicted), labels=list(labels))
    precision, recall, f1, support = precision_recall_fscore_support(
        list(true_labels), list(predicted), labels=list(labels), zero_division=0
    )
    return EvalReport(
        labels=labels,
        support=np.asarray(support),
        confusion=confusion,
        precision=precision,
        recall=recall,
        f1=f1,
        weighted_f1=weighted_f1(f1, support),
    )


def regression_report(
    targets: np.ndarray,
    predicted: np.ndarray,
    groups: Sequence[str],
    outputs: Sequence[str] = ("phi_x", "phi_z"),
) -> EvalReport:
    """Per-group mean absolute error of every regression output."""
    targets = np.asarray(targets, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    frame = pd.DataFrame(np.abs(predicted - targets), columns=list(outputs))
    frame["group"] = list(groups)
    summary = frame.groupby("group", sort=True)
    return EvalReport(
        labels=tuple(summary.size().index),
        support=summary.size().to_numpy(),
        mae=summary[list(outputs)].mean().to_numpy(),
        outputs=tuple(outputs),
    )


def write_confusion_csv(path: Union[str, Path], report: EvalReport, normalize: bool = False) -> Path:
    """Confusion matrix as CSV for external plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.confusion_frame(normalize).to_csv(path, float_format="%.6g")
    return path
