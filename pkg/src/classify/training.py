"""Training, Evaluation and Parameter Prediction"""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from src.classify.metrics import EvalReport, classification_report, regression_report
from src.classify.mlp import MlpModel, MlpSpec, forward, loss_and_gradients
from src.classify.optim import AdamState, adam_step
from src.classify.tasks import REGRESSION_OUTPUTS, Task, get_task
from src.config import get_settings
from src.signals import Dataset

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; unset fields come from settings."""

    epochs: Optional[int] = None
    batch_size: Optional[int] = None
    learning_rate: Optional[float] = None
    dropout_rate: Optional[float] = None
    test_fraction: Optional[float] = None
    max_per_class: Optional[int] = None
    hidden: tuple[int, ...] = (100, 100, 100)

    def resolved(self) -> "TrainConfig":
        settings = get_settings()
        return TrainConfig(
            epochs=self.epochs or settings.epochs,
            batch_size=self.batch_size or settings.batch_size,
            learning_rate=self.learning_rate or settings.learning_rate,
            dropout_rate=settings.dropout_rate if self.dropout_rate is None else self.dropout_rate,
            test_fraction=self.test_fraction or settings.test_fraction,
            max_per_class=self.max_per_class or settings.max_windows_per_class,
            hidden=self.hidden,
        )


@dataclass
class TrainResult:
    """Trained model with its held-out report and loss curve."""

    model: MlpModel
    report: EvalReport
    loss_curve: list[float] = field(default_factory=list)
    train_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    test_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def cap_per_class(groups: np.ndarray, cap: Optional[int], rng: np.random.Generator) -> np.ndarray:
    """Indices keeping at most ``cap`` seeded-random rows per group, in original order."""
    groups = np.asarray(groups)
    if cap is None:
        return np.arange(groups.size)
    keep = []
    for group in sorted(set(groups.tolist())):
        members = np.flatnonzero(groups == group)
        if members.size > cap:
            members = np.sort(rng.choice(members, size=cap, replace=False))
        keep.append(members)
    return np.sort(np.concatenate(keep)) if keep else np.zeros(0, dtype=int)


def stratified_split(
    groups: np.ndarray, test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Split row indices so every group keeps its share in both halves.

    Raises:
        ValueError: When a group has too few rows to appear on both sides
    """
    groups = np.asarray(groups)
    values, counts = np.unique(groups, return_counts=True)
    scarce = [str(v) for v, c in zip(values, counts) if c < 2]
    if scarce:
        raise ValueError(f"classes with fewer than two examples cannot be split: {scarce}")
    train, test = train_test_split(
        np.arange(groups.size), test_size=test_fraction, stratify=groups, random_state=seed
    )
    return np.sort(train), np.sort(test)


def task_rows(dataset: Dataset, task: Task) -> Dataset:
    """Rows the task trains and evaluates on."""
    return dataset.where(task.select(dataset.meta))


def _targets(rows: Dataset, task: Task, labels: tuple[str, ...]) -> np.ndarray:
    if task.is_regression:
        return rows.params
    index = {label: i for i, label in enumerate(labels)}
    return np.array([index[v] for v in rows.meta[task.label_field]], dtype=int)


def _fit_normalization(model: MlpModel, features: np.ndarray) -> None:
    model.mean = features.mean(axis=0)
    std = features.std(axis=0)
    model.std = np.where(std < STD_FLOOR, 1.0, std)


def fit_model(
    model: MlpModel,
    features: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[MlpModel, list[float]]:
    """
    Minibatch Adam over a fixed number of epochs.

    Returns:
        Tuple of (trained model, mean training loss per epoch)
    """
    state = AdamState.for_params(model.parameters(), lr=config.learning_rate)
    curve = []
    n = features.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(model, features[batch], targets[batch], rng)
            params, state = adam_step(model.parameters(), grads, state)
            model = model.with_parameters(params)
            total += loss * batch.size
        curve.append(total / n)
    return model, curve


def train(
    dataset: Dataset,
    task: Union[str, Task],
    config: Optional[TrainConfig] = None,
    seed: int = 0,
) -> TrainResult:
    """
    Train one network and report on its held-out split.

    Args:
        dataset: Labeled windows
        task: Task name or definition
        config: Optimization settings
        seed: Seed for capping, split, initialization, shuffling and dropout

    Returns:
        TrainResult with model, report and loss curve

    Raises:
        ValueError: Empty task rows, or a declared class without examples
    """
    task = get_task(task) if isinstance(task, str) else task
    config = (config or TrainConfig()).resolved()
    rng = np.random.default_rng(seed)

    rows = task_rows(dataset, task)
    if len(rows) == 0:
        raise ValueError(f"dataset has no rows for task {task.name!r}")
    labels = task.label_set(rows.meta)
    groups = rows.meta[task.label_field].to_numpy()
    if not task.is_regression:
        missing = sorted(set(labels) - set(groups.tolist()))
        if missing:
            raise ValueError(f"classes without training examples for {task.name}: {missing}")

    rows = rows.subset(cap_per_class(groups, config.max_per_class, rng))
    groups = rows.meta[task.label_field].to_numpy()
    train_index, test_index = stratified_split(groups, config.test_fraction, seed)

    features = rows.features
    targets = _targets(rows, task, labels)
    spec = MlpSpec(
        input_dim=features.shape[1],
        n_outputs=len(labels),
        hidden=config.hidden,
        hidden_activation=task.activation,
        dropout_rate=config.dropout_rate,
        head=task.head,
    )
    model = MlpModel.initialize(spec, rng, labels)
    model.feature_mask = rows.mask.to_dict()
    _fit_normalization(model, features[train_index])
    if task.is_regression:
        scale = np.abs(targets[train_index]).max(axis=0)
        model.target_scale = np.where(scale > 0, scale, 1.0)

    model, curve = fit_model(model, features[train_index], targets[train_index], config, rng)
    model.metadata = {
        "task": task.name,
        "seed": seed,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "n_train": int(train_index.size),
        "n_test": int(test_index.size),
        "loss_curve": curve,
    }
    report = evaluate(model, rows.subset(test_index), task)
    return TrainResult(model, report, curve, train_index, test_index)


def evaluate(model: MlpModel, dataset: Dataset, task: Union[str, Task, None] = None) -> EvalReport:
    """
    Score a model on labeled windows.

    Rows outside the task's selection are ignored; the task defaults to the
    one recorded in the model metadata.
    """
    task = task or model.metadata.get("task", "slicenet")
    task = get_task(task) if isinstance(task, str) else task
    rows = task_rows(dataset, task)
    if task.is_regression:
        predicted = predict_slice_params(model, rows.features) if len(rows) else np.zeros((0, 2))
        return regression_report(rows.params, predicted, rows.meta["material"], REGRESSION_OUTPUTS)
    predicted = model.predict(rows.features) if len(rows) else np.zeros(0, dtype=object)
    return classification_report(rows.meta[task.label_field], predicted, model.labels)


def predict_slice_params(
    model: MlpModel, features: np.ndarray, upper: Optional[float] = None
) -> np.ndarray:
    """
    Regressed (phi_x, phi_z) clamped to [0, upper].

    Returns:
        (n, 2) array for a batch, or a length-2 array for one vector
    """
    if model.spec.head != "regression":
        raise ValueError("parameter prediction needs a regression-head model")
    upper = get_settings().param_upper_bound if upper is None else upper
    single = np.asarray(features).ndim == 1
    params = np.clip(forward(model, features), 0.0, upper)
    return params[0] if single else params


def leave_one_material_out(
    dataset: Dataset, config: Optional[TrainConfig] = None, seed: int = 0
) -> pd.DataFrame:
    """
    Held-out regression error per material.

    Each material is predicted by a regression network trained on every
    other material; materials whose parameters no other material shares
    are expected to show the largest errors.
    """
    task = get_task("regress")
    config = (config or TrainConfig()).resolved()
    rows = task_rows(dataset, task)
    records = []
    for material in sorted(rows.meta["material"].unique()):
        held = rows.meta["material"].to_numpy() == material
        others = rows.where(~held)
        rng = np.random.default_rng(seed)
        keep = cap_per_class(others.meta["material"].to_numpy(), config.max_per_class, rng)
        others = others.subset(keep)

        spec = MlpSpec(
            input_dim=rows.features.shape[1],
            n_outputs=2,
            hidden=config.hidden,
            hidden_activation=task.activation,
            dropout_rate=config.dropout_rate,
            head=task.head,
        )
        model = MlpModel.initialize(spec, rng, REGRESSION_OUTPUTS)
        _fit_normalization(model, others.features)
        scale = np.abs(others.params).max(axis=0)
        model.target_scale = np.where(scale > 0, scale, 1.0)
        model, _ = fit_model(model, others.features, others.params, config, rng)

        target = rows.where(held)
        error = np.abs(predict_slice_params(model, target.features) - target.params).mean(axis=0)
        true_x, true_z = target.params[0]
        records.append(
            {
                "material": material,
                "windows": len(target),
                "phi_x": true_x,
                "phi_z": true_z,
                "mae_x": error[0],
                "mae_z": error[1],
            }
        )
    return pd.DataFrame(records)
