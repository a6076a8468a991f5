"""Multilayer Perceptron for Event and Material Models"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit, log_softmax, softmax

from src.signals import DimensionMismatchError

MODEL_FORMAT = "slicekit.mlp"
MODEL_VERSION = 1

ACTIVATIONS = ("sigmoid", "relu")
HEADS = ("softmax", "regression")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class MlpSpec:
    """Layer layout, activation, dropout and output head."""

    input_dim: int
    n_outputs: int
    hidden: tuple[int, ...] = (100, 100, 100)
    hidden_activation: str = "sigmoid"
    dropout_rate: float = 0.5
    head: str = "softmax"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim <= 0 or self.n_outputs <= 0 or any(h <= 0 for h in self.hidden):
            raise ValueError(f"layer sizes must be positive: {self.layer_sizes}")
        if not self.hidden:
            raise ValueError("at least one hidden layer is required")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.hidden_activation!r}")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == "softmax" and self.n_outputs < 2:
            raise ValueError("a softmax head needs at least two categories")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.n_outputs)

    @property
    def dropout_layer(self) -> int:
        """Index of the layer whose input is dropped (the last hidden layer)."""
        return len(self.hidden) - 1

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "n_outputs": self.n_outputs,
            "hidden": list(self.hidden),
            "hidden_activation": self.hidden_activation,
            "dropout_rate": self.dropout_rate,
            "head": self.head,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpSpec":
        return cls(**{**data, "hidden": tuple(data["hidden"])})


@dataclass
class MlpModel:
    """
    Weights, input normalization and output naming of one network.

    Weights are stored as (fan_in, fan_out) matrices; ``labels`` names the
    softmax categories or the regression outputs.
    """

    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    labels: tuple[str, ...] = ()
    mean: Optional[np.ndarray] = None
    std: Optional[np.ndarray] = None
    target_scale: Optional[np.ndarray] = None
    feature_mask: Optional[dict] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = self.spec.layer_sizes
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        expected = [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]
        if [w.shape for w in self.weights] != expected:
            raise DimensionMismatchError(
                f"weight shapes {[w.shape for w in self.weights]} do not match {expected}"
            )
        if [b.shape for b in self.biases] != [(s[1],) for s in expected]:
            raise DimensionMismatchError("bias shapes do not match the layer sizes")
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ValueError("model parameters must be finite")
        self.labels = tuple(self.labels)
        if self.labels and len(self.labels) != self.spec.n_outputs:
            raise ValueError(f"{len(self.labels)} labels for {self.spec.n_outputs} outputs")

    @classmethod
    def initialize(
        cls, spec: MlpSpec, rng: np.random.Generator, labels: Sequence[str] = ()
    ) -> "MlpModel":
        """Uniform weights in +-1/sqrt(fan_in), zero biases."""
        sizes = spec.layer_sizes
        weights = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases = [np.zeros(n) for n in sizes[1:]]
        return cls(spec=spec, weights=weights, biases=biases, labels=tuple(labels))

    @classmethod
    def zeros(cls, spec: MlpSpec, labels: Sequence[str] = ()) -> "MlpModel":
        sizes = spec.layer_sizes
        return cls(
            spec=spec,
            weights=[np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
            biases=[np.zeros(n) for n in sizes[1:]],
            labels=tuple(labels),
        )

    def parameters(self) -> list[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...]."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "MlpModel":
        """Copy of the model carrying new parameters."""
        return replace(self, weights=list(params[0::2]), biases=list(params[1::2]))

    def normalize(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[1] != self.spec.input_dim:
            raise DimensionMismatchError(
                f"expected {self.spec.input_dim} features, got {features.shape[1]}"
            )
        if self.mean is None:
            return features
        return (features - self.mean) / self.std

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Category names (softmax head) or physical outputs (regression head)."""
        output = forward(self, features)
        if self.spec.head == "softmax":
            names = np.asarray(self.labels or range(self.spec.n_outputs), dtype=object)
            return names[np.argmax(output, axis=1)]
        return output


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return expit(z) if kind == "sigmoid" else np.maximum(z, 0.0)


def _activation_grad(a: np.ndarray, kind: str) -> np.ndarray:
    return a * (1.0 - a) if kind == "sigmoid" else (a > 0).astype(float)


def _forward_pass(model: MlpModel, x: np.ndarray, train: bool, rng: Optional[np.random.Generator]):
    """Returns (logits or outputs, per-layer inputs, hidden activations, dropout mask)."""
    spec = model.spec
    inputs = []
    hidden = []
    mask = None
    a = x
    for layer in range(len(spec.hidden)):
        if train and layer == spec.dropout_layer and spec.dropout_rate > 0:
            if rng is None:
                raise ValueError("train mode with dropout needs an rng")
            keep = 1.0 - spec.dropout_rate
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        inputs.append(a)
        a = _activate(a @ model.weights[layer] + model.biases[layer], spec.hidden_activation)
        hidden.append(a)
    inputs.append(a)
    out = a @ model.weights[-1] + model.biases[-1]
    return out, inputs, hidden, mask


def forward(
    model: MlpModel,
    features: np.ndarray,
    mode: str = "infer",
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Run the network on raw (un-normalized) features.

    Args:
        model: Network
        features: (n, input_dim) or (input_dim,) array
        mode: "infer" (deterministic) or "train" (inverted dropout)
        rng: Generator for dropout masks in train mode

    Returns:
        Class probabilities, or regression outputs in physical units
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    out, _, _, _ = _forward_pass(model, model.normalize(features), mode == "train", rng)
    if model.spec.head == "softmax":
        return softmax(out, axis=1)
    if model.target_scale is not None:
        out = out * model.target_scale
    return out


def loss_and_gradients(
    model: MlpModel,
    features: np.ndarray,
    targets: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    train: bool = True,
) -> tuple[float, list[np.ndarray]]:
    """
    Batch loss and its gradient for every parameter.

    Softmax heads use mean categorical cross-entropy over integer class
    indices; regression heads use the mean squared error of targets divided
    by ``target_scale``.

    Returns:
        Tuple of (loss, gradients aligned with ``model.parameters()``)
    """
    spec = model.spec
    x = model.normalize(features)
    n = x.shape[0]
    out, inputs, hidden, mask = _forward_pass(model, x, train, rng)

    if spec.head == "softmax":
        targets = np.asarray(targets)
        if targets.shape != (n,) or not np.issubdtype(targets.dtype, np.integer):
            raise ValueError("softmax targets must be one integer class index per row")
        if np.any((targets < 0) | (targets >= spec.n_outputs)):
            raise ValueError(f"label index out of range [0, {spec.n_outputs})")
        log_p = log_softmax(out, axis=1)
        loss = -float(np.mean(log_p[np.arange(n), targets]))
        delta = np.exp(log_p)
        delta[np.arange(n), targets] -= 1.0
        delta /= n
    else:
        targets = np.asarray(targets, dtype=float).reshape(n, spec.n_outputs)
        if model.target_scale is not None:
            targets = targets / model.target_scale
        residual = out - targets
        loss = float(np.mean(residual**2))
        delta = 2.0 * residual / residual.size

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    grads_w[-1] = inputs[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    upstream = delta @ model.weights[-1].T
    for layer in reversed(range(len(spec.hidden))):
        dz = upstream * _activation_grad(hidden[layer], spec.hidden_activation)
        grads_w[layer] = inputs[layer].T @ dz
        grads_b[layer] = dz.sum(axis=0)
        upstream = dz @ model.weights[layer].T
        if layer == spec.dropout_layer and mask is not None:
            upstream = upstream * mask

    grads = []
    for gw, gb in zip(grads_w, grads_b):
        grads.extend((gw, gb))
    return loss, grads


def _array_or_none(values) -> Optional[np.ndarray]:
    return None if values is None else np.asarray(values, dtype=float)


def model_to_dict(model: MlpModel) -> dict:
    """Versioned JSON form."""
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": model.spec.to_dict(),
        "labels": list(model.labels),
        "normalization": None
        if model.mean is None
        else {"mean": model.mean.tolist(), "std": model.std.tolist()},
        "target_scale": None if model.target_scale is None else model.target_scale.tolist(),
        "feature_mask": model.feature_mask,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "metadata": model.metadata,
    }


def model_from_dict(data: dict) -> MlpModel:
    """Inverse of ``model_to_dict``."""
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file (format={data.get('format')!r})")
    if data.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {data.get('version')}")
    normalization = data.get("normalization") or {}
    return MlpModel(
        spec=MlpSpec.from_dict(data["spec"]),
        weights=[np.asarray(w, dtype=float) for w in data["weights"]],
        biases=[np.asarray(b, dtype=float) for b in data["biases"]],
        labels=tuple(data.get("labels", ())),
        mean=_array_or_none(normalization.get("mean")),
        std=_array_or_none(normalization.get("std")),
        target_scale=_array_or_none(data.get("target_scale")),
        feature_mask=data.get("feature_mask"),
        metadata=data.get("metadata", {}),
    )


def save_model(model: MlpModel, path: PathLike) -> Path:
    """Write a model file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True))
    return path


def load_model(path: PathLike) -> MlpModel:
    """Read a model file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model not found: {path}")
    return model_from_dict(json.loads(path.read_text()))
