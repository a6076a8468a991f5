"""Slicing Parameter Adaptation"""

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from src.classify import MlpModel, load_model
from src.config import get_settings

PathLike = Union[str, Path]

POLICY_MODES = ("adaptive-lookup", "adaptive-regression", "fixed")
MODEL_NAMES = ("slicenet", "hitting", "slicing", "foodnet", "regress")
TABLE_FORMAT = "slicekit.params"
UNCUTTABLE_LIMIT = 1e-3


class MissingParamsError(KeyError):
    """Material label has no slicing parameters."""


class MissingModelsError(ValueError):
    """A network the episode needs was not provided."""


@dataclass(frozen=True)
class ParamTable:
    """Material label to (phi_x, phi_z) in meters."""

    entries: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        clean = {}
        for label, params in self.entries.items():
            phi_x, phi_z = (float(p) for p in params)
            if phi_x < 0 or phi_z < 0 or not np.isfinite([phi_x, phi_z]).all():
                raise ValueError(f"parameters for {label!r} must be finite and non-negative")
            clean[label] = (phi_x, phi_z)
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, label: str) -> tuple[float, float]:
        try:
            return self.entries[label]
        except KeyError:
            raise MissingParamsError(f"no slicing parameters for material {label!r}")

    def __contains__(self, label: str) -> bool:
        return label in self.entries

    def missing(self, labels: Iterable[str]) -> list[str]:
        """Labels without an entry."""
        return sorted(set(labels) - set(self.entries))

    @classmethod
    def from_materials(cls, materials: Iterable) -> "ParamTable":
        return cls({m.name: m.true_params for m in materials})

    def to_dict(self) -> dict:
        return {"format": TABLE_FORMAT, "params": {k: list(v) for k, v in sorted(self.entries.items())}}

    @classmethod
    def from_dict(cls, data: dict) -> "ParamTable":
        return cls({k: tuple(v) for k, v in data.get("params", data).items()})

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, path: PathLike) -> "ParamTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SlicingPolicy:
    """
    How slicing parameters are chosen.

    ``adaptive-lookup`` substitutes the table entry of the recognized
    material, ``adaptive-regression`` uses regressed parameters directly,
    and ``fixed`` always slices with ``fixed_params``.
    """

    mode: str = "adaptive-lookup"
    fixed_params: Optional[tuple[float, float]] = None
    table: Optional[ParamTable] = None

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ValueError(f"policy must be one of {POLICY_MODES}, got {self.mode!r}")
        if self.fixed_params is None:
            settings = get_settings()
            object.__setattr__(self, "fixed_params", (settings.fixed_phi_x, settings.fixed_phi_z))

    @property
    def adaptive(self) -> bool:
        return self.mode != "fixed"

    @classmethod
    def fixed(cls, phi_x: Optional[float] = None, phi_z: Optional[float] = None) -> "SlicingPolicy":
        """Conservative policy; unset parameters come from settings."""
        settings = get_settings()
        return cls(
            "fixed",
            (
                settings.fixed_phi_x if phi_x is None else phi_x,
                settings.fixed_phi_z if phi_z is None else phi_z,
            ),
        )


def vote_material(labels: Sequence[str]) -> str:
    """Majority label; ties go to the label seen first."""
    if not labels:
        raise ValueError("cannot vote on an empty label list")
    counts = Counter(labels)
    best = max(counts.values())
    return next(label for label in labels if counts[label] == best)


def adapt_params(
    policy: SlicingPolicy,
    label: Optional[str] = None,
    regressed: Optional[np.ndarray] = None,
    upper: Optional[float] = None,
) -> tuple[float, float]:
    """
    Slicing parameters for the recognized material.

    Args:
        policy: Slicing policy
        label: Recognized material (lookup mode)
        regressed: Predicted (phi_x, phi_z) or a stack of predictions whose
            mean is used (regression mode)
        upper: Clamp for regressed parameters (default from settings)

    Returns:
        (phi_x, phi_z) in meters

    Raises:
        MissingParamsError: Lookup label absent from the table
        ValueError: The policy's mode needs an input that was not given
    """
    if policy.mode == "fixed":
        return policy.fixed_params
    if policy.mode == "adaptive-lookup":
        if label is None or policy.table is None:
            raise ValueError("lookup adaptation needs a material label and a parameter table")
        return policy.table[label]
    if regressed is None:
        raise ValueError("regression adaptation needs predicted parameters")
    upper = get_settings().param_upper_bound if upper is None else upper
    params = np.atleast_2d(np.asarray(regressed, dtype=float)).mean(axis=0)
    phi_x, phi_z = np.clip(params, 0.0, upper)
    return float(phi_x), float(phi_z)


def is_uncuttable(params: Sequence[float]) -> bool:
    """Parameters this close to zero mean the item cannot be sliced."""
    return max(params) < UNCUTTABLE_LIMIT


@dataclass
class CuttingModels:
    """Networks an episode can use; any may be absent."""

    slicenet: Optional[MlpModel] = None
    hitting: Optional[MlpModel] = None
    slicing: Optional[MlpModel] = None
    foodnet: Optional[MlpModel] = None
    regress: Optional[MlpModel] = None
    loaded_from: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, directory: PathLike) -> "CuttingModels":
        """
        Load ``<name>.json`` for every known network present in ``directory``.

        Raises:
            FileNotFoundError: Directory missing
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"model directory not found: {directory}")
        models = cls()
        for name in MODEL_NAMES:
            path = directory / f"{name}.json"
            if path.exists():
                setattr(models, name, load_model(path))
                models.loaded_from[name] = str(path)
        return models

    def require(self, policy: SlicingPolicy, monitor: str) -> None:
        """
        Raise when the policy or the monitor lacks a network.

        Raises:
            MissingModelsError: Naming the missing networks
        """
        missing = []
        if monitor == "classifier" and self.slicenet is None and (self.hitting is None or self.slicing is None):
            missing.append("slicenet")
        if monitor == "classifier" and policy.mode == "adaptive-lookup" and self.foodnet is None:
            missing.append("foodnet")
        if monitor == "classifier" and policy.mode == "adaptive-regression" and self.regress is None:
            missing.append("regress")
        if missing:
            raise MissingModelsError(f"{policy.mode} episode with {monitor} monitoring needs: {missing}")
