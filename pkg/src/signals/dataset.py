"""Windowed Feature Datasets in JSON-Lines Form"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.signals.fusion import FULL_MASK, DimensionMismatchError, FeatureMask, resolve_mask

PathLike = Union[str, Path]


@dataclass
class DatasetRow:
    """One labeled window."""

    window_id: str
    episode_id: str
    skill: str
    label: str
    material: str
    params: tuple[float, float]
    features: np.ndarray

    def to_dict(self, mask: FeatureMask) -> dict:
        """JSON-lines record."""
        return {
            "window_id": self.window_id,
            "episode_id": self.episode_id,
            "skill": self.skill,
            "label": self.label,
            "material": self.material,
            "params": [float(p) for p in self.params],
            "features": [float(v) for v in self.features],
            "mask": mask.to_dict(),
        }


@dataclass
class Dataset:
    """Column-oriented view of labeled windows sharing one feature mask."""

    features: np.ndarray
    meta: pd.DataFrame
    mask: FeatureMask = field(default_factory=FeatureMask)
    info: dict = field(default_factory=dict)

    META_COLUMNS = ("window_id", "episode_id", "skill", "label", "material", "param_x", "param_z")

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        if len(self.meta) == 0:
            self.features = self.features.reshape(0, self.mask.size)
        if self.features.shape != (len(self.meta), self.mask.size):
            raise DimensionMismatchError(
                f"features {self.features.shape} do not match {len(self.meta)} rows "
                f"of mask size {self.mask.size}"
            )
        self.meta = self.meta.reset_index(drop=True)

    def __len__(self) -> int:
        return len(self.meta)

    @classmethod
    def from_rows(
        cls, rows: Sequence[DatasetRow], mask: Optional[FeatureMask] = None, info: Optional[dict] = None
    ) -> "Dataset":
        """Build from row records."""
        mask = resolve_mask(mask)
        meta = pd.DataFrame(
            [
                {
                    "window_id": r.window_id,
                    "episode_id": r.episode_id,
                    "skill": r.skill,
                    "label": r.label,
                    "material": r.material,
                    "param_x": float(r.params[0]),
                    "param_z": float(r.params[1]),
                }
                for r in rows
            ],
            columns=list(cls.META_COLUMNS),
        )
        features = np.vstack([r.features for r in rows]) if rows else np.zeros((0, mask.size))
        return cls(features=features, meta=meta, mask=mask, info=dict(info or {}))

    @property
    def labels(self) -> np.ndarray:
        """Label column as an object array."""
        return self.meta["label"].to_numpy()

    @property
    def params(self) -> np.ndarray:
        """(n, 2) array of ground-truth slicing parameters."""
        return self.meta[["param_x", "param_z"]].to_numpy(dtype=float)

    def subset(self, index: Iterable[int]) -> "Dataset":
        """Rows at ``index`` in the given order."""
        index = np.asarray(list(index), dtype=int)
        return Dataset(
            features=self.features[index] if index.size else np.zeros((0, self.mask.size)),
            meta=self.meta.iloc[index],
            mask=self.mask,
            info=dict(self.info),
        )

    def where(self, selector: np.ndarray) -> "Dataset":
        """Rows where the boolean selector is true."""
        return self.subset(np.flatnonzero(np.asarray(selector, dtype=bool)))

    def with_mask(self, mask) -> "Dataset":
        """
        Restrict features to a sub-mask.

        Only possible when the stored mask covers every requested feature.
        """
        mask = resolve_mask(mask)
        stored = self.mask.indices()
        position = {int(v): i for i, v in enumerate(stored)}
        wanted = mask.indices()
        missing = [int(v) for v in wanted if int(v) not in position]
        if missing:
            raise DimensionMismatchError(
                f"dataset mask lacks {len(missing)} of the requested features"
            )
        columns = np.array([position[int(v)] for v in wanted], dtype=int)
        return Dataset(
            features=self.features[:, columns],
            meta=self.meta.copy(),
            mask=mask,
            info=dict(self.info),
        )

    def rows(self) -> Iterable[DatasetRow]:
        """Iterate over row records."""
        for i, record in enumerate(self.meta.itertuples(index=False)):
            yield DatasetRow(
                window_id=record.window_id,
                episode_id=record.episode_id,
                skill=record.skill,
                label=record.label,
                material=record.material,
                params=(record.param_x, record.param_z),
                features=self.features[i],
            )

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        """Stack datasets with identical masks."""
        if not parts:
            raise ValueError("nothing to concatenate")
        mask = parts[0].mask
        if any(p.mask != mask for p in parts):
            raise DimensionMismatchError("cannot concatenate datasets with different masks")
        return Dataset(
            features=np.vstack([p.features for p in parts]),
            meta=pd.concat([p.meta for p in parts], ignore_index=True),
            mask=mask,
            info=dict(parts[0].info),
        )


def meta_path(path: PathLike) -> Path:
    """Sidecar path ``<stem>.meta.json`` next to a dataset file."""
    path = Path(path)
    return path.with_name(path.name.split(".")[0] + ".meta.json")


def write_dataset(path: PathLike, dataset: Dataset, info: Optional[dict] = None) -> Path:
    """
    Write JSON-lines rows plus the metadata sidecar.

    Output is byte-identical for identical inputs.

    Args:
        path: Target ``.jsonl`` path
        dataset: Rows to write
        info: Sidecar contents (sample rates, seed, recipe)

    Returns:
        Path of the dataset file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for row in dataset.rows():
            handle.write(json.dumps(row.to_dict(dataset.mask), sort_keys=True) + "\n")
    sidecar = {**dataset.info, **(info or {}), "rows": len(dataset), "mask": dataset.mask.to_dict()}
    meta_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def read_dataset(path: PathLike) -> Dataset:
    """Read a JSON-lines dataset and its sidecar if present."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    rows = []
    mask = None
    with path.open() as handle:
        for number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            record = json.loads(line)
            row_mask = FeatureMask.from_dict(record.get("mask", FULL_MASK.to_dict()))
            if mask is None:
                mask = row_mask
            elif row_mask != mask:
                raise DimensionMismatchError(f"{path}:{number}: mask differs from the first row")
            rows.append(
                DatasetRow(
                    window_id=record["window_id"],
                    episode_id=record["episode_id"],
                    skill=record["skill"],
                    label=record["label"],
                    material=record.get("material", ""),
                    params=tuple(record.get("params", (0.0, 0.0))),
                    features=np.asarray(record["features"], dtype=float),
                )
            )
    sidecar = meta_path(path)
    info = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    return Dataset.from_rows(rows, mask=mask or FULL_MASK, info=info)
