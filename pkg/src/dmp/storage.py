"""DMP Model and Trajectory Persistence"""

import json
from pathlib import Path
from typing import Mapping, Union

import numpy as np
import pandas as pd

from src.dmp.primitives import AxisDmp, DmpConfig, Trajectory

MODEL_FORMAT = "slicekit.dmp"
MODEL_VERSION = 1
TRAJECTORY_COLUMNS = ("x", "y", "z")

PathLike = Union[str, Path]


def dmp_to_dict(dmps: Mapping[str, AxisDmp]) -> dict:
    """Serialize per-axis primitives sharing one config."""
    if not dmps:
        raise ValueError("no axes to serialize")
    first = next(iter(dmps.values())).config
    if any(d.config.to_dict() != first.to_dict() for d in dmps.values()):
        raise ValueError("all axes of a DMP model must share one config")
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config": first.to_dict(),
        "axes": {axis: {"weights": d.weights.tolist()} for axis, d in sorted(dmps.items())},
    }


def dmp_from_dict(data: Mapping) -> dict[str, AxisDmp]:
    """Inverse of ``dmp_to_dict``."""
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a DMP model file (format={data.get('format')!r})")
    if data.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported DMP model version {data.get('version')!r}")
    config = DmpConfig.from_dict(data["config"])
    return {
        axis: AxisDmp(config=config, weights=np.asarray(entry["weights"], dtype=float))
        for axis, entry in data["axes"].items()
    }


def save_dmp_model(path: PathLike, dmps: Mapping[str, AxisDmp]) -> Path:
    """Write a versioned JSON DMP model."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(dmp_to_dict(dmps), indent=2, sort_keys=True))
    return path


def load_dmp_model(path: PathLike) -> dict[str, AxisDmp]:
    """Read a JSON DMP model written by ``save_dmp_model``."""
    return dmp_from_dict(json.loads(Path(path).read_text()))


def save_trajectory_csv(path: PathLike, trajectory: Trajectory) -> Path:
    """
    Write a trajectory as CSV with header ``t,x,y,z``.

    Axes missing from the trajectory are written as zeros.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"t": trajectory.times})
    for axis in TRAJECTORY_COLUMNS:
        frame[axis] = trajectory.axis(axis) if axis in trajectory.axes else 0.0
    frame.to_csv(path, index=False, float_format="%.9g")
    return path


def load_trajectory_csv(path: PathLike) -> Trajectory:
    """Read a ``t,x,y,z`` CSV trajectory."""
    frame = pd.read_csv(path)
    missing = {"t", *TRAJECTORY_COLUMNS} - set(frame.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    return Trajectory(
        times=frame["t"].to_numpy(dtype=float),
        positions=frame[list(TRAJECTORY_COLUMNS)].to_numpy(dtype=float).T,
        axes=TRAJECTORY_COLUMNS,
    )


def load_demos(directory: PathLike) -> list[Trajectory]:
    """Load every ``*.csv`` demonstration in a directory, sorted by name."""
    directory = Path(directory)
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no demonstration CSV files in {directory}")
    return [load_trajectory_csv(f) for f in files]
