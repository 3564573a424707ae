"""Trajectory records and their CSV/JSON serialization.

Numbers are written with ``repr``, which round-trips every float exactly, so
verdicts recomputed from the files match the live ones bit for bit.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import algebra as dqa
from ..errors import ConfigError, DomainError

COLUMNS = (
    ["t"]
    + [f"qerr_{i}" for i in range(8)]
    + [f"werr_{i}" for i in range(6)]
    + ["norm_x", "V0", "V"]
    + [f"f_{i}" for i in range(3)]
    + [f"tau_{i}" for i in range(3)]
    + ["h_min", "fuel_kg"]
)

_W_SLOTS = [0, 1, 2, 4, 5, 6]


@dataclass(frozen=True)
class TrajectoryRecord:
    """Samples of one trajectory; ``h_min`` is NaN when no barrier is active."""

    t: np.ndarray
    q: np.ndarray
    w: np.ndarray
    norm_x: np.ndarray
    V0: np.ndarray
    V: np.ndarray
    wrench: np.ndarray
    h_min: np.ndarray
    fuel_kg: np.ndarray

    def __post_init__(self):
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise DomainError("record times must be strictly increasing")

    def columns(self):
        """Column name to 1-D array, in :data:`COLUMNS` order."""
        cols = {"t": self.t}
        for i in range(8):
            cols[f"qerr_{i}"] = self.q[:, i]
        for i, s in enumerate(_W_SLOTS):
            cols[f"werr_{i}"] = self.w[:, s]
        cols["norm_x"] = self.norm_x
        cols["V0"] = self.V0
        cols["V"] = self.V
        for i in range(3):
            cols[f"f_{i}"] = self.wrench[:, i]
            cols[f"tau_{i}"] = self.wrench[:, 4 + i]
        cols["h_min"] = self.h_min
        cols["fuel_kg"] = self.fuel_kg
        return cols


def _fmt(x):
    return repr(float(x))


def write_trajectory_csv(path, record):
    cols = record.columns()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(COLUMNS)
        for row in zip(*(cols[c] for c in COLUMNS)):
            wr.writerow([_fmt(v) for v in row])


def read_trajectory_csv(path):
    """Parse a trajectory CSV into column arrays.

    Raises
    ------
    ConfigError
        Unreadable file or a header that does not match the schema.
    DomainError
        No data rows.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    if not rows:
        raise DomainError(f"{path}: empty trajectory file")
    if rows[0] != COLUMNS:
        raise ConfigError(f"{path}: header does not match the trajectory schema")
    body = rows[1:]
    if not body:
        raise DomainError(f"{path}: trajectory has no samples")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as err:
        raise ConfigError(f"{path}: non-numeric field: {err}") from err
    if data.shape[1] != len(COLUMNS):
        raise ConfigError(f"{path}: ragged rows")
    return {c: data[:, i] for i, c in enumerate(COLUMNS)}


def pose_columns(cols):
    return np.stack([cols[f"qerr_{i}"] for i in range(8)], axis=-1)


def axial_position(cols):
    """Position of B along the reference x axis, from the pose columns."""
    return dqa.position_in_reference(pose_columns(cols))[:, 0]


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj):
    """Deterministic JSON: sorted keys, full-precision floats, Infinity allowed."""
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    except ValueError as err:
        raise ConfigError(f"cannot parse {path}: {err}") from err

