"""Serialization: deterministic report JSON, CSV series, binary profiles.

Report JSON is byte-reproducible for a fixed config and seed: keys are
sorted, floats go through repr, and wall-clock metadata lives in a
sidecar `<name>.meta.json` so the report file itself never changes
between identical runs.

Profiles dump to a little-endian binary format with a fixed header
(magic "KGPROF01"), enough to rebuild the grid and the solution array
without guessing.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .elliptic import Profile
from .grids import GEOMETRIES, Grid

_MAGIC = b"KGPROF01"


def to_jsonable(obj):
    """Recursively strip numpy and dataclass wrappers for json.dump."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_report(report: dict, path, meta: dict | None = None) -> None:
    """Write the report deterministically; timestamps go to the sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(to_jsonable(report), f, indent=2, sort_keys=True)
        f.write("\n")
    side = dict(meta or {})
    side["written_at"] = datetime.now(timezone.utc).isoformat()
    with open(path.with_suffix(".meta.json"), "w") as f:
        json.dump(to_jsonable(side), f, indent=2, sort_keys=True)
        f.write("\n")


def read_report(path) -> dict:
    with open(path) as f:
        return json.load(f)


def write_csv(path, header: list, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            # repr of the builtin float round-trips at full precision
            writer.writerow(
                [repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row]
            )


def trajectory_to_csv(record, path) -> None:
    rows = zip(
        record.times, record.energy, record.charge, record.distance, record.v_residual
    )
    write_csv(path, ["t", "E", "Q", "d", "v_residual"], rows)


def save_profile(profile: Profile, path) -> None:
    g = profile.grid
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = struct.pack(
        "<ii q dddd d",
        g.dimension,
        GEOMETRIES.index(g.geometry),
        g.n,
        g.extent,
        profile.omega,
        profile.epsilon,
        profile.p,
        profile.residual,
    )
    center = np.asarray(profile.center, dtype="<f8")
    values = np.ascontiguousarray(profile.values, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(head)
        f.write(center.tobytes())
        f.write(values.tobytes())


def load_profile(path) -> Profile:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not a profile dump")
    off = len(_MAGIC)
    fmt = "<ii q dddd d"
    dim, geom_code, n, extent, omega, epsilon, p, residual = struct.unpack_from(
        fmt, blob, off
    )
    off += struct.calcsize(fmt)
    center = np.frombuffer(blob, dtype="<f8", count=dim, offset=off)
    off += 8 * dim
    grid = Grid(dim, GEOMETRIES[geom_code], extent, n)
    count = int(np.prod(grid.shape))
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(
        grid.shape
    )
    from .elliptic import _peak_of

    return Profile(
        grid=grid,
        values=values.copy(),
        omega=omega,
        epsilon=epsilon,
        p=p,
        center=tuple(center),
        residual=residual,
        peak=_peak_of(grid, values),
    )
