"""
Flat-file artifacts: time series as CSV ("t,y_1..y_d,u_1..u_N", 17
significant digits) and reports as JSON with non-finite numbers as null.
"""
from __future__ import annotations

import json
import math
import pathlib

import numpy as np

from ..calculus import SampledFunction, TimeGrid
from ..control import ControlLaw, SynthesisReport
from ..exceptions import ArtifactIOError, InputError
from ..ode import Trajectory

CSV_FMT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def write_json(path, data):
    path = pathlib.Path(path)
    try:
        with open(path, "w") as fh:
            json.dump(_jsonable(data), fh, indent=2, allow_nan=False)
    except OSError as err:
        raise ArtifactIOError(f"cannot write {path}: {err}", path=str(path)) from err
    return str(path)


def read_json(path):
    path = pathlib.Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ArtifactIOError(f"cannot read {path}: {err}", path=str(path)) from err
    except json.JSONDecodeError as err:
        raise InputError(f"{path} is not valid JSON: {err}") from err


def timeseries_header(d, N=0):
    return ",".join(["t"] + [f"y_{i + 1}" for i in range(d)] + [f"u_{i + 1}" for i in range(N)])


def write_timeseries(path, y, u=None):
    """
    Parameters
        path: str or pathlib.Path
        y: Trajectory
        u: SampledFunction, optional
            Control on the same grid
    """
    states = y.vectors()
    columns = [y.grid.nodes[:, None], states]
    N = 0
    if u is not None:
        if not u.grid.matches(y.grid):
            raise InputError("control and trajectory must share a grid", field="grid")
        u_vals = u.vectors()
        N = u_vals.shape[1]
        columns.append(u_vals)
    table = np.hstack(columns)
    path = pathlib.Path(path)
    try:
        np.savetxt(path, table, fmt=CSV_FMT, delimiter=",",
                   header=timeseries_header(states.shape[1], N), comments="")
    except OSError as err:
        raise ArtifactIOError(f"cannot write {path}: {err}", path=str(path)) from err
    return str(path)


def read_timeseries(path):
    """
    Returns
        y: Trajectory
        u: SampledFunction or None
    """
    path = pathlib.Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as err:
        raise ArtifactIOError(f"cannot read {path}: {err}", path=str(path)) from err
    except ValueError as err:
        raise InputError(f"{path} is not a valid time series: {err}") from err
    if not header or header[0] != "t":
        raise InputError(f"{path} does not start with a 't' column")
    d = sum(1 for name in header if name.startswith("y_"))
    N = sum(1 for name in header if name.startswith("u_"))
    if table.shape[1] != 1 + d + N:
        raise InputError(f"{path}: header names {1 + d + N} columns, rows have {table.shape[1]}")
    t = table[:, 0]
    grid = TimeGrid(float(t[0]), float(t[-1]), len(t) - 1)
    y = Trajectory(grid, table[:, 1:1 + d])
    u = SampledFunction(grid, table[:, 1 + d:]) if N else None
    return y, u


def export(artifact, path, u=None):
    """
    Write a Trajectory (CSV, with optional control u), a ControlLaw (JSON)
    or a SynthesisReport (JSON).
    """
    if isinstance(artifact, Trajectory):
        return write_timeseries(path, artifact, u)
    if isinstance(artifact, (ControlLaw, SynthesisReport)):
        return write_json(path, artifact.to_dict())
    raise InputError(f"cannot export objects of type {type(artifact).__name__}")
