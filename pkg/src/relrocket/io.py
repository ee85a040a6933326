"""Trajectory files.

CSV: a header row ``t,tau,p,v,m,u,w,gain,residual`` followed by one row per
sample. JSON: an object with ``samples`` (objects keyed by those columns),
``events`` and ``dt``. Every float is written with 17 significant digits so a
file read back reproduces the samples bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .simulation import COLUMNS, Event, EventKind, Trajectory

FORMAT_NAME = "relrocket-trajectory"
FORMAT_VERSION = 1


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = [",".join(COLUMNS)]
    for row in traj.data:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str, dt: float | None = None) -> Trajectory:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    if dt is None:
        dt = float(data[1, 0] - data[0, 0]) if len(data) > 1 else math.nan
    return Trajectory(data, [], dt)


def trajectory_to_json(traj: Trajectory) -> str:
    # hand-rolled so floats keep the fixed 17-digit format
    out = ["{", f'  "format": "{FORMAT_NAME}",', f'  "version": {FORMAT_VERSION},',
           f'  "dt": {fmt(traj.dt)},', f'  "columns": {json.dumps(list(COLUMNS))},',
           '  "samples": [']
    for i, row in enumerate(traj.data):
        body = ", ".join(f'"{name}": {fmt(x)}' for name, x in zip(COLUMNS, row))
        out.append("    {" + body + "}" + ("," if i < len(traj.data) - 1 else ""))
    out.append("  ],")
    out.append('  "events": [')
    for i, ev in enumerate(traj.events):
        sep = "," if i < len(traj.events) - 1 else ""
        out.append(f'    {{"time": {fmt(ev.time)}, "kind": "{ev.kind.value}"}}{sep}')
    out.append("  ]")
    out.append("}")
    return "\n".join(out) + "\n"


def trajectory_from_json(text: str) -> Trajectory:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError("not a trajectory document")
    data = np.array([[s[name] for name in COLUMNS] for s in doc["samples"]], dtype=float)
    events = [Event(float(e["time"]), EventKind(e["kind"])) for e in doc["events"]]
    return Trajectory(data.reshape(-1, len(COLUMNS)), events, float(doc["dt"]))


def write_trajectory(traj: Trajectory, path, fmt_name: str = "csv") -> Path:
    path = Path(path)
    text = trajectory_to_json(traj) if fmt_name == "json" else trajectory_to_csv(traj)
    path.write_text(text, encoding="utf-8")
    return path


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return trajectory_from_json(text)
    return trajectory_from_csv(text)
