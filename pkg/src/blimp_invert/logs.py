"""CSV and summary artifact serialization for the run harness.

All floats are written with 9 significant digits; booleans as 0/1. The
two schemas here (per-step rollout rows and per-episode training rows)
are the only files the plotting side consumes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from . import so3
from .td3 import EpisodeStats

ROLLOUT_FIELDS = (
    "t",
    "phi",
    "theta",
    "psi",
    "omega_x",
    "omega_y",
    "omega_z",
    "a_1",
    "a_2",
    "a_3",
    "eta_1",
    "eta_2",
    "eta_3",
    "eta_4",
    "reward",
    "terminated",
    "truncated",
)

TRAINING_FIELDS = (
    "episode",
    "reward",
    "sigma",
    "lam",
    "psi",
    "steps",
    "sim_time_s",
)


def fmt(value) -> str:
    """One CSV cell: 9 significant digits for floats, plain otherwise."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".9g")


def row_from_step(env, action, res) -> dict:
    """Rollout row for the step that just ran (post-integration state)."""
    phi, theta, psi = so3.euler_from_rotation(env.state.rot)
    omega = env.state.omega
    eta = env.last_eta
    return {
        "t": env.time,
        "phi": phi,
        "theta": theta,
        "psi": psi,
        "omega_x": omega[0],
        "omega_y": omega[1],
        "omega_z": omega[2],
        "a_1": action[0],
        "a_2": action[1],
        "a_3": action[2],
        "eta_1": eta[0],
        "eta_2": eta[1],
        "eta_3": eta[2],
        "eta_4": eta[3],
        "reward": res.reward,
        "terminated": res.terminated,
        "truncated": res.truncated,
    }


def write_rollout_csv(path: str | Path, rows: list[dict]) -> None:
    _write_csv(path, ROLLOUT_FIELDS, rows)


def training_row(stats: EpisodeStats) -> dict:
    return {
        "episode": stats.episode,
        "reward": stats.reward,
        "sigma": stats.sigma,
        "lam": stats.lam,
        "psi": stats.psi,
        "steps": stats.steps,
        "sim_time_s": stats.sim_time_s,
    }


def write_training_csv(path: str | Path, rows: list[dict]) -> None:
    _write_csv(path, TRAINING_FIELDS, rows)


def write_table(path: str | Path, fields: tuple, rows: list[dict]) -> None:
    """Generic CSV emission: named columns, formatted cells."""
    _write_csv(path, fields, rows)


def _write_csv(path: str | Path, fields: tuple, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([fmt(row[k]) for k in fields])


def append_training_row(path: str | Path, row: dict, header: bool) -> None:
    """Streaming variant used by the train loop; header once, then rows."""
    mode = "w" if header else "a"
    with open(path, mode, newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header:
            writer.writerow(TRAINING_FIELDS)
        writer.writerow([fmt(row[k]) for k in TRAINING_FIELDS])


def read_csv(path: str | Path) -> dict[str, list]:
    """Columns as lists; numeric cells parsed to float, blanks skipped."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        cols: dict[str, list] = {k: [] for k in reader.fieldnames or ()}
        for row in reader:
            for k, v in row.items():
                if v == "":
                    continue
                try:
                    cols[k].append(float(v))
                except ValueError:
                    cols[k].append(v)
    return cols


def write_summary(path: str | Path, doc: dict) -> None:
    """Machine-readable run summary (YAML mapping, stable key order)."""
    with open(path, "w") as f:
        yaml.safe_dump(_plain(doc), f, sort_keys=False)


def _plain(value):
    """Recursively converts numpy scalars/arrays for clean YAML output."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    return value
