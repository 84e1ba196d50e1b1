"""CSV schema contracts shared with the run harness.

The column tuples below restate the harness's documented CSV layouts;
they are declared here independently so this package never imports the
simulator side. A mismatch between a file's header and its contract
aborts rendering with a column-level message.
"""

from __future__ import annotations

import csv
from pathlib import Path

TRAINING_COLUMNS = (
    "episode",
    "reward",
    "sigma",
    "lam",
    "psi",
    "steps",
    "sim_time_s",
)

ROLLOUT_COLUMNS = (
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

GRID_MATRIX_COLUMNS = (
    "m_w",
    "lam",
    "g_m",
    "controller",
    "trials",
    "wins",
    "success",
    "mean_time_to_inversion",
)

COLUMNS_BY_KIND = {
    "reward-curve": TRAINING_COLUMNS,
    "roll-trace": ROLLOUT_COLUMNS,
    "grid-heatmap": GRID_MATRIX_COLUMNS,
}


class SchemaError(ValueError):
    """Raised when a CSV header does not match its documented contract."""


def read_table(path: str | Path, expected: tuple[str, ...]) -> dict[str, list]:
    """Reads one CSV after validating its header against the contract.

    Returns columns as lists with numeric cells parsed to float. The
    header must carry exactly the expected columns (any order); missing
    and unexpected columns are both reported by name.
    """
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = tuple(reader.fieldnames or ())
        _check_header(path, header, expected)
        cols: dict[str, list] = {k: [] for k in header}
        for row in reader:
            for key, value in row.items():
                try:
                    cols[key].append(float(value))
                except (TypeError, ValueError):
                    cols[key].append(value)
    return cols


def _check_header(
    path: Path, header: tuple[str, ...], expected: tuple[str, ...]
) -> None:
    missing = [c for c in expected if c not in header]
    unexpected = [c for c in header if c not in expected]
    if not missing and not unexpected:
        return
    parts = []
    if missing:
        parts.append(f"missing columns: {', '.join(missing)}")
    if unexpected:
        parts.append(f"unexpected columns: {', '.join(unexpected)}")
    raise SchemaError(f"{path}: {'; '.join(parts)}")
