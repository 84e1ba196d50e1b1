import csv
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def golden_training() -> Path:
    return DATA / "train_log_golden.csv"


@pytest.fixture
def golden_rollout() -> Path:
    return DATA / "rollout_golden.csv"


@pytest.fixture
def golden_grid() -> Path:
    return DATA / "grid_matrix_golden.csv"


def write_csv(path: Path, fields, rows) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([row[k] for k in fields])
    return path
