"""CSV emission: schemas, 9-significant-digit floats, round trips."""

import math

import numpy as np

from blimp_invert.env import InvertEnv
from blimp_invert.logs import (
    ROLLOUT_FIELDS,
    TRAINING_FIELDS,
    append_training_row,
    fmt,
    read_csv,
    row_from_step,
    write_rollout_csv,
    write_summary,
    write_training_csv,
)
from blimp_invert.params import BlimpParams


def test_float_cells_carry_nine_significant_digits():
    assert fmt(math.pi) == "3.14159265"
    assert fmt(1.0 / 3.0) == "0.333333333"
    assert fmt(123456789012.0) == "1.23456789e+11"
    assert fmt(-0.000123456789123) == "-0.000123456789"
    assert fmt(2.0) == "2"


def test_bool_and_int_cells():
    assert fmt(True) == "1"
    assert fmt(False) == "0"
    assert fmt(np.bool_(True)) == "1"
    assert fmt(7) == "7"
    assert fmt(np.int64(7)) == "7"
    assert fmt("baseline") == "baseline"


def test_rollout_schema_and_round_trip(tmp_path):
    env = InvertEnv(BlimpParams())
    env.reset(psi_init=0.2)
    rows = []
    rng = np.random.default_rng(0)
    for _ in range(25):
        a = rng.uniform(-1.0, 1.0, 3)
        res = env.step(a)
        rows.append(row_from_step(env, a, res))
    path = tmp_path / "rollout.csv"
    write_rollout_csv(path, rows)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(ROLLOUT_FIELDS)
    cols = read_csv(path)
    assert list(cols) == list(ROLLOUT_FIELDS)
    assert len(cols["t"]) == 25
    # time stamps step by the control period
    assert cols["t"][0] == 0.02
    assert np.allclose(np.diff(cols["t"]), 0.02)
    # values survive the 9-digit format to within format precision
    assert cols["phi"][10] == float(fmt(rows[10]["phi"]))


def test_training_log_round_trip(tmp_path):
    rows = [
        {
            "episode": i,
            "reward": 10.0 * i + 1.0 / 3.0,
            "sigma": 0.15,
            "lam": 0.6 + 0.04 * i,
            "psi": -0.3 + 0.01 * i,
            "steps": 1500,
            "sim_time_s": 30.0,
        }
        for i in range(5)
    ]
    path = tmp_path / "train_log.csv"
    write_training_csv(path, rows)
    cols = read_csv(path)
    assert list(cols) == list(TRAINING_FIELDS)
    assert cols["episode"] == [0.0, 1.0, 2.0, 3.0, 4.0]
    assert cols["reward"][3] == float(fmt(rows[3]["reward"]))


def test_streaming_writer_matches_batch_writer(tmp_path):
    rows = [
        {
            "episode": i,
            "reward": float(i),
            "sigma": 0.15,
            "lam": 1.0,
            "psi": 0.0,
            "steps": 100,
            "sim_time_s": 2.0,
        }
        for i in range(3)
    ]
    batch = tmp_path / "batch.csv"
    stream = tmp_path / "stream.csv"
    write_training_csv(batch, rows)
    for i, row in enumerate(rows):
        append_training_row(stream, row, header=(i == 0))
    assert batch.read_bytes() == stream.read_bytes()


def test_summary_serializes_numpy_scalars(tmp_path):
    import yaml

    doc = {
        "seed": np.int64(3),
        "success": np.bool_(True),
        "tti": np.float64(12.5),
        "cells": [np.float32(0.5), 1.0],
        "nested": {"arr": np.arange(3)},
    }
    path = tmp_path / "summary.yaml"
    write_summary(path, doc)
    back = yaml.safe_load(path.read_text())
    assert back["seed"] == 3
    assert back["success"] is True
    assert back["tti"] == 12.5
    assert back["nested"]["arr"] == [0, 1, 2]
