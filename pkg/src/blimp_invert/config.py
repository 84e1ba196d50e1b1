"""Run configuration: YAML document -> validated dataclasses.

A config file is a mapping with optional sections; unknown keys anywhere
are rejected so typos fail loudly before any state is touched. The echo
written into each run directory is fully resolved: every default is
spelled out, so the file alone reproduces the run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .env import RewardParams
from .harness import ABLATION_VARIANTS, EvalGrid, SuccessCriterion
from .params import BlimpParams, load_params
from .td3 import Td3Hyper

_TRAIN_KEYS = {"eval_interval", "eval_lams", "checkpoint_interval"}
_GRID_KEYS = {"cells", "episodes", "seeds", "baseline", "base_seed", "psi0"}
_ABLATE_KEYS = {"variants", "seeds", "threshold", "window"}
_DEPLOY_KEYS = {"scenario_file", "psi_init"}
_ROLLOUT_KEYS = {
    "controller", "lam", "m_w", "g_m", "psi_init", "duration",
}
_TOP_KEYS = {
    "params_file", "reward", "hyper", "success", "seed", "out_dir",
    "workers", "train", "grid", "ablate", "deploy", "rollout",
}


@dataclass(frozen=True)
class RunConfig:
    params: BlimpParams
    params_file: str | None
    reward: RewardParams
    hyper: Td3Hyper
    criterion: SuccessCriterion
    seed: int | None
    out_dir: str | None
    workers: int
    train: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    ablate: dict = field(default_factory=dict)
    deploy: dict = field(default_factory=dict)
    rollout: dict = field(default_factory=dict)


def _section(doc: dict, name: str, allowed: set) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ValueError(f"section '{name}' must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ValueError(f"unknown keys in '{name}': {sorted(unknown)}")
    return dict(sec)


def _dataclass_section(doc: dict, name: str, cls):
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ValueError(f"section '{name}' must be a mapping")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(sec) - allowed
    if unknown:
        raise ValueError(f"unknown keys in '{name}': {sorted(unknown)}")
    for key in ("g_omega", "g_act", "lam_range", "eval_lams"):
        if key in sec and isinstance(sec[key], list):
            sec[key] = tuple(sec[key])
    return cls(**sec)


def config_from_dict(doc: dict) -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ValueError("config root must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    params_file = doc.get("params_file")
    if params_file is not None:
        if not Path(params_file).exists():
            raise ValueError(f"params_file does not exist: {params_file}")
        params = load_params(params_file)
    else:
        params = BlimpParams()
    deploy = _section(doc, "deploy", _DEPLOY_KEYS)
    scenario_file = deploy.get("scenario_file")
    if scenario_file is not None and not Path(scenario_file).exists():
        raise ValueError(f"scenario_file does not exist: {scenario_file}")
    seed = doc.get("seed")
    workers = int(doc.get("workers", 1))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return RunConfig(
        params=params,
        params_file=params_file,
        reward=_dataclass_section(doc, "reward", RewardParams),
        hyper=_dataclass_section(doc, "hyper", Td3Hyper),
        criterion=_dataclass_section(doc, "success", SuccessCriterion),
        seed=None if seed is None else int(seed),
        out_dir=doc.get("out_dir"),
        workers=workers,
        train=_section(doc, "train", _TRAIN_KEYS),
        grid=_section(doc, "grid", _GRID_KEYS),
        ablate=_section(doc, "ablate", _ABLATE_KEYS),
        deploy=deploy,
        rollout=_section(doc, "rollout", _ROLLOUT_KEYS),
    )


def load_config(path: str | Path) -> RunConfig:
    with open(path) as f:
        return config_from_dict(yaml.safe_load(f))


def validate_for(config: RunConfig, command: str) -> None:
    """Command-specific requirements checked before any work starts."""
    if command in ("train", "ablate") and config.seed is None:
        raise ValueError(f"'{command}' requires a seed")
    if command == "ablate":
        variants = config.ablate.get("variants", list(ABLATION_VARIANTS))
        bad = set(variants) - set(ABLATION_VARIANTS)
        if bad:
            raise ValueError(f"unknown ablation variants: {sorted(bad)}")
    if command == "rollout":
        controller = config.rollout.get("controller", "policy")
        if controller not in ("policy", "baseline"):
            raise ValueError(f"unknown rollout controller: {controller}")


def build_grid(config: RunConfig) -> EvalGrid:
    from .harness import default_grid_cells

    sec = config.grid
    cells = sec.get("cells")
    if cells is None:
        cells = default_grid_cells(config.params)
    else:
        cells = tuple(tuple(float(v) for v in c) for c in cells)
    return EvalGrid(
        cells=cells,
        episodes=int(sec.get("episodes", 1)),
        seeds=int(sec.get("seeds", 3)),
    )


def config_echo(config: RunConfig) -> dict:
    """Fully-resolved config document (defaults included) for the run dir."""
    from .params import params_to_dict

    return {
        "params_file": config.params_file,
        "params": params_to_dict(config.params),
        "reward": dataclasses.asdict(config.reward),
        "hyper": dataclasses.asdict(config.hyper),
        "success": dataclasses.asdict(config.criterion),
        "seed": config.seed,
        "out_dir": config.out_dir,
        "workers": config.workers,
        "train": config.train,
        "grid": config.grid,
        "ablate": config.ablate,
        "deploy": config.deploy,
        "rollout": config.rollout,
    }
