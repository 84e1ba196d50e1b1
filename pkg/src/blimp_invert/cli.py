"""Command-line harness: train, eval-grid, ablate, deploy, rollout.

Each run writes into one output directory: a fully-resolved config echo,
CSV logs, checkpoints, and a YAML summary. Commands validate their
inputs before touching the filesystem and exit nonzero on any failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .baseline import EnergyShapingGains
from .config import (
    RunConfig,
    build_grid,
    config_echo,
    config_from_dict,
    load_config,
    validate_for,
)
from .deploy import default_scenario, deploy_rollout, load_scenario
from .harness import (
    ABLATION_VARIANTS,
    GRID_MATRIX_FIELDS,
    GRID_TRIAL_FIELDS,
    ablation_run,
    grid_matrix,
    rollout_baseline,
    rollout_policy,
    run_grid,
    success,
    trace_covers,
    train_run,
)
from .logs import write_rollout_csv, write_summary, write_table
from .td3 import load_actor


def _prepare_out(config: RunConfig) -> Path:
    if config.out_dir is None:
        raise ValueError("an output directory is required (--out or out_dir)")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(config: RunConfig, out: Path) -> None:
    write_summary(out / "config.yaml", config_echo(config))


def cmd_train(config: RunConfig) -> int:
    out = _prepare_out(config)
    _echo_config(config, out)
    train = config.train
    summary = train_run(
        config.hyper,
        config.params,
        config.seed,
        out,
        crit=config.criterion,
        eval_interval=int(train.get("eval_interval", 5)),
        eval_lams=tuple(train.get("eval_lams", (0.6, 0.8, 1.0))),
        checkpoint_interval=int(train.get("checkpoint_interval", 100)),
        reward_params=config.reward,
    )
    write_summary(out / "summary.yaml", summary)
    return 0


def _grid_cell_worker(task) -> list[dict]:
    config, cell, checkpoint, with_baseline = task
    from .harness import EvalGrid

    grid = build_grid(config)
    one = EvalGrid(cells=(cell,), episodes=grid.episodes, seeds=grid.seeds)
    actor = load_actor(checkpoint)
    baseline = EnergyShapingGains() if with_baseline else None
    return run_grid(
        one,
        config.params,
        config.criterion,
        actor=actor,
        baseline=baseline,
        base_seed=int(config.grid.get("base_seed", 0)),
        psi0=float(config.grid.get("psi0", 0.5)),
        reward_params=config.reward,
    )


def cmd_eval_grid(config: RunConfig, checkpoint: str) -> int:
    out = _prepare_out(config)
    _echo_config(config, out)
    grid = build_grid(config)
    with_baseline = bool(config.grid.get("baseline", True))
    tasks = [(config, cell, checkpoint, with_baseline) for cell in grid.cells]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_grid_cell_worker, tasks))
    else:
        chunks = [_grid_cell_worker(t) for t in tasks]
    trials = [row for chunk in chunks for row in chunk]
    trials.sort(key=lambda r: (r["m_w"], r["lam"], r["g_m"],
                               r["controller"], r["seed"], r["episode"]))
    matrix = grid_matrix(trials)
    write_table(out / "grid_trials.csv", GRID_TRIAL_FIELDS, trials)
    write_table(out / "grid_matrix.csv", GRID_MATRIX_FIELDS, matrix)
    write_summary(out / "summary.yaml", {
        "cells": len(grid.cells),
        "rows": len(trials),
        "checkpoint": str(checkpoint),
        "policy_wins": sum(
            1 for r in matrix if r["controller"] == "policy" and r["success"]
        ),
        "baseline_wins": sum(
            1 for r in matrix if r["controller"] == "baseline" and r["success"]
        ),
    })
    return 0


def _ablation_worker(task) -> dict:
    config, variant, seed, out_dir, threshold, window = task
    return ablation_run(
        config.hyper,
        variant,
        config.params,
        seed,
        out_dir,
        threshold,
        window,
        reward_params=config.reward,
    )


def cmd_ablate(config: RunConfig) -> int:
    out = _prepare_out(config)
    _echo_config(config, out)
    sec = config.ablate
    variants = list(sec.get("variants", ABLATION_VARIANTS))
    seeds = [int(s) for s in sec.get("seeds", [config.seed + i for i in range(3)])]
    threshold = float(sec.get("threshold", 50.0))
    window = int(sec.get("window", 19))
    tasks = [
        (config, variant, seed, out / variant / f"seed_{seed}", threshold, window)
        for variant in variants
        for seed in seeds
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_ablation_worker, tasks))
    else:
        results = [_ablation_worker(t) for t in tasks]
    by_variant = {}
    for res in results:
        by_variant.setdefault(res["variant"], []).append(res)
    medians = {}
    for variant, runs in by_variant.items():
        convs = [
            r["episodes_to_convergence"] for r in runs
            if r["episodes_to_convergence"] is not None
        ]
        # A run that never crosses the threshold counts as the full budget.
        budget = runs[0]["episodes"]
        convs += [budget] * (len(runs) - len(convs))
        medians[variant] = statistics.median(convs)
    write_summary(out / "summary.yaml", {
        "threshold": threshold,
        "window": window,
        "seeds": seeds,
        "runs": results,
        "median_episodes_to_convergence": medians,
    })
    return 0


def cmd_deploy(config: RunConfig, checkpoint: str) -> int:
    out = _prepare_out(config)
    _echo_config(config, out)
    scenario_file = config.deploy.get("scenario_file")
    scenario = (
        load_scenario(scenario_file) if scenario_file else default_scenario()
    )
    actor = load_actor(checkpoint)
    result = deploy_rollout(
        actor, scenario, psi_init=float(config.deploy.get("psi_init", 0.0))
    )
    write_rollout_csv(out / "rollout.csv", result.rows)
    crit = config.criterion
    covered = trace_covers(result.rows, scenario.duration,
                           scenario.sim_params.dt)
    ok, tti = success(result.rows, crit) if covered else (False, None)
    write_summary(out / "summary.yaml", {
        "success": ok,
        "time_to_inversion": tti,
        "handover_time": result.handover_time,
        "terminated": result.terminated,
        "checkpoint": str(checkpoint),
    })
    return 0


def cmd_rollout(config: RunConfig, checkpoint: str | None) -> int:
    out = _prepare_out(config)
    _echo_config(config, out)
    sec = config.rollout
    controller = sec.get("controller", "policy")
    kwargs = {
        "duration": float(sec.get("duration", config.criterion.horizon_s)),
        "psi_init": float(sec.get("psi_init", 0.0)),
        "lam": sec.get("lam"),
        "m_w": sec.get("m_w"),
        "g_m": sec.get("g_m"),
        "reward_params": config.reward,
    }
    if controller == "policy":
        if checkpoint is None:
            raise ValueError("rollout with the policy requires --checkpoint")
        rows = rollout_policy(load_actor(checkpoint), config.params, **kwargs)
    else:
        rows = rollout_baseline(EnergyShapingGains(), config.params, **kwargs)
    write_rollout_csv(out / "rollout.csv", rows)
    ok, tti = success(rows, config.criterion)
    write_summary(out / "summary.yaml", {
        "controller": controller,
        "success": ok,
        "time_to_inversion": tti,
        "steps": len(rows),
    })
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blimp-invert",
        description="Training and evaluation harness for the inversion task.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "eval-grid", "ablate", "deploy", "rollout"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML run config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--checkpoint", default=None)
        p.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        config = (
            load_config(args.config) if args.config else config_from_dict({})
        )
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.workers is not None:
            if args.workers < 1:
                raise ValueError("workers must be >= 1")
            overrides["workers"] = args.workers
        if overrides:
            config = dataclasses.replace(config, **overrides)
        validate_for(config, args.command)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "eval-grid":
            if args.checkpoint is None:
                raise ValueError("eval-grid requires --checkpoint")
            return cmd_eval_grid(config, args.checkpoint)
        if args.command == "ablate":
            return cmd_ablate(config)
        if args.command == "deploy":
            if args.checkpoint is None:
                raise ValueError("deploy requires --checkpoint")
            return cmd_deploy(config, args.checkpoint)
        return cmd_rollout(config, args.checkpoint)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
