"""Run orchestration: success scoring, eval grids, training, ablations.

Everything here is deterministic given (config, seed): eval rollouts use
their own seeded reset draws, evaluation probes never consume trainer
rng, and grid rows are emitted in sorted cell order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import so3
from .baseline import BaselineController, EnergyShapingGains
from .dynamics import build_model
from .env import InvertEnv
from .nets import Mlp, forward
from .params import BlimpParams
from .td3 import Td3Hyper, Td3Trainer, save_checkpoint


@dataclass(frozen=True)
class SuccessCriterion:
    """Inversion-hold thresholds applied to a rollout trace."""

    dphi_tol: float = 0.2
    theta_tol: float = 0.3
    window_s: float = 5.0
    horizon_s: float = 30.0

    def __post_init__(self) -> None:
        if self.dphi_tol <= 0.0 or self.theta_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.window_s <= self.horizon_s:
            raise ValueError("hold window must lie within the horizon")


def success(rows: list[dict], crit: SuccessCriterion) -> tuple[bool, float | None]:
    """Hold-based success flag and time-to-inversion for a full trace.

    Success requires dphi < dphi_tol and |theta| < theta_tol on every row
    of the final hold window. Time-to-inversion is the instant after
    which the hold condition stays satisfied to the end of the trace
    (0.0 for a trace that satisfies it throughout), None on failure.
    """
    if not rows:
        return False, None
    ok = [
        (math.pi - abs(r["phi"])) < crit.dphi_tol
        and abs(r["theta"]) < crit.theta_tol
        for r in rows
    ]
    t_end = rows[-1]["t"]
    window_start = t_end - crit.window_s
    in_window = [r["t"] > window_start for r in rows]
    if not all(o for o, w in zip(ok, in_window) if w):
        return False, None
    first = len(rows)
    while first > 0 and ok[first - 1]:
        first -= 1
    dt = rows[0]["t"]
    return True, rows[first]["t"] - dt


def trace_covers(rows: list[dict], horizon_s: float, dt: float) -> bool:
    """True when the trace reaches the horizon (no early termination)."""
    return bool(rows) and rows[-1]["t"] >= horizon_s - dt / 2


def rollout_policy(
    actor: Mlp,
    params: BlimpParams,
    duration: float = 30.0,
    psi_init: float = 0.0,
    lam: float | None = None,
    m_w: float | None = None,
    g_m: float | None = None,
    reward_params=None,
) -> list[dict]:
    """Deterministic policy rollout returning per-step log rows."""
    from .logs import row_from_step

    env = InvertEnv(params, reward_params, episode_seconds=duration)
    obs = env.reset(lam=lam, psi_init=psi_init, m_w=m_w, g_m=g_m)
    rows = []
    while True:
        action = forward(actor, obs)
        res = env.step(action)
        obs = res.obs
        rows.append(row_from_step(env, action, res))
        if res.terminated or res.truncated:
            return rows


def rollout_baseline(
    gains: EnergyShapingGains,
    params: BlimpParams,
    duration: float = 30.0,
    psi_init: float = 0.0,
    lam: float | None = None,
    m_w: float | None = None,
    g_m: float | None = None,
    reward_params=None,
) -> list[dict]:
    """Baseline controller rollout; gains stay tuned to the base params."""
    from .logs import row_from_step

    env = InvertEnv(params, reward_params, episode_seconds=duration)
    env.reset(lam=lam, psi_init=psi_init, m_w=m_w, g_m=g_m)
    controller = BaselineController(gains, build_model(params))
    rows = []
    while True:
        action = controller.action(env.state)
        res = env.step(action)
        rows.append(row_from_step(env, action, res))
        if res.terminated or res.truncated:
            return rows


@dataclass(frozen=True)
class EvalGrid:
    """Sweep cells (m_w, lam, g_m) with per-cell trial counts."""

    cells: tuple = ()
    episodes: int = 1
    seeds: int = 3

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("grid needs at least one cell")
        if self.episodes < 1 or self.seeds < 1:
            raise ValueError("episodes and seeds must be >= 1")
        for cell in self.cells:
            m_w, lam, g_m = cell
            if m_w <= 0.0 or not 0.0 <= lam <= 1.0 or g_m <= 0.0:
                raise ValueError(f"cell outside simulator-valid range: {cell}")


def default_grid_cells(params: BlimpParams) -> tuple:
    """Tables III-V sweep: m_w row, lambda row, gain row (sorted, unique)."""
    cells = set()
    for m_w in (0.005, 0.010, 0.015, 0.020, 0.025):
        cells.add((m_w, params.lam, params.g_m))
    for lam in (0.6, 0.7, 0.8, 0.9, 1.0):
        cells.add((params.m_w, lam, params.g_m))
    for g_m in (0.5, 1.5, 2.0, 2.5):
        cells.add((params.m_w, params.lam, g_m))
    cells.add((params.m_w, params.lam, params.g_m))
    return tuple(sorted(cells))


def run_grid(
    grid: EvalGrid,
    params: BlimpParams,
    crit: SuccessCriterion,
    actor: Mlp | None = None,
    baseline: EnergyShapingGains | None = None,
    base_seed: int = 0,
    psi0: float = 0.5,
    reward_params=None,
) -> list[dict]:
    """Trial-level grid results; one row per cell x controller x seed x episode.

    Each trial draws its initial yaw from a dedicated per-(cell, seed,
    episode) generator, identical across controllers so comparisons share
    starts; a cell's verdict is the majority vote over its trials. With
    psi0 = 0 every trial starts from the same hanging pose and the vote
    degenerates to a single deterministic rollout.
    """
    controllers = []
    if actor is not None:
        controllers.append(("policy", lambda p, y, c: rollout_policy(
            actor, p, crit.horizon_s, y, lam=c[1], m_w=c[0], g_m=c[2],
            reward_params=reward_params)))
    if baseline is not None:
        controllers.append(("baseline", lambda p, y, c: rollout_baseline(
            baseline, p, crit.horizon_s, y, lam=c[1], m_w=c[0], g_m=c[2],
            reward_params=reward_params)))
    if not controllers:
        raise ValueError("need at least one controller to evaluate")
    dt = params.dt
    out = []
    for cell in sorted(grid.cells):
        for seed in range(grid.seeds):
            for episode in range(grid.episodes):
                rng = np.random.default_rng((
                    base_seed,
                    int(round(cell[0] * 1e6)),
                    int(round(cell[1] * 1e3)),
                    int(round(cell[2] * 1e3)),
                    seed,
                    episode,
                ))
                psi_init = float(rng.uniform(-psi0, psi0))
                for name, run in controllers:
                    rows = run(params, psi_init, cell)
                    if trace_covers(rows, crit.horizon_s, dt):
                        ok, tti = success(rows, crit)
                    else:
                        ok, tti = False, None
                    final_dphi = math.pi - abs(rows[-1]["phi"])
                    out.append({
                        "m_w": cell[0],
                        "lam": cell[1],
                        "g_m": cell[2],
                        "controller": name,
                        "seed": seed,
                        "episode": episode,
                        "psi_init": psi_init,
                        "success": ok,
                        "time_to_inversion": float("nan") if tti is None else tti,
                        "final_dphi": final_dphi,
                    })
    return out


def grid_matrix(trials: list[dict]) -> list[dict]:
    """Majority-vote matrix: one row per cell x controller."""
    keys = sorted({(r["m_w"], r["lam"], r["g_m"], r["controller"]) for r in trials})
    out = []
    for m_w, lam, g_m, controller in keys:
        votes = [
            r for r in trials
            if (r["m_w"], r["lam"], r["g_m"], r["controller"])
            == (m_w, lam, g_m, controller)
        ]
        wins = sum(1 for r in votes if r["success"])
        ttis = [
            r["time_to_inversion"] for r in votes
            if r["success"] and not math.isnan(r["time_to_inversion"])
        ]
        out.append({
            "m_w": m_w,
            "lam": lam,
            "g_m": g_m,
            "controller": controller,
            "trials": len(votes),
            "wins": wins,
            "success": wins * 2 > len(votes),
            "mean_time_to_inversion":
                sum(ttis) / len(ttis) if ttis else float("nan"),
        })
    return out


GRID_TRIAL_FIELDS = (
    "m_w", "lam", "g_m", "controller", "seed", "episode", "psi_init",
    "success", "time_to_inversion", "final_dphi",
)
GRID_MATRIX_FIELDS = (
    "m_w", "lam", "g_m", "controller", "trials", "wins", "success",
    "mean_time_to_inversion",
)


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean with growing head: out[i] = mean(x[max(0,i-w+1)..i])."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(values, dtype=float)
    if window == 1:
        return x.copy()
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(len(x))
    lo = np.maximum(idx - window + 1, 0)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def episodes_to_convergence(
    returns, threshold: float, window: int = 19
) -> int | None:
    """First episode whose full-window trailing mean exceeds threshold."""
    x = np.asarray(returns, dtype=float)
    if len(x) < window:
        return None
    ma = moving_average(x, window)
    for i in range(window - 1, len(x)):
        if ma[i] > threshold:
            return i
    return None


@dataclass
class TrainProgress:
    """Per-episode record plus optional nominal/off-nominal probe result."""

    stats: object
    probe_dphi: dict[float, float] | None = None
    probe_success: bool = False


def train_run(
    hyper: Td3Hyper,
    params: BlimpParams,
    seed: int,
    out_dir: str | Path,
    crit: SuccessCriterion | None = None,
    eval_interval: int = 5,
    eval_lams: tuple = (0.6, 0.8, 1.0),
    checkpoint_interval: int = 100,
    on_episode=None,
    reward_params=None,
) -> dict:
    """Full training run with periodic probes and checkpoint artifacts.

    Writes train_log.csv (streamed), checkpoint_latest/best/final, and
    returns a summary dict. The probe evaluates the deterministic policy
    at psi=0 for each lambda in eval_lams; the best checkpoint maximizes
    (number of probe cells passing, negative sum of tail errors). Probes
    run on a separate env and never touch trainer rng, so the training
    log is byte-identical across reruns of the same seed.
    """
    from .logs import append_training_row, training_row

    crit = crit or SuccessCriterion(horizon_s=hyper.episode_seconds)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    trainer = Td3Trainer(hyper, rng)
    env = InvertEnv(params, reward_params, episode_seconds=hyper.episode_seconds)
    probe_env = InvertEnv(params, reward_params, episode_seconds=hyper.episode_seconds)
    hold = max(1, int(round(crit.window_s / params.dt)))

    def probe(lam: float) -> float:
        obs = probe_env.reset(lam=lam, psi_init=0.0)
        dphi = []
        while True:
            res = probe_env.step(forward(trainer.nets.actor, obs))
            obs = res.obs
            phi, theta, _ = so3.euler_from_rotation(probe_env.state.rot)
            bad = abs(theta) >= crit.theta_tol
            dphi.append(math.pi + 1.0 if bad else math.pi - abs(phi))
            if res.terminated:
                return math.pi + 1.0
            if res.truncated:
                return max(dphi[-hold:])

    log_path = out / "train_log.csv"
    best_score = None
    first_success = None
    for episode in range(hyper.n_episodes):
        stats = trainer.run_episode(env)
        append_training_row(log_path, training_row(stats), header=episode == 0)
        progress = TrainProgress(stats=stats)
        if (episode + 1) % eval_interval == 0 or episode == hyper.n_episodes - 1:
            tails = {lam: probe(lam) for lam in eval_lams}
            passing = sum(1 for v in tails.values() if v < crit.dphi_tol)
            score = (passing, -sum(tails.values()))
            if best_score is None or score > best_score:
                best_score = score
                save_checkpoint(out / "checkpoint_best.npz", trainer)
            nominal = tails.get(params.lam)
            if nominal is not None and nominal < crit.dphi_tol:
                if first_success is None:
                    first_success = episode
                    save_checkpoint(out / "checkpoint_first_success.npz", trainer)
            progress.probe_dphi = tails
            progress.probe_success = (
                nominal is not None and nominal < crit.dphi_tol
            )
        if (episode + 1) % checkpoint_interval == 0:
            save_checkpoint(out / "checkpoint_latest.npz", trainer)
        if on_episode is not None:
            on_episode(progress)
    save_checkpoint(out / "checkpoint_final.npz", trainer)
    return {
        "episodes": hyper.n_episodes,
        "seed": seed,
        "first_success_episode": first_success,
        "best_probe_score": None if best_score is None else list(best_score),
        "train_log": str(log_path),
    }


ABLATION_VARIANTS = ("full", "no_clip", "single")


def ablation_hyper(base: Td3Hyper, variant: str) -> Td3Hyper:
    """Hyperparameters for one ablation arm.

    full: the shipped method. no_clip: gradient clipping disabled (bounds
    set to infinity). single: one shared buffer with capacity scaled by
    the buffer count the full method would have used; episodes still
    cycle the same lambda grid, so only the storage structure changes.
    """
    import dataclasses

    if variant == "full":
        return base
    if variant == "no_clip":
        return dataclasses.replace(
            base, clip_actor=math.inf, clip_critic=math.inf
        )
    if variant == "single":
        return dataclasses.replace(
            base,
            n_buffers=1,
            capacity=base.capacity * base.n_buffers,
        )
    raise ValueError(f"unknown ablation variant: {variant}")


def ablation_lams(base: Td3Hyper) -> list[float]:
    """Lambda cycle for the single-buffer arm (same grid as the full one)."""
    lo, hi = base.lam_range
    n = base.n_buffers
    if n == 1:
        return [hi]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def ablation_run(
    base: Td3Hyper,
    variant: str,
    params: BlimpParams,
    seed: int,
    out_dir: str | Path,
    threshold: float,
    window: int = 19,
    reward_params=None,
) -> dict:
    """Trains one ablation arm and reports episodes-to-convergence."""
    from .logs import append_training_row, training_row

    hyper = ablation_hyper(base, variant)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    trainer = Td3Trainer(hyper, rng)
    env = InvertEnv(params, reward_params, episode_seconds=hyper.episode_seconds)
    lams = ablation_lams(base)
    log_path = out / "train_log.csv"
    returns = []
    for episode in range(hyper.n_episodes):
        lam = lams[episode % len(lams)] if variant == "single" else None
        stats = trainer.run_episode(env, lam=lam)
        returns.append(stats.reward)
        append_training_row(log_path, training_row(stats), header=episode == 0)
    save_checkpoint(out / "checkpoint_final.npz", trainer)
    conv = episodes_to_convergence(returns, threshold, window)
    return {
        "variant": variant,
        "seed": seed,
        "episodes": hyper.n_episodes,
        "threshold": threshold,
        "window": window,
        "episodes_to_convergence": conv,
        "train_log": str(log_path),
    }
