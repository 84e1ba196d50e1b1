"""Twin-critic deterministic policy gradient with multi-buffer replay.

Collection randomizes the weight split per episode (one replay buffer per
split value) and decays exploration noise on an episode-index schedule;
training samples one batch per buffer, regresses both critics on the
per-sample min-target, clips every gradient entry, and delays actor and
target updates. All randomness flows from one seeded generator, so equal
seeds give identical parameter trajectories.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import nets
from .env import ACT_DIM, OBS_DIM, InvertEnv
from .nets import Adam, Mlp
from .replay import MultiBuffer

CHECKPOINT_VERSION = 1


class InsufficientData(Exception):
    """Raised when some replay buffer holds fewer transitions than a batch."""


@dataclass(frozen=True)
class Td3Hyper:
    """Training constants; defaults follow the published configuration."""

    n_buffers: int = 10          # N
    episode_seconds: float = 30.0  # t_e
    n_episodes: int = 500        # N_e
    sigma: float = 0.15          # initial exploration std
    sigma_decay: float = 0.95    # xi
    sigma_interval: int = 100    # n_sigma, episodes between decays
    policy_delay: int = 2        # d_p
    gamma: float = 0.98
    polyak: float = 0.01         # target update rate
    clip_actor: float = 0.1      # c_a
    clip_critic: float = 0.1     # c_b
    lam_range: tuple[float, float] = (0.6, 1.0)
    psi0: float = 0.5            # yaw randomization half-range, rad
    batch_size: int = 32
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    capacity: int = 20000        # per buffer
    hidden: int = 256
    target_smoothing: float = 0.2  # target-action noise std, 0 disables
    updates_per_step: float = 1.0  # gradient steps per collected step

    def __post_init__(self) -> None:
        # JSON round trips deliver lists; normalize so equality is by value
        object.__setattr__(self, "lam_range", tuple(self.lam_range))
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.polyak <= 1.0:
            raise ValueError("polyak rate must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy delay must be >= 1")
        if self.sigma <= 0.0 or self.sigma_decay <= 0.0:
            raise ValueError("noise scale and decay must be positive")
        if self.clip_actor <= 0.0 or self.clip_critic <= 0.0:
            raise ValueError("clip bounds must be positive")
        if self.n_buffers < 1 or self.batch_size < 1 or self.capacity < 1:
            raise ValueError("buffer counts and sizes must be positive")
        if self.updates_per_step < 0.0:
            raise ValueError("updates_per_step must be nonnegative")

    def sigma_at(self, episode: int) -> float:
        """Exploration std for a 0-based episode index."""
        return self.sigma * self.sigma_decay ** (episode // self.sigma_interval)


@dataclass
class Td3Nets:
    actor: Mlp
    critic1: Mlp
    critic2: Mlp
    actor_t: Mlp
    critic1_t: Mlp
    critic2_t: Mlp

    def all_nets(self) -> list[Mlp]:
        return [
            self.actor, self.critic1, self.critic2,
            self.actor_t, self.critic1_t, self.critic2_t,
        ]


def init_td3_nets(
    rng: np.random.Generator,
    obs_dim: int = OBS_DIM,
    act_dim: int = ACT_DIM,
    hidden: int = 256,
    dtype=np.float32,
) -> Td3Nets:
    """Fresh actor/critic pair with targets starting as exact copies."""
    actor = nets.init_mlp(
        (obs_dim, hidden, hidden, act_dim), "tanh", rng,
        final_scale=1e-3, dtype=dtype,
    )
    critic1 = nets.init_mlp(
        (obs_dim + act_dim, hidden, hidden, 1), "linear", rng, dtype=dtype
    )
    critic2 = nets.init_mlp(
        (obs_dim + act_dim, hidden, hidden, 1), "linear", rng, dtype=dtype
    )
    return Td3Nets(
        actor, critic1, critic2,
        actor.copy(), critic1.copy(), critic2.copy(),
    )


@dataclass
class EpisodeStats:
    episode: int
    reward: float
    sigma: float
    lam: float
    psi: float
    steps: int
    sim_time_s: float


def collect_episode(
    env: InvertEnv,
    actor: Mlp,
    hyper: Td3Hyper,
    buffers: MultiBuffer,
    rng: np.random.Generator,
    episode_index: int,
    *,
    lam: float | None = None,
) -> EpisodeStats:
    """One exploration episode stored into the buffer under the cursor.

    The weight split defaults to the receiving buffer's own value, which
    keeps every buffer pure; passing lam explicitly supports the
    single-buffer ablation, where the split still cycles but storage is
    shared.
    """
    sigma = hyper.sigma_at(episode_index)
    buf = buffers.current
    if lam is None:
        lam = buf.lam
    psi = float(rng.uniform(-hyper.psi0, hyper.psi0))
    obs = env.reset(lam=lam, psi_init=psi).astype(np.float32)
    total = 0.0
    steps = 0
    while True:
        a = nets.forward(actor, obs)
        a = np.clip(
            a + rng.normal(0.0, sigma, size=a.shape), -1.0, 1.0
        ).astype(np.float32)
        res = env.step(a)
        obs_next = res.obs.astype(np.float32)
        buf.add(obs, a, res.reward, obs_next, 1.0 if res.terminated else 0.0)
        total += res.reward
        steps += 1
        obs = obs_next
        if res.terminated or res.truncated:
            break
    buffers.advance()
    return EpisodeStats(
        episode=episode_index,
        reward=total,
        sigma=sigma,
        lam=lam,
        psi=psi,
        steps=steps,
        sim_time_s=steps * env.model.params.dt,
    )


class Td3Trainer:
    """Owns networks, optimizers, buffers, and the update counter."""

    def __init__(
        self,
        hyper: Td3Hyper,
        rng: np.random.Generator,
        obs_dim: int = OBS_DIM,
        act_dim: int = ACT_DIM,
        n_buffers: int | None = None,
        capacity: int | None = None,
    ):
        self.hyper = hyper
        self.rng = rng
        self.nets = init_td3_nets(rng, obs_dim, act_dim, hyper.hidden)
        self.opt_actor = Adam(lr=hyper.lr_actor)
        self.opt_c1 = Adam(lr=hyper.lr_critic)
        self.opt_c2 = Adam(lr=hyper.lr_critic)
        self.buffers = MultiBuffer(
            n_buffers if n_buffers is not None else hyper.n_buffers,
            capacity if capacity is not None else hyper.capacity,
            hyper.lam_range,
            obs_dim,
            act_dim,
        )
        self.train_calls = 0
        self.episode = 0

    def train_step(self) -> tuple[float, float]:
        """One gradient step over one batch from every buffer.

        Returns the two critic losses. Raises InsufficientData when any
        buffer is smaller than the batch size.
        """
        h = self.hyper
        if self.buffers.min_size() < h.batch_size:
            raise InsufficientData(
                f"every buffer needs >= {h.batch_size} transitions"
            )
        s, a, r, s2, d = self.buffers.sample_all(self.rng, h.batch_size)

        a2 = nets.forward(self.nets.actor_t, s2)
        if h.target_smoothing > 0.0:
            noise = np.clip(
                self.rng.normal(0.0, h.target_smoothing, size=a2.shape),
                -0.5, 0.5,
            ).astype(a2.dtype)
            a2 = np.clip(a2 + noise, -1.0, 1.0)
        x2 = np.concatenate([s2, a2], axis=1)
        q1t = nets.forward(self.nets.critic1_t, x2).ravel()
        q2t = nets.forward(self.nets.critic2_t, x2).ravel()
        y = r + h.gamma * (1.0 - d) * np.minimum(q1t, q2t)

        x = np.concatenate([s, a], axis=1)
        loss1, g1 = nets.critic_mse_grads(self.nets.critic1, x, y)
        self.opt_c1.step(
            self.nets.critic1.params, nets.clip_gradients(g1, h.clip_critic)
        )
        loss2, g2 = nets.critic_mse_grads(self.nets.critic2, x, y)
        self.opt_c2.step(
            self.nets.critic2.params, nets.clip_gradients(g2, h.clip_critic)
        )

        self.train_calls += 1
        if self.train_calls % h.policy_delay == 0:
            _, ga = nets.actor_objective_grads(
                self.nets.actor, self.nets.critic1, s
            )
            self.opt_actor.step(
                self.nets.actor.params, nets.clip_gradients(ga, h.clip_actor)
            )
            soft_update_all(self.nets, h.polyak)
        return loss1, loss2

    def run_episode(self, env: InvertEnv, *, lam: float | None = None) -> EpisodeStats:
        """Collects one episode, then trains proportionally to its length."""
        stats = collect_episode(
            env, self.nets.actor, self.hyper, self.buffers, self.rng,
            self.episode, lam=lam,
        )
        self.episode += 1
        n_updates = int(round(stats.steps * self.hyper.updates_per_step))
        if self.buffers.min_size() >= self.hyper.batch_size:
            for _ in range(n_updates):
                self.train_step()
        return stats


def soft_update_all(tn: Td3Nets, rate: float) -> None:
    nets.soft_update(tn.actor_t, tn.actor, rate)
    nets.soft_update(tn.critic1_t, tn.critic1, rate)
    nets.soft_update(tn.critic2_t, tn.critic2, rate)


def policy_action(actor: Mlp, obs: np.ndarray) -> np.ndarray:
    """Deterministic policy output for a single observation."""
    return nets.forward(actor, np.asarray(obs, dtype=np.float32))


# --- checkpointing ---

_NET_KEYS = ("actor", "critic1", "critic2", "actor_t", "critic1_t", "critic2_t")


def _pack_net(prefix: str, net: Mlp, out: dict) -> None:
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        out[f"{prefix}_w{i}"] = w
        out[f"{prefix}_b{i}"] = b


def _unpack_net(prefix: str, data, output: str) -> Mlp:
    weights, biases = [], []
    i = 0
    while f"{prefix}_w{i}" in data:
        weights.append(data[f"{prefix}_w{i}"].copy())
        biases.append(data[f"{prefix}_b{i}"].copy())
        i += 1
    if not weights:
        raise ValueError(f"checkpoint is missing network '{prefix}'")
    return Mlp(weights, biases, output)


def _pack_adam(prefix: str, opt: Adam, out: dict) -> None:
    out[f"{prefix}_t"] = np.array(opt.t, dtype=np.int64)
    for i, (m, v) in enumerate(zip(opt.m, opt.v)):
        out[f"{prefix}_m{i}"] = m
        out[f"{prefix}_v{i}"] = v


def _unpack_adam(prefix: str, data, lr: float) -> Adam:
    opt = Adam(lr=lr)
    opt.t = int(data[f"{prefix}_t"])
    i = 0
    m, v = [], []
    while f"{prefix}_m{i}" in data:
        m.append(data[f"{prefix}_m{i}"].copy())
        v.append(data[f"{prefix}_v{i}"].copy())
        i += 1
    opt.m, opt.v = m, v
    return opt


def save_checkpoint(path, trainer: Td3Trainer) -> None:
    """Versioned dump of networks, optimizer state, hyper, and rng state."""
    arrays: dict = {
        "version": np.array(CHECKPOINT_VERSION, dtype=np.int64),
        "episode": np.array(trainer.episode, dtype=np.int64),
        "train_calls": np.array(trainer.train_calls, dtype=np.int64),
        "hyper_json": np.array(json.dumps(asdict(trainer.hyper))),
        "rng_json": np.array(json.dumps(trainer.rng.bit_generator.state)),
    }
    for key, net in zip(_NET_KEYS, trainer.nets.all_nets()):
        _pack_net(key, net, arrays)
    _pack_adam("opt_actor", trainer.opt_actor, arrays)
    _pack_adam("opt_c1", trainer.opt_c1, arrays)
    _pack_adam("opt_c2", trainer.opt_c2, arrays)
    np.savez(path, **arrays)


def load_actor(path) -> Mlp:
    """Loads just the policy network from a checkpoint."""
    with np.load(path, allow_pickle=False) as data:
        _check_version(data)
        return _unpack_net("actor", data, "tanh")


def _check_version(data) -> None:
    if "version" not in data:
        raise ValueError("not a recognized checkpoint file")
    version = int(data["version"])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")


def load_checkpoint(path, trainer: Td3Trainer) -> None:
    """Restores a trainer in place, including optimizer and rng state."""
    with np.load(path, allow_pickle=False) as data:
        _check_version(data)
        hyper = Td3Hyper(**json.loads(str(data["hyper_json"])))
        if hyper != trainer.hyper:
            raise ValueError("checkpoint hyperparameters differ from trainer's")
        outputs = ("tanh", "linear", "linear", "tanh", "linear", "linear")
        restored = [
            _unpack_net(key, data, out) for key, out in zip(_NET_KEYS, outputs)
        ]
        trainer.nets = Td3Nets(*restored)
        trainer.opt_actor = _unpack_adam("opt_actor", data, hyper.lr_actor)
        trainer.opt_c1 = _unpack_adam("opt_c1", data, hyper.lr_critic)
        trainer.opt_c2 = _unpack_adam("opt_c2", data, hyper.lr_critic)
        trainer.episode = int(data["episode"])
        trainer.train_calls = int(data["train_calls"])
        trainer.rng.bit_generator.state = json.loads(str(data["rng_json"]))
