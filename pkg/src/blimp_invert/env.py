"""Episodic environment for learning inverted flight.

The agent observes the flattened body-to-world rotation plus the body
rates, commands desired torques through the saturating allocation layer,
and is rewarded for holding the envelope-down pose R_d = diag(1, -1, -1)
with small rates and small actions. Episodes start upright (optionally
yawed), run on the physics step, and end either by leaving the flight
volume / rate range (terminated, used as the bootstrap mask) or by the
episode clock (truncated, which the critic bootstraps across).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import actuation, dynamics, so3
from .dynamics import BlimpModel, BodyState
from .params import BlimpParams

INVERTED = np.diag([1.0, -1.0, -1.0])

OBS_DIM = 12
ACT_DIM = 3


@dataclass(frozen=True)
class RewardParams:
    """Gains of the shaped inversion reward.

    g_phi/g_theta/g_psi weight the per-axis attitude errors inside the
    exponential term, g_omega and g_act price rates and torques, zeta is
    the precision-bonus cone half-angle, g_n caps the weighted error sum,
    and omega_max normalizes the rate penalty.
    """

    g_omega: tuple[float, float, float] = (0.01, 0.01, 0.01)
    g_act: tuple[float, float, float] = (0.001, 0.001, 0.001)
    g_phi: float = 5.0
    g_theta: float = 5.0
    g_psi: float = 0.5
    zeta: float = 0.1
    g_n: float = 10.0
    omega_max: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if min(self.g_omega) < 0.0 or min(self.g_act) < 0.0:
            raise ValueError("rate and action gains must be nonnegative")
        if min(self.g_phi, self.g_theta, self.g_psi) < 0.0:
            raise ValueError("attitude gains must be nonnegative")
        if not 0.0 < self.zeta < math.pi:
            raise ValueError("zeta must lie in (0, pi)")
        if self.g_n <= 0.0:
            raise ValueError("g_n must be positive")
        if self.omega_max <= 0.0:
            raise ValueError("omega_max must be positive")


@dataclass(frozen=True)
class StepResult:
    obs: np.ndarray
    reward: float
    terminated: bool
    truncated: bool


def observation(state: BodyState) -> np.ndarray:
    """12-vector: row-major rotation matrix followed by body rates."""
    out = np.empty(OBS_DIM)
    out[:9] = state.rot.reshape(-1)
    out[9:] = state.omega
    return out


def decode_observation(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of observation: (rotation matrix, body rates)."""
    arr = np.asarray(obs, dtype=float)
    return arr[:9].reshape(3, 3).copy(), arr[9:12].copy()


def attitude_reward(rot: np.ndarray, rp: RewardParams) -> float:
    """Orientation term: exponential of the weighted error plus the bonus.

    The attitude error is the axis-angle rotation from rot to the inverted
    target, split into per-axis components scaled by 1/pi; the precision
    bonus ramps from 0 at the cone edge zeta to 1 at zero error.
    """
    ang, axis = so3.rotation_error(rot, INVERTED)
    e = (ang / math.pi) * axis
    weighted = (
        rp.g_phi * abs(e[0]) + rp.g_theta * abs(e[1]) + rp.g_psi * abs(e[2])
    )
    r = math.exp(-min(max(weighted, 0.0), rp.g_n))
    if ang < rp.zeta:
        r += 1.0 - ang / rp.zeta
    return r


def reward(
    next_state: BodyState,
    action: np.ndarray,
    tau_max: np.ndarray,
    rp: RewardParams,
) -> float:
    """Shaped step reward evaluated on the post-step state.

    Sum of the orientation term, a rate penalty normalized by omega_max,
    and an action penalty on the desired torques action * tau_max.
    """
    r = attitude_reward(next_state.rot, rp)
    omega = np.abs(next_state.omega)
    r -= float(np.asarray(rp.g_omega) @ omega) / rp.omega_max
    tau = np.abs(np.asarray(action, dtype=float) * np.asarray(tau_max))
    r -= float(np.asarray(rp.g_act) @ tau)
    return r


def over_range(state: BodyState, position_limit: float, omega_max: float) -> bool:
    """True when the craft leaves the flight volume or the rate range."""
    if float(state.p @ state.p) > position_limit * position_limit:
        return True
    return bool(np.any(np.abs(state.omega) > omega_max))


class InvertEnv:
    """Stateful episode loop around the rigid-body simulation.

    Each reset may rebuild the model with new physical parameters (weight
    split, trim mass, motor gain), supporting per-episode domain
    randomization; the allocation keeps using the nominal motor gain, so
    gain mismatch shows up as scaled realized torque.
    """

    def __init__(
        self,
        params: BlimpParams,
        reward_params: RewardParams | None = None,
        episode_seconds: float = 30.0,
    ):
        if episode_seconds <= 0.0:
            raise ValueError("episode_seconds must be positive")
        self.base_params = params
        self.rp = reward_params if reward_params is not None else RewardParams()
        self.episode_seconds = episode_seconds
        self.max_steps = int(round(episode_seconds / params.dt))
        self.model: BlimpModel = dynamics.build_model(params)
        self.state: BodyState = dynamics.upright_state()
        self.steps = 0
        self.last_eta = np.zeros(len(params.thruster_pos))
        self.last_tau = np.zeros(ACT_DIM)
        self._ready = False

    @property
    def time(self) -> float:
        """Episode time in seconds."""
        return self.steps * self.model.params.dt

    def reset(
        self,
        lam: float | None = None,
        psi_init: float = 0.0,
        m_w: float | None = None,
        g_m: float | None = None,
        seed: int | None = None,
    ) -> np.ndarray:
        """Starts an episode at rest, upright, yawed by psi_init.

        lam / m_w / g_m override the corresponding physical parameters for
        this episode (the model is rebuilt); None keeps the current value.
        seed is accepted for interface uniformity; the environment itself
        is noise-free, so resets with equal arguments are bit-identical.
        """
        del seed
        overrides = {}
        if lam is not None:
            overrides["lam"] = lam
        if m_w is not None:
            overrides["m_w"] = m_w
        if g_m is not None:
            overrides["g_m"] = g_m
        if overrides:
            params = dataclasses.replace(self.base_params, **overrides)
        else:
            params = self.base_params
        self.model = dynamics.build_model(params)
        self.state = BodyState(
            p=np.zeros(3),
            rot=so3.rotation_z(psi_init),
            v=np.zeros(3),
            omega=np.zeros(3),
        )
        self.steps = 0
        self.last_eta = np.zeros_like(self.last_eta)
        self.last_tau = np.zeros(ACT_DIM)
        self._ready = True
        return observation(self.state)

    def step(self, action: np.ndarray) -> StepResult:
        """Applies one control period of the clamped action."""
        if not self._ready:
            raise RuntimeError("reset must be called before step")
        a = np.clip(np.asarray(action, dtype=float).reshape(ACT_DIM), -1.0, 1.0)
        tau_des = a * self.model.tau_max
        phi, theta, _ = so3.euler_from_rotation(self.state.rot)
        eta = actuation.allocate(tau_des, phi, theta, self.model)
        self.state = dynamics.step(self.state, eta, self.model)
        self.steps += 1
        self.last_eta = eta
        self.last_tau = tau_des

        terminated = dynamics.diverged(self.state) or over_range(
            self.state,
            self.model.params.position_limit,
            self.model.params.omega_max,
        )
        truncated = self.steps >= self.max_steps
        r = reward(self.state, a, self.model.tau_max, self.rp)
        return StepResult(
            obs=observation(self.state),
            reward=r,
            terminated=terminated,
            truncated=truncated,
        )
