"""Deployment harness: mapping layer, PD handover, mismatched simulator.

The trained policy is carried from the training simulator onto a second
simulator instance with perturbed parameters standing in for the physical
craft. During the transition phase a diagonal mapping attenuates the
policy torques; once the attitude error and rates are small a PD
stabilizer takes over and holds the inverted pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import so3
from .baseline import PdGains, pd_action
from .env import INVERTED, InvertEnv
from .nets import Mlp, forward
from .params import BlimpParams, params_from_dict, params_to_dict, replace


@dataclass(frozen=True)
class MappingLayer:
    """Diagonal torque attenuation applied while the craft transitions.

    m holds the diagonal of M_0 over (roll, pitch, yaw); rho is the
    attitude-error angle below which the mapping phase ends and the PD
    stabilizer becomes eligible.
    """

    m: tuple[float, float, float] = (0.7, 0.1, 0.1)
    rho: float = 0.8

    def __post_init__(self) -> None:
        if any(v <= 0.0 for v in self.m):
            raise ValueError("mapping diagonal entries must be positive")
        if not 0.0 < self.rho < math.pi:
            raise ValueError("switching threshold must lie in (0, pi)")


def apply_mapping(
    action: np.ndarray,
    dphi: float,
    layer: MappingLayer,
    tau_max: np.ndarray,
) -> np.ndarray:
    """Torque command for a policy action under the mapping layer.

    While dphi >= rho (transition phase) the scaled action is attenuated
    by the diagonal of M_0; inside the switching cone the action passes
    through unmapped, pending the rate-gated PD handover.
    """
    return mapped_action(action, dphi, layer) * np.asarray(tau_max, dtype=float)


def mapped_action(action: np.ndarray, dphi: float, layer: MappingLayer) -> np.ndarray:
    """Mapping applied in normalized action space: a, or M_0 a in transition."""
    a = np.asarray(action, dtype=float)
    if dphi >= layer.rho:
        return np.asarray(layer.m, dtype=float) * a
    return a


def attitude_error(rot: np.ndarray) -> tuple[float, np.ndarray]:
    """Angle and axis of the rotation taking rot to the inverted pose."""
    return so3.rotation_error(rot, INVERTED)


@dataclass(frozen=True)
class DeployScenario:
    """Mismatched-deployment description: craft pair, mapping, PD, horizon.

    real_deltas lists BlimpParams field overrides applied on top of the
    sim craft to produce the stand-in physical craft. m_w1/m_w2 give the
    envelope-top/gondola extra-weight split and are folded into
    (m_w, lam); adding gondola-side weight lowers c_g and lengthens the
    maneuver.
    """

    sim_params: BlimpParams = field(default_factory=BlimpParams)
    real_deltas: dict = field(default_factory=dict)
    layer: MappingLayer = field(default_factory=MappingLayer)
    pd: PdGains = field(default_factory=PdGains)
    duration: float = 30.0

    def real_params(self) -> BlimpParams:
        deltas = dict(self.real_deltas)
        if "m_w1" in deltas or "m_w2" in deltas:
            m1 = float(deltas.pop("m_w1", 0.0))
            m2 = float(deltas.pop("m_w2", 0.0))
            total = m1 + m2
            if total <= 0.0:
                raise ValueError("m_w1 + m_w2 must be positive")
            deltas["m_w"] = total
            deltas["lam"] = m1 / total
        return replace(self.sim_params, **deltas)


def default_mismatch_deltas(sim: BlimpParams) -> dict:
    """Stock sim-to-real perturbation: +20% drag, +10% inertia."""
    return {
        "drag_lin": tuple(1.2 * d for d in sim.drag_lin),
        "drag_rot": tuple(1.2 * d for d in sim.drag_rot),
        "i_rb": tuple(1.1 * i for i in sim.i_rb),
    }


def default_scenario() -> DeployScenario:
    sim = BlimpParams()
    return DeployScenario(sim_params=sim, real_deltas=default_mismatch_deltas(sim))


def scenario_to_dict(sc: DeployScenario) -> dict:
    return {
        "sim_params": params_to_dict(sc.sim_params),
        "real_deltas": dict(sc.real_deltas),
        "mapping": {"m": list(sc.layer.m), "rho": sc.layer.rho},
        "pd": {
            "k_p": list(sc.pd.k_p),
            "k_d": list(sc.pd.k_d),
            "handover_ang": sc.pd.handover_ang,
            "handover_rate": sc.pd.handover_rate,
        },
        "duration": sc.duration,
    }


def scenario_from_dict(doc: dict) -> DeployScenario:
    known = {"sim_params", "real_deltas", "mapping", "pd", "duration"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    sc = DeployScenario()
    sim = (
        params_from_dict(doc["sim_params"])
        if "sim_params" in doc
        else sc.sim_params
    )
    layer = sc.layer
    if "mapping" in doc:
        m = doc["mapping"]
        layer = MappingLayer(
            m=tuple(m.get("m", layer.m)), rho=float(m.get("rho", layer.rho))
        )
    pd = sc.pd
    if "pd" in doc:
        p = doc["pd"]
        pd = PdGains(
            k_p=tuple(p.get("k_p", pd.k_p)),
            k_d=tuple(p.get("k_d", pd.k_d)),
            handover_ang=float(p.get("handover_ang", pd.handover_ang)),
            handover_rate=float(p.get("handover_rate", pd.handover_rate)),
        )
    return DeployScenario(
        sim_params=sim,
        real_deltas=dict(doc.get("real_deltas", {})),
        layer=layer,
        pd=pd,
        duration=float(doc.get("duration", sc.duration)),
    )


def load_scenario(path: str | Path) -> DeployScenario:
    with open(path) as f:
        return scenario_from_dict(yaml.safe_load(f))


def save_scenario(sc: DeployScenario, path: str | Path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(scenario_to_dict(sc), f, sort_keys=False)


@dataclass
class DeployResult:
    rows: list            # per-step rollout rows (see logs.row_from_step)
    handover_time: float | None
    terminated: bool


def deploy_rollout(
    actor: Mlp,
    scenario: DeployScenario,
    psi_init: float = 0.0,
) -> DeployResult:
    """Runs policy + mapping on the mismatched craft, PD after handover.

    The PD stabilizer latches on the first step where the attitude error
    is inside the switching cone and the rate magnitude is below the
    activation bound; from then on it owns the torque command.
    """
    from .logs import row_from_step

    env = InvertEnv(scenario.real_params(), episode_seconds=scenario.duration)
    obs = env.reset(psi_init=psi_init)
    tau_max = env.model.tau_max
    handover_time = None
    rows = []
    while True:
        ang, _ = attitude_error(env.state.rot)
        rate = float(np.linalg.norm(env.state.omega))
        if (
            handover_time is None
            and ang < scenario.layer.rho
            and rate < scenario.pd.handover_rate
        ):
            handover_time = env.time
        if handover_time is None:
            # mapping in action space keeps the no-mismatch identity case
            # bit-identical to a plain policy rollout
            action = mapped_action(forward(actor, obs), ang, scenario.layer)
        else:
            action = pd_action(env.state, scenario.pd, tau_max) / tau_max
        res = env.step(action)
        obs = res.obs
        rows.append(row_from_step(env, action, res))
        if res.terminated or res.truncated:
            return DeployResult(
                rows=rows,
                handover_time=handover_time,
                terminated=res.terminated,
            )
