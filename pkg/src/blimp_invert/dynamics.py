"""Six-DOF rigid-body simulation with added mass about the buoyancy center.

State: world position p of c_b, body-to-world rotation R, body-frame linear
velocity v of c_b, body-frame angular velocity omega. The generalized mass
is diagonal (rigid-body mass/inertia plus added terms); gravity acts at c_g,
buoyancy at c_b, quadratic drag opposes each velocity component, and the
standard cross-product Coriolis/centripetal couplings close the model.
Integration is semi-implicit Euler: velocities first, then pose with the
updated velocities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import actuation, so3
from .params import BlimpParams, MassGeometry, derive_geometry


@dataclass
class BodyState:
    p: np.ndarray      # world position of c_b, m
    rot: np.ndarray    # body-to-world rotation
    v: np.ndarray      # body-frame linear velocity, m/s
    omega: np.ndarray  # body-frame angular velocity, rad/s

    def copy(self) -> "BodyState":
        return BodyState(self.p.copy(), self.rot.copy(), self.v.copy(), self.omega.copy())


def upright_state() -> BodyState:
    return BodyState(np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class BlimpModel:
    """Parameters plus everything precomputed for the simulation hot loop."""

    params: BlimpParams
    geometry: MassGeometry
    m_eff: np.ndarray       # m_rb + added mass, per axis
    i_eff: np.ndarray       # i_rb + added inertia, per axis
    r_gb: np.ndarray        # c_g relative to c_b, body frame
    weight: float           # m_rb * g
    buoyancy: float         # rho_air * V * g
    force_map: np.ndarray   # 3 x n: thruster forces -> body force
    tmap: np.ndarray        # 3 x n: thruster forces -> body torque about c_b
    alloc_pinv: np.ndarray  # n x 3 minimum-norm inverse of tmap
    f_max_alloc: float      # full-command thrust at the allocation gain
    f_max_true: float       # full-command thrust at the true gain
    tau_max: np.ndarray     # action scale: desired torque at |a| = 1
    drag_lin: np.ndarray
    drag_rot: np.ndarray


def build_model(params: BlimpParams) -> BlimpModel:
    """Derives geometry and precomputes the actuation and mass matrices."""
    geometry = derive_geometry(params)
    added_m = params.added_mass
    if added_m is None:
        added_m = (0.5 * params.rho_air * params.V,) * 3
    added_i = params.added_inertia
    if added_i is None:
        added_i = tuple(0.1 * i for i in params.i_rb)
    m_eff = geometry.m_rb + np.asarray(added_m, dtype=float)
    i_eff = np.asarray(params.i_rb, dtype=float) + np.asarray(added_i, dtype=float)
    c_b = np.array([0.0, 0.0, geometry.r_tb])
    pos = np.asarray(params.thruster_pos, dtype=float)
    dirs = np.asarray(params.thruster_dir, dtype=float)
    tmap = actuation.torque_map(pos, dirs, c_b)
    if np.linalg.matrix_rank(tmap, tol=1e-9) != 3:
        raise ValueError("thruster layout does not span all three torque axes")
    f_max_alloc = actuation.max_force(params.g_m_alloc)
    tau_max = params.tau_max
    if tau_max is None:
        tau_max = actuation.axis_torque_limits(tmap, f_max_alloc)
    return BlimpModel(
        params=params,
        geometry=geometry,
        m_eff=m_eff,
        i_eff=i_eff,
        r_gb=np.array([0.0, 0.0, -geometry.r_zb]),
        weight=geometry.m_rb * params.gravity,
        buoyancy=params.rho_air * params.V * params.gravity,
        force_map=dirs.T.copy(),
        tmap=tmap,
        alloc_pinv=np.linalg.pinv(tmap),
        f_max_alloc=f_max_alloc,
        f_max_true=actuation.max_force(params.g_m),
        tau_max=np.asarray(tau_max, dtype=float),
        drag_lin=np.asarray(params.drag_lin, dtype=float),
        drag_rot=np.asarray(params.drag_rot, dtype=float),
    )


def net_wrench(
    state: BodyState,
    eta: np.ndarray,
    model: BlimpModel,
    external: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame net force and torque about c_b.

    Sums thruster forces (at the true motor gain), gravity at c_g and
    buoyancy at c_b rotated into the body frame, per-axis quadratic drag,
    an optional external wrench, and the Coriolis/centripetal couplings
    -omega x (M v), -omega x (I omega) - v x (M v).
    """
    v, w = state.v, state.omega
    thrust = actuation.motor_force(np.asarray(eta, dtype=float), model.params.g_m)
    force = model.force_map @ thrust
    torque = model.tmap @ thrust

    # Gravity/buoyancy: both vertical in the world; z_world in body axes is
    # the last row of R.
    z_body = state.rot[2]
    fg = -model.weight * z_body
    force = force + fg + model.buoyancy * z_body
    torque = torque + np.cross(model.r_gb, fg)

    force = force - model.drag_lin * np.abs(v) * v
    torque = torque - model.drag_rot * np.abs(w) * w

    if external is not None:
        force = force + external[0]
        torque = torque + external[1]

    mv = model.m_eff * v
    force = force - np.cross(w, mv)
    torque = torque - np.cross(w, model.i_eff * w) - np.cross(v, mv)
    return force, torque


def step(
    state: BodyState,
    eta: np.ndarray,
    model: BlimpModel,
    external: tuple[np.ndarray, np.ndarray] | None = None,
) -> BodyState:
    """One semi-implicit Euler step of length params.dt."""
    dt = model.params.dt
    force, torque = net_wrench(state, eta, model, external)
    v = state.v + (force / model.m_eff) * dt
    omega = state.omega + (torque / model.i_eff) * dt
    p = state.p + (state.rot @ v) * dt
    rot = so3.integrate_rotation(state.rot, omega, dt)
    return BodyState(p=p, rot=rot, v=v, omega=omega)


def diverged(state: BodyState) -> bool:
    """True when the state is no longer finite."""
    return not (
        np.isfinite(state.p).all()
        and np.isfinite(state.rot).all()
        and np.isfinite(state.v).all()
        and np.isfinite(state.omega).all()
    )


def mechanical_energy(state: BodyState, model: BlimpModel) -> float:
    """Kinetic energy (with added mass) plus gravity/buoyancy potential.

    Potential is weight * z_cg - buoyancy * z_cb in the world frame, so it
    is exactly the energy whose rate matches the work done by the modeled
    gravity/buoyancy wrench. Zero point: c_b at the world origin, upright.
    """
    kinetic = 0.5 * float(state.v @ (model.m_eff * state.v)) + 0.5 * float(
        state.omega @ (model.i_eff * state.omega)
    )
    z_cb = float(state.p[2])
    z_cg = z_cb + float((state.rot @ model.r_gb)[2])
    reference = -model.geometry.r_zb  # upright c_g height when c_b is at origin
    return kinetic + model.weight * (z_cg - reference) - model.buoyancy * z_cb
