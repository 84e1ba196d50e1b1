"""Motor thrust model and least-squares control allocation.

A signed motor command eta in [-1, 1] produces thrust along the thruster
axis. Thrust magnitude follows a calibrated quadratic in |eta| scaled by
the motor gain, with a dead band below ETA_DEADBAND where the propeller
does not overcome static friction.
"""

from __future__ import annotations

import math

import numpy as np

# thrust(|eta|) = g_m * (POLY_A |eta|^2 + POLY_B |eta| + POLY_C), floored at 0
POLY_A = -0.0292
POLY_B = 0.1118
POLY_C = -0.0039

# Smaller root of the thrust polynomial: below this command the output is 0.
ETA_DEADBAND = (-POLY_B + math.sqrt(POLY_B * POLY_B - 4.0 * POLY_A * POLY_C)) / (2.0 * POLY_A)


def motor_force(eta, g_m: float):
    """Thrust in N for signed command(s) eta, clamped to [-1, 1].

    Scalar in, float out; array in, array out. Odd in eta, monotone
    nondecreasing in |eta|, and exactly 0 inside the dead band.
    """
    eta_arr = np.clip(np.asarray(eta, dtype=float), -1.0, 1.0)
    mag = np.abs(eta_arr)
    thrust = g_m * np.maximum(0.0, (POLY_A * mag + POLY_B) * mag + POLY_C)
    out = np.sign(eta_arr) * thrust
    return float(out) if np.isscalar(eta) or np.ndim(eta) == 0 else out


def max_force(g_m: float) -> float:
    """Thrust at full command."""
    return g_m * (POLY_A + POLY_B + POLY_C)


def command_from_force(force, g_m: float):
    """Inverse of motor_force: the command that realizes a given thrust.

    Solves the thrust quadratic for |eta| on [ETA_DEADBAND, 1], keeping the
    root inside that interval, and clamps out-of-range magnitudes to full
    command. Zero force maps to zero command. Round trips exactly through
    motor_force for attainable forces.
    """
    f_arr = np.asarray(force, dtype=float)
    mag = np.minimum(np.abs(f_arr) / g_m, POLY_A + POLY_B + POLY_C)
    disc = POLY_B * POLY_B - 4.0 * POLY_A * (POLY_C - mag)
    eta = (-POLY_B + np.sqrt(disc)) / (2.0 * POLY_A)
    # forces below solver noise round to zero instead of the deadband edge
    out = np.where(mag > 1e-12, np.sign(f_arr) * eta, 0.0)
    return float(out) if np.isscalar(force) or np.ndim(force) == 0 else out


def torque_map(thruster_pos: np.ndarray, thruster_dir: np.ndarray, c_b: np.ndarray) -> np.ndarray:
    """3 x n map from per-thruster forces to body torque about c_b."""
    arms = np.asarray(thruster_pos, dtype=float) - np.asarray(c_b, dtype=float)
    return np.cross(arms, np.asarray(thruster_dir, dtype=float)).T


def allocate(tau_des: np.ndarray, phi: float, theta: float, model) -> np.ndarray:
    """Per-thruster commands realizing a desired body torque about c_b.

    Minimum-norm least-squares solve of torque_map @ f = tau_des at the
    allocation's assumed motor gain. If any thruster would exceed full
    command, all forces are scaled by one common factor so the largest
    command lands exactly at +-1; the realized torque stays parallel to
    tau_des. phi and theta are accepted for attitude-dependent layouts and
    unused by the default body-fixed one.

    Returns:
        eta: command vector, one entry per thruster, each in [-1, 1].
    """
    forces = model.alloc_pinv @ np.asarray(tau_des, dtype=float)
    peak = float(np.max(np.abs(forces)))
    if peak > model.f_max_alloc:
        forces = forces * (model.f_max_alloc / peak)
    return command_from_force(forces, model.params.g_m_alloc)


def axis_torque_limits(tmap: np.ndarray, f_max: float) -> np.ndarray:
    """Largest torque magnitude reachable on each axis separately."""
    return np.sum(np.abs(tmap), axis=1) * f_max
