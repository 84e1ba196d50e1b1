"""Rotation-matrix math for attitude control.

Conventions: rotation matrices map body axes into world axes and are kept
orthonormal with det +1. Euler angles are intrinsic Z-Y-X (yaw psi, pitch
theta, roll phi), so R = Rz(psi) @ Ry(theta) @ Rx(phi). Angles are radians.
"""

from __future__ import annotations

import math

import numpy as np

# Below this value of |sin(angle)| the generic axis extraction is singular
# and the dedicated near-0 / near-pi branches are used instead.
SINGULAR_SIN = 1e-6


def skew(v: np.ndarray) -> np.ndarray:
    """Returns the 3x3 skew-symmetric matrix such that skew(v) @ u = v x u."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(phi: float, theta: float, psi: float) -> np.ndarray:
    """Builds R = Rz(psi) @ Ry(theta) @ Rx(phi) (intrinsic Z-Y-X)."""
    return rotation_z(psi) @ rotation_y(theta) @ rotation_x(phi)


def euler_from_rotation(rot: np.ndarray) -> tuple[float, float, float]:
    """Extracts intrinsic Z-Y-X angles (phi, theta, psi) from a rotation.

    Returns:
        (phi, theta, psi) with theta in [-pi/2, pi/2] and phi, psi in
        (-pi, pi]. At gimbal lock (|theta| within 1e-6 of pi/2) psi is set
        to 0 and the full in-plane angle is folded into phi.
    """
    s_theta = -float(rot[2, 0])
    s_theta = min(1.0, max(-1.0, s_theta))
    theta = math.asin(s_theta)
    if math.pi / 2.0 - abs(theta) < 1e-6:
        # Only phi -+ psi is observable; report it as phi.
        if theta > 0.0:
            phi = math.atan2(float(rot[0, 1]), float(rot[1, 1]))
        else:
            phi = math.atan2(-float(rot[0, 1]), float(rot[1, 1]))
        return _wrap_pi(phi), theta, 0.0
    phi = math.atan2(float(rot[2, 1]), float(rot[2, 2]))
    psi = math.atan2(float(rot[1, 0]), float(rot[0, 0]))
    return _wrap_pi(phi), theta, _wrap_pi(psi)


def _wrap_pi(angle: float) -> float:
    """Wraps an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def rotation_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues' formula. The axis is normalized; a zero axis is rejected."""
    axis = np.asarray(axis, dtype=float)
    norm = math.sqrt(float(axis @ axis))
    if norm == 0.0:
        raise ValueError("rotation axis must be nonzero")
    u = axis / norm
    k = skew(u)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotation_error(rot: np.ndarray, rot_des: np.ndarray) -> tuple[float, np.ndarray]:
    """Axis-angle attitude error between a rotation and a target.

    Computes R_e = rot^T @ rot_des and returns (angle, axis) with
    angle = arccos((trace(R_e) - 1) / 2) in [0, pi] and axis the unit
    eigenvector of R_e, so rot @ rotation_from_axis_angle(axis, angle)
    recovers rot_des.

    Near angle = 0 the axis is ill-defined and [1, 0, 0] is returned. Near
    angle = pi the axis is recovered from the symmetric part of R_e, with
    its sign taken from the skew part when that is still resolvable and
    canonicalized (largest component positive) when it is not.
    """
    re = rot.T @ rot_des
    trace = float(re[0, 0] + re[1, 1] + re[2, 2])
    c = min(1.0, max(-1.0, (trace - 1.0) / 2.0))
    sv = np.array([
        re[2, 1] - re[1, 2],
        re[0, 2] - re[2, 0],
        re[1, 0] - re[0, 1],
    ])
    # atan2 of (|skew|/2, (trace-1)/2) equals arccos((trace-1)/2) on [0, pi]
    # but stays well conditioned at both ends.
    s = 0.5 * math.sqrt(float(sv @ sv))
    angle = math.atan2(min(1.0, s), c)
    if s >= SINGULAR_SIN:
        return angle, sv / (2.0 * s)
    if angle < math.pi / 2.0:
        return angle, np.array([1.0, 0.0, 0.0])
    # Near pi: (R_e + R_e^T)/2 - cos(angle) I = (1 - cos(angle)) vv^T exactly,
    # so any nonzero column of it is parallel to the axis.
    sym = 0.5 * (re + re.T) - c * np.eye(3)
    k = int(np.argmax(np.diag(sym)))
    axis = sym[:, k]
    axis = axis / math.sqrt(float(axis @ axis))
    dot_sv = float(axis @ sv)
    if dot_sv < 0.0:
        axis = -axis
    elif dot_sv == 0.0:
        j = int(np.argmax(np.abs(axis)))
        if axis[j] < 0.0:
            axis = -axis
    return angle, axis


def integrate_rotation(rot: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """One attitude step: rot @ exp(skew(omega * dt)), re-orthonormalized.

    omega is the body-frame angular velocity in rad/s. The result is
    re-orthonormalized (Gram-Schmidt on rows) every call so that repeated
    integration does not accumulate orthonormality drift. Scalar arithmetic
    throughout; this sits in simulation hot loops.
    """
    wx = float(omega[0]) * dt
    wy = float(omega[1]) * dt
    wz = float(omega[2]) * dt
    angle = math.sqrt(wx * wx + wy * wy + wz * wz)
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = rot.reshape(9).tolist()
    if angle < 1e-12:
        c00, c01, c02 = r00, r01, r02
        c10, c11, c12 = r10, r11, r12
        c20, c21, c22 = r20, r21, r22
    else:
        ux, uy, uz = wx / angle, wy / angle, wz / angle
        s = math.sin(angle)
        t = 1.0 - math.cos(angle)
        e00 = 1.0 + t * (ux * ux - 1.0)
        e11 = 1.0 + t * (uy * uy - 1.0)
        e22 = 1.0 + t * (uz * uz - 1.0)
        txy, txz, tyz = t * ux * uy, t * ux * uz, t * uy * uz
        sx, sy, sz = s * ux, s * uy, s * uz
        e01, e10 = txy - sz, txy + sz
        e02, e20 = txz + sy, txz - sy
        e12, e21 = tyz - sx, tyz + sx
        c00 = r00 * e00 + r01 * e10 + r02 * e20
        c01 = r00 * e01 + r01 * e11 + r02 * e21
        c02 = r00 * e02 + r01 * e12 + r02 * e22
        c10 = r10 * e00 + r11 * e10 + r12 * e20
        c11 = r10 * e01 + r11 * e11 + r12 * e21
        c12 = r10 * e02 + r11 * e12 + r12 * e22
        c20 = r20 * e00 + r21 * e10 + r22 * e20
        c21 = r20 * e01 + r21 * e11 + r22 * e21
        c22 = r20 * e02 + r21 * e12 + r22 * e22
    # Gram-Schmidt on rows; the third row is rebuilt as a cross product so
    # the result stays a proper rotation (det +1).
    n0 = 1.0 / math.sqrt(c00 * c00 + c01 * c01 + c02 * c02)
    a00, a01, a02 = c00 * n0, c01 * n0, c02 * n0
    d = a00 * c10 + a01 * c11 + a02 * c12
    b10, b11, b12 = c10 - d * a00, c11 - d * a01, c12 - d * a02
    n1 = 1.0 / math.sqrt(b10 * b10 + b11 * b11 + b12 * b12)
    a10, a11, a12 = b10 * n1, b11 * n1, b12 * n1
    a20 = a01 * a12 - a02 * a11
    a21 = a02 * a10 - a00 * a12
    a22 = a00 * a11 - a01 * a10
    return np.array(((a00, a01, a02), (a10, a11, a12), (a20, a21, a22)))


def orthonormality_defect(rot: np.ndarray) -> float:
    """Max-abs deviation of rot^T @ rot from identity plus |det - 1|."""
    gram = rot.T @ rot
    return float(np.max(np.abs(gram - np.eye(3))) + abs(np.linalg.det(rot) - 1.0))
