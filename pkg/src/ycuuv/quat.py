"""Quaternion helpers for attitude math.

Quaternions are numpy arrays [w, x, y, z] representing the body-to-NED
rotation; vectors rotate as v_ned = q * v_body * conj(q). Scalar-unrolled
arithmetic keeps the per-step cost low enough for million-step integration
runs.
"""

from __future__ import annotations

import math

import numpy as np


def identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q: np.ndarray) -> np.ndarray:
    """Unit-norm with the scalar part kept non-negative (hemisphere fix)."""
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    s = -1.0 / n if w < 0.0 else 1.0 / n
    return np.array([w * s, x * s, y * s, z * s])


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def from_rotvec(v) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle, rad) to quaternion."""
    vx, vy, vz = v
    angle = math.sqrt(vx * vx + vy * vy + vz * vz)
    if angle < 1e-12:
        # second-order series keeps tiny steps exact to machine precision
        half = 0.5 - angle * angle / 48.0
        return normalize(np.array([1.0 - angle * angle / 8.0, vx * half, vy * half, vz * half]))
    s = math.sin(angle / 2.0) / angle
    return np.array([math.cos(angle / 2.0), vx * s, vy * s, vz * s])


def conjugate(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def rotate(q: np.ndarray, v) -> np.ndarray:
    """Rotate a body-frame vector into NED."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 * (q_vec x v); v' = v + w*t + q_vec x t
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array(
        [
            vx + w * tx + y * tz - z * ty,
            vy + w * ty + z * tx - x * tz,
            vz + w * tz + x * ty - y * tx,
        ]
    )


def rotate_inverse(q: np.ndarray, v) -> np.ndarray:
    """Rotate a NED vector into the body frame."""
    return rotate(conjugate(q), v)


def to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle (rad) taking attitude a to attitude b."""
    dot = abs(float(np.dot(a, b)))
    return 2.0 * math.acos(min(1.0, dot))


def from_yaw(yaw: float) -> np.ndarray:
    return np.array([math.cos(yaw / 2.0), 0.0, 0.0, math.sin(yaw / 2.0)])


def to_euler(q: np.ndarray) -> tuple[float, float, float]:
    """(roll, pitch, yaw) in radians, aerospace sequence."""
    w, x, y, z = q
    roll = math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    sp = 2 * (w * y - z * x)
    pitch = math.copysign(math.pi / 2, sp) if abs(sp) >= 1.0 else math.asin(sp)
    yaw = math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return roll, pitch, yaw
