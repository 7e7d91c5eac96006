"""Unit quaternion algebra in (w, x, y, z) order.

Canonical sign: ``w >= 0``, and when ``w == 0`` the first nonzero of
``x, y, z`` is positive.  Every function returning a rotation returns it in
canonical form, except :func:`multiply` and :func:`conjugate` which are plain
algebra.
"""

from __future__ import annotations

import numpy as np

from ..errors import NotARotation, NotUnit, ZeroAxis, ZeroNorm

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def canonicalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    for component in q:
        if component != 0.0:
            return -q if component < 0.0 else q.copy()
    return q.copy()


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = np.linalg.norm(q)
    if not norm > 1e-12:
        raise ZeroNorm(f"cannot normalize quaternion with norm {norm:.3g}")
    return canonicalize(q / norm)


def conjugate(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array([w, -x, -y, -z])


def multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b``: rotate by ``b`` first, then by ``a``."""
    aw, ax, ay, az = np.asarray(a, dtype=np.float64)
    bw, bx, by, bz = np.asarray(b, dtype=np.float64)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = np.linalg.norm(q)
    if abs(norm - 1.0) > 1e-6:
        raise NotUnit(f"quaternion norm {norm:.9g} is not 1")
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_matrix(matrix) -> np.ndarray:
    """Rotation matrix -> canonical unit quaternion.

    Uses the largest of ``trace, R00, R11, R22`` as the pivot so the square
    root never approaches zero, which keeps rotations near 180 degrees stable.
    """
    R = np.asarray(matrix, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise NotARotation(f"expected a finite 3x3 matrix, got shape {R.shape}")
    if np.abs(R @ R.T - np.eye(3)).max() > 1e-6 or np.linalg.det(R) <= 0:
        raise NotARotation("matrix is not a proper rotation")
    trace = np.trace(R)
    pivot = int(np.argmax([trace, R[0, 0], R[1, 1], R[2, 2]]))
    if pivot == 0:
        s = 2.0 * np.sqrt(1.0 + trace)
        q = [s / 4, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif pivot == 1:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, s / 4, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif pivot == 2:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, s / 4, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, s / 4]
    return normalize(q)


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(axis)
    if not norm > 1e-12:
        raise ZeroAxis("rotation axis has zero length")
    half = angle / 2.0
    return canonicalize(np.concatenate([[np.cos(half)], np.sin(half) * axis / norm]))


def angle_between(a, b) -> float:
    """Geodesic angle (radians) between the rotations ``a`` and ``b``."""
    # atan2 stays accurate for tiny angles where arccos of the dot product does not
    diff = multiply(conjugate(normalize(a)), normalize(b))
    return 2.0 * float(np.arctan2(np.linalg.norm(diff[1:]), abs(diff[0])))


# long-form aliases used by the public API
quaternion_normalize = normalize
quaternion_multiply = multiply
quaternion_to_matrix = to_matrix
matrix_to_quaternion = from_matrix
axis_angle_to_quaternion = from_axis_angle
