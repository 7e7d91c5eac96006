"""Pinhole camera model, point projection and linear pose estimation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import BehindCamera, DegenerateConfiguration, InsufficientPoints
from . import quaternion


@dataclass(frozen=True)
class CameraIntrinsics:
    """Distortion-free pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @classmethod
    def from_json(cls, document) -> "CameraIntrinsics":
        return cls(*(float(document[key]) for key in ("fx", "fy", "cx", "cy")))

    @classmethod
    def load(cls, path) -> "CameraIntrinsics":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


@dataclass(frozen=True, eq=False)
class Pose:
    """Object-to-camera transform: canonical unit quaternion plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", quaternion.normalize(self.rotation))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(quaternion.IDENTITY, np.zeros(3))

    @property
    def matrix(self) -> np.ndarray:
        return quaternion.to_matrix(self.rotation)

    def transform(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return points @ self.matrix.T + self.translation


def project_points(points, pose: Pose, camera: CameraIntrinsics) -> np.ndarray:
    """Project object-frame points to pixel coordinates, shape (K, 2)."""
    cam = pose.transform(points)
    behind = np.flatnonzero(cam[:, 2] <= 1e-9)
    if len(behind):
        raise BehindCamera(int(behind[0]), float(cam[behind[0], 2]))
    u = camera.fx * cam[:, 0] / cam[:, 2] + camera.cx
    v = camera.fy * cam[:, 1] / cam[:, 2] + camera.cy
    return np.stack([u, v], axis=1)


def _similarity(points: np.ndarray) -> np.ndarray:
    """Hartley conditioning: move the centroid to the origin, mean distance sqrt(dim)."""
    dim = points.shape[1]
    centroid = points.mean(axis=0)
    spread = np.linalg.norm(points - centroid, axis=1).mean()
    scale = np.sqrt(dim) / spread if spread > 0 else 1.0
    T = np.eye(dim + 1)
    T[:dim, :dim] *= scale
    T[:dim, dim] = -scale * centroid
    return T


def solve_pnp_dlt(points3d, points2d, camera: CameraIntrinsics) -> Pose:
    """Estimate the object pose from at least six 2D-3D correspondences.

    Linear DLT on intrinsics-normalized rays with Hartley conditioning of both
    point sets, followed by projection of the 3x3 block onto the nearest
    rotation.  No iterative refinement.

    Raises:
        InsufficientPoints: fewer than six correspondences.
        DegenerateConfiguration: coplanar object points or an ill-conditioned
            (non-unique) linear solution.
    """
    X = np.asarray(points3d, dtype=np.float64).reshape(-1, 3)
    uv = np.asarray(points2d, dtype=np.float64).reshape(-1, 2)
    if len(X) != len(uv):
        raise ValueError(f"{len(X)} object points but {len(uv)} image points")
    if len(X) < 6:
        raise InsufficientPoints(f"need at least 6 correspondences, got {len(X)}")

    spread = np.linalg.eigvalsh(np.cov(X.T))
    if spread[0] < 1e-10 * spread[-1]:
        raise DegenerateConfiguration("object points are coplanar")

    rays = np.stack([(uv[:, 0] - camera.cx) / camera.fx, (uv[:, 1] - camera.cy) / camera.fy], axis=1)
    T2, T3 = _similarity(rays), _similarity(X)
    x = np.c_[rays, np.ones(len(rays))] @ T2.T
    Xh = np.c_[X, np.ones(len(X))] @ T3.T

    zeros = np.zeros_like(Xh)
    A = np.empty((2 * len(X), 12))
    A[0::2] = np.hstack([Xh, zeros, -x[:, :1] * Xh])
    A[1::2] = np.hstack([zeros, Xh, -x[:, 1:2] * Xh])
    _, singular, vt = np.linalg.svd(A)
    if singular[-2] == 0 or singular[-1] / singular[-2] > 0.99:
        raise DegenerateConfiguration("DLT solution is not unique")

    P = np.linalg.inv(T2) @ vt[-1].reshape(3, 4) @ T3
    depths = P[2] @ np.c_[X, np.ones(len(X))].T
    if depths.sum() < 0:
        P = -P

    u, s, wt = np.linalg.svd(P[:, :3])
    fix = np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ wt))])
    R = u @ fix @ wt
    t = P[:, 3] / s.mean()
    return Pose(quaternion.from_matrix(R), t)
