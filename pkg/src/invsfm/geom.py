"""Small dense 3D linear algebra: vectors, rotations, similarity alignment.

Vectors are plain ``numpy`` arrays of shape (3,) and matrices of shape (3, 3).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration

ROTATION_TOL = 1e-12


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component: {v}")
    return v


def cross(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def dot(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def norm(a) -> float:
    return float(np.sqrt(dot(a, a)))


def is_rotation(m, tol: float = ROTATION_TOL) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return bool(np.max(np.abs(m.T @ m - np.eye(3))) < tol and np.linalg.det(m) > 0)


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation of ``angle`` about ``axis``."""
    k = vec3(axis)
    k = k / norm(k)
    K = np.array([[0.0, -k[2], k[1]],
                  [k[2], 0.0, -k[0]],
                  [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotation_angle(m) -> float:
    c = (np.trace(m) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def orthonormalize(m) -> np.ndarray:
    """Closest rotation to ``m`` in the Frobenius sense."""
    u, _, vt = np.linalg.svd(m)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


@dataclass(frozen=True)
class SimilarityTransform:
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("similarity scale must be positive")
        if not is_rotation(self.rotation, 1e-9):
            raise ValueError("similarity rotation is not a rotation matrix")

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return self.scale * p @ self.rotation.T + self.translation

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, np.eye(3), np.zeros(3))


def align_similarity(source, target) -> tuple[SimilarityTransform, float]:
    """Least-squares similarity (Umeyama) taking ``source`` onto ``target``.

    Returns the transform and the RMS of the remaining point distances.
    """
    src = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if src.shape != tgt.shape:
        raise ValueError("source and target must have the same number of points")
    if len(src) < 3:
        raise DegenerateConfiguration("need at least 3 point pairs")

    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    xs = src - mu_s
    xt = tgt - mu_t
    var_s = np.sum(xs * xs) / len(src)

    sv_src = np.linalg.svd(xs, compute_uv=False)
    if var_s == 0 or sv_src[1] <= 1e-12 * max(sv_src[0], 1e-300):
        raise DegenerateConfiguration("source points are collinear or coincident")

    cov = xt.T @ xs / len(src)
    u, d, vt = np.linalg.svd(cov)
    s = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2] = -1.0
    rot = u @ np.diag(s) @ vt
    scale = float(np.sum(d * s) / var_s)
    trans = mu_t - scale * rot @ mu_s

    xf = SimilarityTransform(scale, rot, trans)
    rms = float(np.sqrt(np.mean(np.sum((xf.apply(src) - tgt) ** 2, axis=1))))
    return xf, rms
