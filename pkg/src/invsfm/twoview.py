"""Calibrated two-view geometry used to seed the reconstruction.

Directions are camera-frame rays (x along the optical axis).  The relative
pose maps camera-1 coordinates to camera-2 coordinates: X2 = R X1 + t.
"""
from __future__ import annotations

import numpy as np


def essential_matrix(d1, d2) -> np.ndarray:
    """Linear eight-point estimate of E with d2^T E d1 = 0, projected onto the
    essential manifold (singular values 1, 1, 0).  Needs at least 8 rays."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if len(d1) < 8 or len(d1) != len(d2):
        raise ValueError("need at least eight corresponding rays")
    d1 = d1 / np.linalg.norm(d1, axis=1)[:, None]
    d2 = d2 / np.linalg.norm(d2, axis=1)[:, None]
    A = np.einsum("ni,nj->nij", d2, d1).reshape(len(d1), 9)
    E = np.linalg.svd(A)[2][-1].reshape(3, 3)
    U, _, Vt = np.linalg.svd(E)
    return U @ np.diag([1.0, 1.0, 0.0]) @ Vt


def triangulate(d1, d2, rotation, translation):
    """Midpoint triangulation in the camera-1 frame.

    Returns (points, ray parameters in view 1, ray parameters in view 2).
    """
    c2 = -rotation.T @ translation
    b = np.asarray(d2, dtype=np.float64) @ rotation  # rows R^T d2
    pts, s1, s2 = [], [], []
    for a, bb in zip(np.asarray(d1, dtype=np.float64), b):
        M = np.column_stack([a, -bb])
        (u, w), *_ = np.linalg.lstsq(M, c2, rcond=None)
        pts.append(0.5 * (u * a + c2 + w * bb))
        s1.append(u)
        s2.append(w)
    return np.array(pts), np.array(s1), np.array(s2)


def relative_pose(d1, d2):
    """(R, t, points) from the four decompositions of E, choosing the one that
    puts the most triangulated points in front of both cameras.  ``t`` has
    unit norm."""
    E = essential_matrix(d1, d2)
    U, _, Vt = np.linalg.svd(E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    best = None
    for R in (U @ W @ Vt, U @ W.T @ Vt):
        for t in (U[:, 2], -U[:, 2]):
            pts, s1, s2 = triangulate(d1, d2, R, t)
            score = int(np.sum((s1 > 0) & (s2 > 0)))
            if best is None or score > best[0]:
                best = (score, R, t, pts)
    return best[1], best[2], best[3]


def resect_center(points, directions, rotation) -> np.ndarray:
    """Camera center c minimizing the distance from each point to its ray
    c + s R^T d (camera orientation known)."""
    b = np.asarray(directions, dtype=np.float64) @ rotation
    b /= np.linalg.norm(b, axis=1)[:, None]
    A = np.zeros((3, 3))
    y = np.zeros(3)
    for p, bb in zip(np.asarray(points, dtype=np.float64), b):
        P = np.eye(3) - np.outer(bb, bb)
        A += P
        y += P @ p
    return np.linalg.solve(A, y)

