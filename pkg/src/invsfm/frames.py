"""Closed-form moving frames (normalizing group elements) for the three actions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCrossSection, RayOrthogonalToAxis
from .geom import dot, norm
from .groups import GroupElement, SceneConfig, Variant, act, compose, inverse

_EPS = 1e-12


@dataclass(frozen=True)
class MovingFrame:
    rotation: np.ndarray
    translation: np.ndarray
    lambdas: np.ndarray
    alpha: float | None
    f: float
    g: float

    def as_element(self) -> GroupElement:
        return GroupElement(self.rotation, self.translation, self.lambdas, self.alpha)

    def normalize(self, cfg: SceneConfig) -> SceneConfig:
        """Carry ``cfg`` onto the cross-section.

        Depth factors of rays pointing away from the first frame ray are below
        -1, so this bypasses the element validity check.
        """
        return act(self.as_element(), cfg)


def frame_rotation(a, b) -> tuple[np.ndarray, float, float]:
    """Rotation taking ``a`` to the +x axis and ``b`` into the upper xy half-plane.

    Built as R1 @ R2 @ R3 from the coordinates of ``a`` = (x1, y1, z1) and
    ``b`` = (x2, y2, z2); also returns the mixing terms f and g.
    """
    x1, y1, z1 = a
    x2, y2, z2 = b
    rho = np.hypot(x1, y1)
    r = norm(a)
    if r == 0 or rho <= _EPS * r:
        raise DegenerateCrossSection("first frame ray is parallel to the z axis or null")
    f = (-y1 * x2 + x1 * y2) / rho
    g = (z2 * rho * rho - z1 * (x1 * x2 + y1 * y2)) / (rho * r)
    s = np.hypot(f, g)
    if s <= _EPS * norm(b):
        raise DegenerateCrossSection("frame rays are parallel")
    r1 = np.array([[1.0, 0.0, 0.0],
                   [0.0, f / s, g / s],
                   [0.0, -g / s, f / s]])
    r2 = np.array([[rho / r, 0.0, z1 / r],
                   [0.0, 1.0, 0.0],
                   [-z1 / r, 0.0, rho / r]])
    r3 = np.array([[x1 / rho, y1 / rho, 0.0],
                   [-y1 / rho, x1 / rho, 0.0],
                   [0.0, 0.0, 1.0]])
    return r1 @ r2 @ r3, float(f), float(g)


def _depth_lambdas(rot, rays):
    xs = rays @ rot[0]
    if np.any(np.abs(xs) <= _EPS * np.linalg.norm(rays, axis=1)):
        raise DegenerateCrossSection("a ray is orthogonal to the first frame ray")
    return 1.0 / xs - 1.0


def solve_frame(cfg: SceneConfig) -> MovingFrame:
    p0 = cfg.p0
    rays = cfg.points - p0

    if cfg.variant is Variant.BASE:
        if cfg.n < 2:
            raise DegenerateCrossSection("Base frame needs two ray points")
        rot, f, g = frame_rotation(rays[0], rays[1])
        return MovingFrame(rot, -rot @ p0, _depth_lambdas(rot, rays), None, f, g)

    if cfg.variant is Variant.ORIENTED:
        rot, f, g = frame_rotation(cfg.aux[0] - p0, cfg.aux[1] - p0)
        return MovingFrame(rot, -rot @ p0, _depth_lambdas(rot, rays), None, f, g)

    d = cfg.aux[0] - p0
    m = norm(d)
    rot, f, g = frame_rotation(d, rays[0])
    alpha = 1.0 / m - 1.0
    lambdas = []
    for v in rays:
        vd = dot(v, d)
        if abs(vd) <= _EPS * norm(v) * m:
            raise RayOrthogonalToAxis("ray is orthogonal to the optical axis")
        nv = norm(v)
        lambdas.append(norm(v / vd + alpha * d) / (nv * m + nv / m) - 1.0)
    return MovingFrame(rot, -rot @ p0, np.array(lambdas), alpha, f, g)


def verify_equivariance(cfg: SceneConfig, g: GroupElement) -> float:
    """Largest entry of |rho(g.z) - rho(z) g^-1| over rotation, translation and
    depth-factor parts (Base and Oriented actions)."""
    lhs = solve_frame(act(g, cfg)).as_element()
    rhs = compose(solve_frame(cfg).as_element(), inverse(g))
    return float(max(np.max(np.abs(lhs.rotation - rhs.rotation)),
                     np.max(np.abs(lhs.translation - rhs.translation)),
                     np.max(np.abs(lhs.lambdas - rhs.lambdas))))
