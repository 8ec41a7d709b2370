"""The three camera-object group actions and their elements.

Base:      (R, T, lambda_1..n) acting on (P0, P1..Pn); each Pi slides along
           its ray through P0 and the whole arrangement moves rigidly.
Oriented:  as Base, plus two image-plane corners P_L, P^L moved rigidly.
Zoom:      as Base, plus the principal point P_M and a focal-change alpha
           that swings each ray about P0 while keeping |Pi - P0|.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import geom
from .errors import DegenerateConfiguration, InvalidLambda, RayOrthogonalToAxis

RANK_RTOL = 1e-8


class Variant(enum.Enum):
    BASE = "base"
    ORIENTED = "oriented"
    ZOOM = "zoom"

    @property
    def n_aux(self) -> int:
        return {Variant.BASE: 0, Variant.ORIENTED: 2, Variant.ZOOM: 1}[self]

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown variant {value!r}; expected one of "
                             f"{', '.join(v.value for v in cls)}") from None


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SceneConfig:
    """Camera center ``p0``, variant-specific auxiliary points and ray points.

    ``aux`` holds nothing for Base, (P_L, P^L) for Oriented and (P_M,) for Zoom.
    """

    variant: Variant
    p0: np.ndarray
    aux: np.ndarray
    points: np.ndarray

    def __init__(self, variant, p0, points, aux=()):
        variant = Variant.parse(variant)
        p0 = _frozen(geom.vec3(p0))
        aux = _frozen(np.asarray(aux, dtype=np.float64).reshape(-1, 3))
        points = _frozen(np.asarray(points, dtype=np.float64).reshape(-1, 3))
        if len(aux) != variant.n_aux:
            raise ValueError(f"{variant.value} configuration needs {variant.n_aux} "
                             f"auxiliary points, got {len(aux)}")
        if len(points) < 1:
            raise ValueError("configuration needs at least one ray point")
        if not (np.all(np.isfinite(aux)) and np.all(np.isfinite(points))):
            raise ValueError("configuration contains non-finite coordinates")
        if np.any(np.linalg.norm(points - p0, axis=1) == 0):
            raise DegenerateConfiguration("a ray point coincides with the camera center")
        if variant is Variant.ZOOM and np.linalg.norm(aux[0] - p0) == 0:
            raise DegenerateConfiguration("principal point coincides with the camera center")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return len(self.points)

    def coords(self) -> np.ndarray:
        """Flat coordinate vector: P0, then auxiliary points, then ray points."""
        return np.concatenate([self.p0, self.aux.ravel(), self.points.ravel()])

    @classmethod
    def from_coords(cls, variant, x, n: int) -> "SceneConfig":
        variant = Variant.parse(variant)
        x = np.asarray(x, dtype=np.float64)
        k = variant.n_aux
        return cls(variant, x[:3], x[3 + 3 * k:].reshape(n, 3), x[3:3 + 3 * k].reshape(k, 3))

    def transformed(self, func) -> "SceneConfig":
        """Apply a point map to every point (P0, aux and rays alike)."""
        return SceneConfig(self.variant, func(self.p0), np.array([func(p) for p in self.points]),
                           np.array([func(p) for p in self.aux]).reshape(-1, 3))


@dataclass(frozen=True)
class GroupElement:
    rotation: np.ndarray
    translation: np.ndarray
    lambdas: np.ndarray
    alpha: float | None = None

    def __init__(self, rotation, translation, lambdas, alpha=None):
        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(geom.vec3(translation)))
        object.__setattr__(self, "lambdas", _frozen(np.atleast_1d(lambdas)))
        object.__setattr__(self, "alpha", None if alpha is None else float(alpha))

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @classmethod
    def identity(cls, n: int, variant=Variant.BASE) -> "GroupElement":
        alpha = 0.0 if Variant.parse(variant) is Variant.ZOOM else None
        return cls(np.eye(3), np.zeros(3), np.zeros(n), alpha)

    def validate(self):
        if not geom.is_rotation(self.rotation, 1e-9):
            raise ValueError("group element rotation is not in SO(3)")
        if np.any(self.lambdas <= -1.0):
            raise InvalidLambda(f"depth factors must exceed -1, got min {self.lambdas.min()}")
        if self.alpha is not None and self.alpha <= -1.0:
            raise InvalidLambda(f"zoom factor must exceed -1, got {self.alpha}")


def compose(g2: GroupElement, g1: GroupElement) -> GroupElement:
    """``g2 o g1`` (apply g1 first) for the Base and Oriented groups.

    Depth factors compose multiplicatively along each ray:
    1 + lambda = (1 + lambda2) * (1 + lambda1).
    """
    if g1.alpha is not None or g2.alpha is not None:
        raise NotImplementedError("the zoom action has no closed composition law")
    if g1.n != g2.n:
        raise ValueError("cannot compose elements acting on different point counts")
    return GroupElement(g2.rotation @ g1.rotation,
                        g2.rotation @ g1.translation + g2.translation,
                        (1.0 + g2.lambdas) * (1.0 + g1.lambdas) - 1.0)


def inverse(g: GroupElement) -> GroupElement:
    rt = g.rotation.T
    alpha = None if g.alpha is None else 1.0 / (1.0 + g.alpha) - 1.0
    return GroupElement(rt, -rt @ g.translation, 1.0 / (1.0 + g.lambdas) - 1.0, alpha)


def _zoom_ray(v, d, alpha):
    """Ray direction after a focal change; ``v``, ``d`` relative to P0."""
    vd = geom.dot(v, d)
    if vd <= 1e-12 * geom.norm(v) * geom.norm(d):
        raise RayOrthogonalToAxis("ray is orthogonal to, or behind, the optical axis")
    w = v / vd + alpha * d
    return w / geom.norm(w)


def act(g: GroupElement, cfg: SceneConfig) -> SceneConfig:
    """Group action without validity checks on ``g`` (frames may have lambda < -1)."""
    if g.n != cfg.n:
        raise ValueError(f"element carries {g.n} depth factors, configuration has {cfg.n} points")
    R, T = g.rotation, g.translation
    p0 = cfg.p0
    rays = cfg.points - p0

    if cfg.variant is Variant.ZOOM:
        if g.alpha is None:
            raise ValueError("zoom action needs alpha")
        d = cfg.aux[0] - p0
        moved = np.array([p0 + (1.0 + lam) * geom.norm(v) * _zoom_ray(v, d, g.alpha)
                          for v, lam in zip(rays, g.lambdas)])
        aux = (cfg.aux[0] + g.alpha * d)[None, :]
    else:
        moved = p0 + (1.0 + g.lambdas)[:, None] * rays
        aux = cfg.aux

    return SceneConfig(cfg.variant, R @ p0 + T, moved @ R.T + T, aux @ R.T + T)


def apply(g: GroupElement, cfg: SceneConfig) -> SceneConfig:
    """Act with a valid group element on a configuration."""
    g.validate()
    if cfg.variant is Variant.ZOOM and g.alpha is None:
        g = GroupElement(g.rotation, g.translation, g.lambdas, 0.0)
    return act(g, cfg)


def random_element(variant, n: int, seed, magnitude: float = 1.0) -> GroupElement:
    """Seeded random element; rotation uniform on SO(3) when ``magnitude >= 1``,
    otherwise about a uniform axis by an angle of at most ``magnitude``."""
    if not magnitude > 0:
        raise ValueError("magnitude must be positive")
    variant = Variant.parse(variant)
    rng = np.random.default_rng(seed)
    if magnitude >= 1.0:
        rot = Rotation.random(random_state=rng).as_matrix()
    else:
        axis = rng.normal(size=3)
        rot = geom.axis_angle(axis, rng.uniform(0.0, magnitude))
    trans = rng.uniform(-magnitude, magnitude, size=3)
    lambdas = rng.uniform(-0.9, magnitude, size=n)
    alpha = float(rng.uniform(-0.9, magnitude)) if variant is Variant.ZOOM else None
    return GroupElement(rot, trans, lambdas, alpha)


_AXES = np.eye(3)


def _generator_elements(variant: Variant, n: int, eps: float):
    zero_alpha = 0.0 if variant is Variant.ZOOM else None
    for k in range(3):
        yield GroupElement(geom.axis_angle(_AXES[k], eps), np.zeros(3), np.zeros(n), zero_alpha)
    for k in range(3):
        yield GroupElement(np.eye(3), eps * _AXES[k], np.zeros(n), zero_alpha)
    for i in range(n):
        lam = np.zeros(n)
        lam[i] = eps
        yield GroupElement(np.eye(3), np.zeros(3), lam, zero_alpha)
    if variant is Variant.ZOOM:
        yield GroupElement(np.eye(3), np.zeros(3), np.zeros(n), eps)


def generator_matrix(cfg: SceneConfig, h: float = 1e-6) -> np.ndarray:
    """Central-difference infinitesimal generators at the identity, one column per
    group parameter (3 rotations, 3 translations, n depths, alpha for Zoom)."""
    plus = _generator_elements(cfg.variant, cfg.n, h)
    minus = _generator_elements(cfg.variant, cfg.n, -h)
    cols = [(act(gp, cfg).coords() - act(gm, cfg).coords()) / (2 * h)
            for gp, gm in zip(plus, minus)]
    return np.column_stack(cols)


def numerical_rank(m, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orbit_dimension(cfg: SceneConfig) -> int:
    """Numerical dimension of the orbit through ``cfg``."""
    return numerical_rank(generator_matrix(cfg))
