"""Synthetic scenes, camera trajectories, projection and picture embedding.

Camera convention: the optical axis is +x of the camera frame, the image plane
sits at x = focal, and image coordinates are calibrated (focal-free) ratios
u = q_y / q_x, v = q_z / q_x of the camera-frame point q.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from . import geom
from .errors import PointBehindCamera
from .groups import SceneConfig, Variant

DEFAULT_BOUNDS = (-0.5, 0.5, -0.5, 0.5)
TRAJECTORY_KINDS = ("orbit", "translation", "pure_rotation")


@dataclass(frozen=True)
class CameraPose:
    center: np.ndarray
    rotation: np.ndarray  # world-to-camera
    focal: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", geom.vec3(self.center))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        if not geom.is_rotation(self.rotation, 1e-10):
            raise ValueError("camera rotation is not a rotation matrix")
        if not self.focal > 0:
            raise ValueError("focal length must be positive")

    @property
    def axis(self) -> np.ndarray:
        return self.rotation[0]

    def to_camera(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.center) @ self.rotation.T

    def to_world(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation + self.center


@dataclass(frozen=True)
class Scene:
    points: np.ndarray
    ids: tuple = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if len(pts) < 1:
            raise ValueError("scene needs at least one point")
        ids = tuple(range(1, len(pts) + 1)) if self.ids is None else tuple(int(i) for i in self.ids)
        if len(ids) != len(pts) or len(set(ids)) != len(ids):
            raise ValueError("scene ids must be unique, one per point")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(pdist(self.points).max()) if self.n > 1 else 0.0


@dataclass(frozen=True)
class PictureTracks:
    """Full-visibility correspondences: ``uv[tau, i]`` is point ``ids[i]`` in picture tau."""

    uv: np.ndarray
    ids: tuple = None
    focals: np.ndarray = None
    bounds: tuple = DEFAULT_BOUNDS
    variant: Variant = Variant.BASE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        uv = np.asarray(self.uv, dtype=np.float64)
        if uv.ndim != 3 or uv.shape[2] != 2:
            raise ValueError("uv must have shape (t, n, 2)")
        if not np.all(np.isfinite(uv)):
            raise ValueError("image coordinates must be finite")
        object.__setattr__(self, "uv", uv)
        t, n, _ = uv.shape
        ids = tuple(range(1, n + 1)) if self.ids is None else tuple(int(i) for i in self.ids)
        if len(ids) != n:
            raise ValueError("one id per tracked point")
        object.__setattr__(self, "ids", ids)
        focals = np.ones(t) if self.focals is None else np.asarray(self.focals, dtype=np.float64)
        if focals.shape != (t,) or np.any(focals <= 0):
            raise ValueError("need one positive focal length per picture")
        object.__setattr__(self, "focals", focals)
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "variant", Variant.parse(self.variant))

    @property
    def t(self) -> int:
        return self.uv.shape[0]

    @property
    def n(self) -> int:
        return self.uv.shape[1]

    def embed(self, tau: int, variant=None) -> SceneConfig:
        """Embedded picture ``tau`` (0-based)."""
        variant = self.variant if variant is None else variant
        return embed_picture(self.uv[tau], self.focals[tau], variant, self.bounds)


def generate_scene(n: int, seed, spread: float = 1.0) -> Scene:
    """``n`` points uniform in [-spread, spread]^3, pairwise separated by 1% of spread."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    min_dist = 0.01 * spread
    pts = []
    for _ in range(n):
        for _attempt in range(100):
            p = rng.uniform(-spread, spread, size=3)
            if not pts or np.min(np.linalg.norm(np.array(pts) - p, axis=1)) > min_dist:
                break
        else:
            p = p + rng.normal(scale=min_dist, size=3)
        pts.append(p)
    return Scene(np.array(pts))


def look_at(center, target, roll: float = 0.0) -> np.ndarray:
    """World-to-camera rotation whose +x axis points from ``center`` to ``target``."""
    x = geom.vec3(target) - geom.vec3(center)
    x = x / geom.norm(x)
    up = np.array([0.0, 0.0, 1.0])
    if geom.norm(geom.cross(up, x)) < 1e-6:
        up = np.array([0.0, 1.0, 0.0])
    y = geom.cross(up, x)
    y = y / geom.norm(y)
    z = geom.cross(x, y)
    base = np.stack([x, y, z])
    return geom.axis_angle([1.0, 0.0, 0.0], roll) @ base


def generate_trajectory(t: int, kind: str, params: dict | None = None, seed=0) -> list[CameraPose]:
    """Camera poses for ``t`` pictures.

    orbit:          centers on a circle (``radius``, ``arc``, ``elevation``) around
                    ``target``, each looking at it with a random roll up to ``roll``.
    translation:    one fixed rotation, centers ``start + k * step``.
    pure_rotation:  one center, rotations perturbed about random axes by at most
                    ``max_angle``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if kind not in TRAJECTORY_KINDS:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    p = dict(radius=4.0, arc=np.pi / 3, elevation=0.3, target=(0.0, 0.0, 0.0), roll=0.3,
             step=(0.2, 0.0, 0.0), max_angle=0.2, focal=1.0)
    p.update(params or {})
    rng = np.random.default_rng(seed)
    target = geom.vec3(p["target"])
    focals = np.broadcast_to(np.asarray(p["focal"], dtype=np.float64), (t,))

    def on_sphere(azimuth):
        e = p["elevation"]
        return target + p["radius"] * np.array([np.cos(e) * np.cos(azimuth),
                                                np.cos(e) * np.sin(azimuth), np.sin(e)])

    az0 = rng.uniform(0.0, 2 * np.pi)
    if kind == "orbit":
        poses = []
        for k in range(t):
            az = az0 + (p["arc"] * k / (t - 1) if t > 1 else 0.0)
            c = on_sphere(az)
            poses.append(CameraPose(c, look_at(c, target, rng.uniform(-p["roll"], p["roll"])),
                                    focals[k]))
        return poses

    c0 = on_sphere(az0)
    rot0 = look_at(c0, target, rng.uniform(-p["roll"], p["roll"]))
    if kind == "translation":
        step = geom.vec3(p["step"])
        return [CameraPose(c0 + k * step, rot0, focals[k]) for k in range(t)]

    poses = [CameraPose(c0, rot0, focals[0])]
    for k in range(1, t):
        turn = geom.axis_angle(rng.normal(size=3), rng.uniform(0.0, p["max_angle"]))
        poses.append(CameraPose(c0, turn @ rot0, focals[k]))
    return poses


def project(points, pose: CameraPose) -> np.ndarray:
    """Calibrated image coordinates (n, 2) of world ``points`` seen from ``pose``."""
    if isinstance(points, Scene):
        points = points.points
    q = pose.to_camera(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    if np.any(q[:, 0] <= 1e-9):
        raise PointBehindCamera("a point lies on or behind the camera plane")
    return q[:, 1:] / q[:, :1]


def _frame_corners(focal, bounds):
    umin, _umax, vmin, vmax = bounds
    return np.array([[focal, focal * umin, focal * vmin],
                     [focal, focal * umin, focal * vmax]])


def embed_picture(uv, focal: float = 1.0, variant=Variant.BASE, bounds=DEFAULT_BOUNDS) -> SceneConfig:
    """Camera center at the origin, picture points at (F, F u, F v)."""
    if not focal > 0:
        raise ValueError("focal length must be positive")
    variant = Variant.parse(variant)
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    pts = focal * np.column_stack([np.ones(len(uv)), uv])
    if variant is Variant.ORIENTED:
        aux = _frame_corners(focal, bounds)
    elif variant is Variant.ZOOM:
        aux = np.array([[focal, 0.0, 0.0]])
    else:
        aux = ()
    return SceneConfig(variant, np.zeros(3), pts, aux)


def true_config(scene, pose: CameraPose, variant=Variant.BASE, bounds=DEFAULT_BOUNDS) -> SceneConfig:
    """The actual camera-object configuration at the moment a picture is taken."""
    variant = Variant.parse(variant)
    pts = scene.points if isinstance(scene, Scene) else np.asarray(scene, dtype=np.float64)
    if variant is Variant.ORIENTED:
        aux = pose.to_world(_frame_corners(pose.focal, bounds))
    elif variant is Variant.ZOOM:
        aux = pose.to_world([[pose.focal, 0.0, 0.0]])
    else:
        aux = ()
    return SceneConfig(variant, pose.center, pts, aux)


def add_noise(uv, sigma: float, seed) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    uv = np.asarray(uv, dtype=np.float64)
    if sigma == 0:
        return uv.copy()
    return uv + np.random.default_rng(seed).normal(scale=sigma, size=uv.shape)


def make_tracks(scene: Scene, poses, sigma: float = 0.0, seed=0, variant=Variant.BASE,
                bounds=DEFAULT_BOUNDS) -> PictureTracks:
    uv = np.stack([project(scene.points, pose) for pose in poses])
    uv = add_noise(uv, sigma, seed)
    return PictureTracks(uv, scene.ids, np.array([p.focal for p in poses]), bounds, variant)


def random_config(variant, n: int, seed, spread: float = 0.5) -> SceneConfig:
    """Generic camera-object configuration: a random camera with ``n`` points in
    front of it inside a frustum of half-width ``spread`` (depth 1 to 3).

    Oriented corners sit at a random focal distance in [0.5, 2]; the Zoom
    principal point at a distance in [0.5, 1.4], clear of the golden ratio.
    """
    variant = Variant.parse(variant)
    rng = np.random.default_rng(seed)
    pose = CameraPose(rng.normal(size=3), geom.axis_angle(rng.normal(size=3), rng.uniform(0, np.pi)))
    uv = rng.uniform(-spread, spread, size=(n, 2))
    depth = rng.uniform(1.0, 3.0, size=n)
    pts = pose.to_world(depth[:, None] * np.column_stack([np.ones(n), uv]))
    if variant is Variant.ORIENTED:
        f = rng.uniform(0.5, 2.0)
        lo, hi = -rng.uniform(0.3, 0.7, size=2), rng.uniform(0.3, 0.7, size=2)
        aux = pose.to_world(_frame_corners(f, (lo[0], hi[0], lo[1], hi[1])))
    elif variant is Variant.ZOOM:
        aux = pose.to_world([[rng.uniform(0.5, 1.4), 0.0, 0.0]])
    else:
        aux = ()
    return SceneConfig(variant, pose.center, pts, aux)
