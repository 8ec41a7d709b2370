"""Closed-form fundamental invariants of the three camera-object actions.

Vector layouts (fixed so that two pictures compare entry by entry):

    Base      [I2, I3..In, J3..Jn]              length 2n-3
    Oriented  [IL, I0, J0, I1..In, J1..Jn]      length 2n+3
    Zoom      [I1, I2..In, J2..Jn]              length 2n-1
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (CollinearBaseRays, DegenerateConfiguration, LengthMismatch,
                     OrthogonalRays, SingularFocalFactor, VariantMismatch)
from .groups import SceneConfig, Variant, numerical_rank

DENOM_RTOL = 1e-12


def vector_length(variant, n: int) -> int:
    variant = Variant.parse(variant)
    return {Variant.BASE: 2 * n - 3,
            Variant.ORIENTED: 2 * n + 3,
            Variant.ZOOM: 2 * n - 1}[variant]


def labels(variant, n: int) -> list[str]:
    variant = Variant.parse(variant)
    if variant is Variant.BASE:
        return ["I2"] + [f"I{i}" for i in range(3, n + 1)] + [f"J{i}" for i in range(3, n + 1)]
    if variant is Variant.ORIENTED:
        return (["IL", "I0", "J0"] + [f"I{i}" for i in range(1, n + 1)]
                + [f"J{i}" for i in range(1, n + 1)])
    return ["I1"] + [f"I{i}" for i in range(2, n + 1)] + [f"J{i}" for i in range(2, n + 1)]


@dataclass(frozen=True)
class InvariantVector:
    variant: Variant
    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if len(values) != vector_length(self.variant, self.n):
            raise LengthMismatch(f"{self.variant.value} vector for n={self.n} needs "
                                 f"{vector_length(self.variant, self.n)} entries")
        if not np.all(np.isfinite(values)):
            raise ValueError("invariant vector has non-finite entries")

    @property
    def labels(self) -> list[str]:
        return labels(self.variant, self.n)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class InvariantTargets:
    """Per-picture invariant values (the constants the reconstruction must match)."""

    vectors: tuple

    def __post_init__(self):
        vectors = tuple(self.vectors)
        object.__setattr__(self, "vectors", vectors)
        if not vectors:
            raise ValueError("need at least one picture")
        first = vectors[0]
        for v in vectors[1:]:
            if v.variant is not first.variant:
                raise VariantMismatch("targets mix invariant variants")
            if v.n != first.n:
                raise LengthMismatch("targets mix point counts")

    @property
    def variant(self) -> Variant:
        return self.vectors[0].variant

    @property
    def n(self) -> int:
        return self.vectors[0].n

    @property
    def t(self) -> int:
        return len(self.vectors)

    def matrix(self) -> np.ndarray:
        return np.stack([v.values for v in self.vectors])


# Batched evaluators.  Every array carries a leading batch axis: p0 (B, 3),
# aux (B, k, 3), pts (B, n, 3).  They return the values (B, m) and an integer
# status per row: 0 ok, otherwise an index into _FAILURES.
_FAILURES = {
    1: (CollinearBaseRays, "the frame-defining rays are parallel"),
    2: (OrthogonalRays, "a ray is orthogonal to the reference ray"),
    3: (SingularFocalFactor, "focal factor 1 + m - m^2 vanishes"),
    4: (CollinearBaseRays, "ray 1 lies on the optical axis"),
}


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _frame_normal(a, b, status):
    c = np.cross(a, b)
    nc = np.sqrt(_dot(c, c))
    bad = (nc < DENOM_RTOL * np.sqrt(_dot(a, a) * _dot(b, b))) | (nc == 0)
    status[bad & (status == 0)] = 1
    return c, nc


def _check_dots(d, ref_norm, rays, status):
    ray_norm = np.sqrt(_dot(rays, rays))
    bad = (np.abs(d) < DENOM_RTOL * ref_norm * ray_norm) | (d == 0)
    status[np.any(bad, axis=-1) & (status == 0)] = 2


def _ray_pairs(a, c, nc, rays, status):
    """(I, J) of rays (B, k, 3) against reference ray a and frame normal c.

    I = (a x v).c / ((a.v) |c|),   J = -(v.c) |a| / ((a.v) |c|)
    """
    na = np.sqrt(_dot(a, a))
    d = _dot(rays, a[:, None])
    _check_dots(d, na[:, None], rays, status)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = d * nc[:, None]
        ii = _dot(np.cross(a[:, None], rays), c[:, None]) / den
        jj = -_dot(rays, c[:, None]) * na[:, None] / den
    return ii, jj


def base_values(p0, aux, pts):
    v = pts - p0[:, None]
    status = np.zeros(len(v), dtype=int)
    v1, v2 = v[:, 0], v[:, 1]
    c, nc = _frame_normal(v1, v2, status)
    d12 = _dot(v1, v2)
    _check_dots(d12[:, None], np.sqrt(_dot(v1, v1))[:, None], v2[:, None], status)
    ii, jj = _ray_pairs(v1, c, nc, v[:, 2:], status)
    with np.errstate(divide="ignore", invalid="ignore"):
        i2 = nc / d12
    return np.column_stack([i2, ii, jj]), status


def oriented_values(p0, aux, pts):
    u1 = aux[:, 0] - p0
    u2 = aux[:, 1] - p0
    status = np.zeros(len(u1), dtype=int)
    c, nc = _frame_normal(u1, u2, status)
    n1 = np.sqrt(_dot(u1, u1))
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.column_stack([n1, _dot(u2, u1) / n1, nc / n1])
    ii, jj = _ray_pairs(u1, c, nc, pts - p0[:, None], status)
    return np.column_stack([head, ii, jj]), status


def focal_factor(m):
    """1 + m - m**2 with m the camera-center to principal-point distance."""
    f = 1.0 + m - m * m
    if np.ndim(f) == 0 and abs(f) < DENOM_RTOL:
        raise SingularFocalFactor(f"focal factor vanishes at m={m!r}")
    return f


def zoom_values(p0, aux, pts):
    d = aux[:, 0] - p0
    v = pts - p0[:, None]
    status = np.zeros(len(d), dtype=int)
    m = np.sqrt(_dot(d, d))
    fac = 1.0 + m - m * m
    status[np.abs(fac) < DENOM_RTOL] = 3
    dots = _dot(v, d[:, None])
    _check_dots(dots, m[:, None], v, status)
    c1 = np.cross(d, v[:, 0])
    nc1 = np.sqrt(_dot(c1, c1))
    with np.errstate(divide="ignore", invalid="ignore"):
        cols = [nc1 / (dots[:, 0] * fac)]
        if v.shape[1] > 1:
            bad = (nc1 < DENOM_RTOL * m * np.sqrt(_dot(v[:, 0], v[:, 0]))) | (nc1 == 0)
            status[bad & (status == 0)] = 4
            den = (nc1 * fac)[:, None] * dots[:, 1:]
            ii = _dot(np.cross(d[:, None], v[:, 1:]), c1[:, None]) / den
            jj = _dot(v[:, 1:], np.cross(v[:, 0], d)[:, None]) * m[:, None] / den
            return np.column_stack(cols + [ii, jj]), status
    return np.column_stack(cols), status


BATCH_EVALUATORS = {Variant.BASE: base_values,
                    Variant.ORIENTED: oriented_values,
                    Variant.ZOOM: zoom_values}


def raise_for_status(code: int):
    if code:
        cls, msg = _FAILURES[int(code)]
        raise cls(msg)


def _single(cfg: SceneConfig, variant: Variant, name: str) -> InvariantVector:
    if cfg.variant is not variant:
        raise VariantMismatch(f"{name} needs a {variant.value} configuration")
    if variant is Variant.BASE and cfg.n < 2:
        raise DegenerateConfiguration("Base invariants need at least two ray points")
    aux = np.asarray(cfg.aux, dtype=np.float64).reshape(1, -1, 3)
    values, status = BATCH_EVALUATORS[variant](cfg.p0[None], aux, cfg.points[None])
    raise_for_status(status[0])
    return InvariantVector(variant, cfg.n, values[0])


def invariants_base(cfg: SceneConfig) -> InvariantVector:
    return _single(cfg, Variant.BASE, "invariants_base")


def invariants_oriented(cfg: SceneConfig) -> InvariantVector:
    return _single(cfg, Variant.ORIENTED, "invariants_oriented")


def invariants_zoom(cfg: SceneConfig) -> InvariantVector:
    return _single(cfg, Variant.ZOOM, "invariants_zoom")


_EVALUATORS = {Variant.BASE: invariants_base,
               Variant.ORIENTED: invariants_oriented,
               Variant.ZOOM: invariants_zoom}


def invariants(cfg: SceneConfig) -> InvariantVector:
    """Fundamental invariant vector of ``cfg`` under its own variant's action."""
    return _EVALUATORS[cfg.variant](cfg)


def invariant_jacobian(cfg: SceneConfig, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the invariant vector w.r.t. every coordinate."""
    x0 = cfg.coords()
    cols = []
    for j in range(len(x0)):
        step = h * max(1.0, abs(x0[j]))
        xp, xm = x0.copy(), x0.copy()
        xp[j] += step
        xm[j] -= step
        fp = invariants(SceneConfig.from_coords(cfg.variant, xp, cfg.n)).values
        fm = invariants(SceneConfig.from_coords(cfg.variant, xm, cfg.n)).values
        cols.append((fp - fm) / (2 * step))
    return np.column_stack(cols)


def invariant_jacobian_rank(cfg: SceneConfig) -> int:
    return numerical_rank(invariant_jacobian(cfg))
