"""Reconstruction of object points and camera unknowns from invariant equations.

Each picture tau gives one invariant vector (the targets) computed on the
embedded picture.  The unknowns are the object points plus, per picture, the
camera center and the variant's auxiliary points; they must reproduce every
target when fed to the same invariant evaluator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (AllStepsRejected, DegenerateConfiguration, DegenerateTargets,
                     EvaluationError, InsufficientData)
from .frames import solve_frame
from . import twoview
from .groups import SceneConfig, Variant
from .invariants import BATCH_EVALUATORS, InvariantTargets, invariants, vector_length
from .lm import LMDiagnostics, SolverOptions, levenberg_marquardt

log = logging.getLogger(__name__)


def equation_count(variant, n: int, t: int) -> int:
    return vector_length(variant, n) * t


def unknown_count(variant, n: int, t: int) -> int:
    """Free scalars after gauge fixing."""
    variant = Variant.parse(variant)
    return 3 * n + 3 * (1 + variant.n_aux) * t - GaugeSpec.for_problem(variant, n, t).n_fixed


def counting_ok(variant, n: int, t: int) -> bool:
    """Whether there are enough invariant equations to try solving.

    Base and Oriented use the rule n > 3 and t >= (3n-6)/(2n-6)
    (both reduce to (2n-6) t >= 3n-6 with six rigid gauge scalars); Zoom
    compares equations to free unknowns.
    """
    variant = Variant.parse(variant)
    if variant is Variant.ZOOM:
        return equation_count(variant, n, t) >= unknown_count(variant, n, t)
    return n > 3 and (2 * n - 6) * t >= 3 * n - 6


@dataclass(frozen=True)
class GaugeSpec:
    """Coordinates pinned to remove the global symmetry of the equations.

    ``fixed`` maps flat indices of the full parameter vector to values.
    Base (7): first camera center at the origin, O1 = (1, 0, 0), O2 on z = 0.
    Oriented (6): first camera center at the origin, its lower corner on the
    x axis and its upper corner on z = 0.
    Zoom (6): first camera center at the origin, its principal point on the
    x axis, O1 on z = 0.
    """

    variant: Variant
    n: int
    t: int
    fixed: tuple

    @property
    def n_fixed(self) -> int:
        return len(self.fixed)

    @classmethod
    def for_problem(cls, variant, n: int, t: int) -> "GaugeSpec":
        variant = Variant.parse(variant)
        lay = Layout(variant, n, t)
        fixed = [(lay.camera_index(0, 0, k), 0.0) for k in range(3)]
        if variant is Variant.BASE:
            fixed += [(lay.object_index(0, k), v) for k, v in enumerate((1.0, 0.0, 0.0))]
            fixed.append((lay.object_index(1, 2), 0.0))
        elif variant is Variant.ORIENTED:
            fixed += [(lay.camera_index(0, 1, 1), 0.0), (lay.camera_index(0, 1, 2), 0.0),
                      (lay.camera_index(0, 2, 2), 0.0)]
        else:
            fixed += [(lay.camera_index(0, 1, 1), 0.0), (lay.camera_index(0, 1, 2), 0.0),
                      (lay.object_index(0, 2), 0.0)]
        return cls(variant, n, t, tuple(fixed))


@dataclass(frozen=True)
class Layout:
    """Full parameter vector: per picture [P0, aux...], then object points."""

    variant: Variant
    n: int
    t: int

    @property
    def per_camera(self) -> int:
        return 1 + self.variant.n_aux

    @property
    def size(self) -> int:
        return 3 * (self.per_camera * self.t + self.n)

    def camera_index(self, tau: int, slot: int, k: int) -> int:
        return 3 * (tau * self.per_camera + slot) + k

    def object_index(self, i: int, k: int) -> int:
        return 3 * (self.per_camera * self.t + i) + k

    def split(self, full):
        cams = full[:3 * self.per_camera * self.t].reshape(self.t, self.per_camera, 3)
        objs = full[3 * self.per_camera * self.t:].reshape(self.n, 3)
        return cams, objs

    def join(self, cams, objs) -> np.ndarray:
        return np.concatenate([np.asarray(cams, dtype=np.float64).ravel(),
                               np.asarray(objs, dtype=np.float64).ravel()])


@dataclass(frozen=True)
class ReconstructionProblem:
    variant: Variant
    n: int
    t: int
    targets: InvariantTargets
    gauge: GaugeSpec
    options: SolverOptions = field(default_factory=SolverOptions)

    @classmethod
    def from_targets(cls, targets: InvariantTargets, options: SolverOptions | None = None):
        return cls(targets.variant, targets.n, targets.t, targets,
                   GaugeSpec.for_problem(targets.variant, targets.n, targets.t),
                   options or SolverOptions())

    @property
    def layout(self) -> Layout:
        return Layout(self.variant, self.n, self.t)

    @property
    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.layout.size, dtype=bool)
        mask[[i for i, _ in self.gauge.fixed]] = False
        return mask

    @property
    def n_unknowns(self) -> int:
        return int(self.free_mask.sum())

    @property
    def n_equations(self) -> int:
        return equation_count(self.variant, self.n, self.t)

    def expand(self, unknowns) -> np.ndarray:
        full = np.empty(self.layout.size)
        for i, v in self.gauge.fixed:
            full[i] = v
        full[self.free_mask] = unknowns
        return full

    def reduce(self, full) -> np.ndarray:
        return np.asarray(full, dtype=np.float64)[self.free_mask]

    def configs(self, unknowns) -> list[SceneConfig]:
        cams, objs = self.layout.split(self.expand(unknowns))
        return [SceneConfig(self.variant, cam[0], objs, cam[1:]) for cam in cams]


def batch_residuals(problem: ReconstructionProblem, unknowns) -> tuple[np.ndarray, np.ndarray]:
    """Residuals for a batch of unknown vectors (B, N).

    Returns ``(R, bad)``: R is (B, M); ``bad[b]`` is 0 when row b evaluated
    cleanly, else the 1-based picture whose invariants are undefined.
    """
    X = np.atleast_2d(np.asarray(unknowns, dtype=np.float64))
    lay = problem.layout
    full = np.empty((len(X), lay.size))
    for i, v in problem.gauge.fixed:
        full[:, i] = v
    full[:, problem.free_mask] = X
    ncam = 3 * lay.per_camera * lay.t
    cams = full[:, :ncam].reshape(len(X), lay.t, lay.per_camera, 3)
    objs = full[:, ncam:].reshape(len(X), lay.n, 3)
    evaluate = BATCH_EVALUATORS[problem.variant]
    m = vector_length(problem.variant, problem.n)
    R = np.empty((len(X), m * lay.t))
    bad = np.zeros(len(X), dtype=int)
    for tau, target in enumerate(problem.targets.vectors):
        values, status = evaluate(cams[:, tau, 0], cams[:, tau, 1:], objs)
        R[:, tau * m:(tau + 1) * m] = values - target.values
        bad[(status != 0) & (bad == 0)] = tau + 1
    return R, bad


def assemble_residuals(problem: ReconstructionProblem, unknowns) -> np.ndarray:
    """Invariant values minus targets; pictures outer, invariant order inner."""
    unknowns = np.asarray(unknowns, dtype=np.float64)
    if unknowns.shape != (problem.n_unknowns,):
        raise ValueError(f"expected {problem.n_unknowns} unknowns, got {unknowns.shape}")
    R, bad = batch_residuals(problem, unknowns)
    if bad[0]:
        tau = int(bad[0])
        cams, objs = problem.layout.split(problem.expand(unknowns))
        cam = cams[tau - 1]
        try:
            invariants(SceneConfig(problem.variant, cam[0], objs, cam[1:]))
        except (DegenerateConfiguration, ValueError) as exc:
            raise EvaluationError(f"picture {tau}: {exc}", picture=tau, cause=exc) from exc
        raise EvaluationError(f"picture {tau}: invariants undefined", picture=tau)
    return R[0]


def residual_jacobian(problem: ReconstructionProblem, x, r0) -> np.ndarray:
    """Forward-difference Jacobian evaluated in one batch; columns whose forward
    point is degenerate use a backward step instead."""
    x = np.asarray(x, dtype=np.float64)
    h = problem.options.fd_step * np.maximum(1.0, np.abs(x))
    X = x + np.diag(h)
    R, bad = batch_residuals(problem, X)
    J = (R - r0).T / h
    for j in np.flatnonzero(bad):
        xm = x.copy()
        xm[j] -= h[j]
        J[:, j] = (r0 - assemble_residuals(problem, xm)) / h[j]
    return J


def compute_targets(pictures, variant) -> tuple[InvariantTargets, list[SceneConfig]]:
    """Embed every picture and evaluate its invariants."""
    variant = Variant.parse(variant)
    embedded, vectors = [], []
    for tau in range(pictures.t):
        try:
            cfg = pictures.embed(tau, variant)
            vectors.append(invariants(cfg))
        except DegenerateConfiguration as exc:
            raise DegenerateTargets(f"picture {tau + 1}: {exc}") from exc
        embedded.append(cfg)
    return InvariantTargets(tuple(vectors)), embedded


def initialize(problem: ReconstructionProblem, embedded, seed) -> np.ndarray:
    """Starting unknowns in the gauge frame of picture 1.

    Object points sit on the picture-1 rays at depth ``init_depth`` (O1 at its
    pinned unit depth for Base); later camera centers start at the origin plus
    a seeded perturbation, carrying their auxiliary points at the embedded
    offsets rotated into the gauge frame.
    """
    opts = problem.options
    rng = np.random.default_rng(seed)
    lay = problem.layout
    rot = solve_frame(embedded[0]).rotation

    dirs = embedded[0].points - embedded[0].p0
    dirs = dirs @ rot.T
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    objs = opts.init_depth * dirs

    cams = np.zeros((lay.t, lay.per_camera, 3))
    for tau, cfg in enumerate(embedded):
        center = np.zeros(3)
        if tau > 0:
            center = rng.uniform(-opts.init_perturbation, opts.init_perturbation, size=3)
        cams[tau, 0] = center
        cams[tau, 1:] = center + (cfg.aux - cfg.p0) @ rot.T

    full = lay.join(cams, objs)
    for i, v in problem.gauge.fixed:
        full[i] = v
    return problem.reduce(full)


def two_view_start(problem: ReconstructionProblem, embedded):
    """Starting unknowns from calibrated two-view geometry, or None.

    The essential matrix between picture 1 and the last picture fixes their
    relative pose; triangulating the rays gives the object points, each other
    camera's rotation comes from its own essential matrix with picture 1 and
    its center from linear resection.  Needs n >= 8 and a real baseline.
    """
    if problem.n < 8 or problem.t < 2:
        return None
    lay = problem.layout
    rays = [cfg.points - cfg.p0 for cfg in embedded]
    try:
        R, t, objs = twoview.relative_pose(rays[0], rays[-1])
        if np.linalg.norm(objs, axis=1).max() > 1e6 * np.linalg.norm(t):
            return None
        centers, rots = [np.zeros(3)], [np.eye(3)]
        for tau in range(1, lay.t):
            Rt = R if tau == lay.t - 1 else twoview.relative_pose(rays[0], rays[tau])[0]
            centers.append(twoview.resect_center(objs, rays[tau], Rt))
            rots.append(Rt)
    except (np.linalg.LinAlgError, ValueError):
        return None

    rot = solve_frame(embedded[0]).rotation
    if problem.variant is Variant.BASE:
        scale = 1.0 / np.linalg.norm(objs[0])
    else:
        scale = problem.options.init_depth / np.mean(np.linalg.norm(objs, axis=1))
    cams = np.zeros((lay.t, lay.per_camera, 3))
    for tau, cfg in enumerate(embedded):
        c = scale * rot @ centers[tau]
        cams[tau, 0] = c
        cams[tau, 1:] = c + (cfg.aux - cfg.p0) @ rots[tau] @ rot.T
    full = lay.join(cams, scale * objs @ rot.T)
    for i, v in problem.gauge.fixed:
        full[i] = v
    x0 = problem.reduce(full)
    return x0 if np.all(np.isfinite(x0)) else None


@dataclass
class ReconstructionResult:
    variant: Variant
    object_points: np.ndarray
    camera_centers: np.ndarray
    camera_aux: np.ndarray
    residuals: np.ndarray
    residual_rms: float
    iterations: int
    converged: bool
    unknowns: np.ndarray
    diagnostics: LMDiagnostics
    start_index: int = 0
    start_costs: list = field(default_factory=list)

    @property
    def cost(self) -> float:
        return 0.5 * float(self.residuals @ self.residuals)


def reflected_start(problem: ReconstructionProblem, unknowns) -> np.ndarray:
    """Depth-reversed partner of a solution, used as a second starting point.

    Few, nearly orthographic pictures admit a mirror solution with the relief
    inverted.  The object points are reflected through the plane across the
    picture-1 viewing direction at their centroid (then slid back onto the
    picture-1 rays), and every later camera is turned half a revolution about
    that viewing direction through the centroid.
    """
    lay = problem.layout
    cams, objs = lay.split(problem.expand(unknowns))
    cams, objs = cams.copy(), objs.copy()
    c0 = cams[0, 0]
    cen = objs.mean(axis=0)
    a = (cen - c0) / np.linalg.norm(cen - c0)
    rays = objs - c0
    rays /= np.linalg.norm(rays, axis=1)[:, None]
    mirrored = objs - 2 * np.outer((objs - cen) @ a, a)
    objs = c0 + rays * (((mirrored - c0) @ a) / (rays @ a))[:, None]
    half_turn = 2 * np.outer(a, a) - np.eye(3)
    cams[1:] = cen + (cams[1:] - cen) @ half_turn.T
    if problem.variant is Variant.BASE:
        scale = 1.0 / np.linalg.norm(objs[0] - c0)
        objs = c0 + scale * (objs - c0)
        cams = c0 + scale * (cams - c0)
    full = lay.join(cams, objs)
    for i, v in problem.gauge.fixed:
        full[i] = v
    return problem.reduce(full)


def _run(problem, x0):
    try:
        return levenberg_marquardt(lambda x: assemble_residuals(problem, x), x0, problem.options,
                                   lambda x, r: residual_jacobian(problem, x, r))
    except AllStepsRejected as exc:
        exc.diagnostics.reason = str(exc)
        return exc.x, exc.diagnostics


def _fix_half_space(problem, x):
    """Base gauge: turn the solution half a revolution about O1 if O2 has y < 0."""
    if problem.variant is not Variant.BASE:
        return x
    lay = problem.layout
    full = problem.expand(x)
    if full[lay.object_index(1, 1)] >= 0:
        return x
    flip = np.array([1.0, -1.0, -1.0])
    return problem.reduce((full.reshape(-1, 3) * flip).ravel())


def solve(problem: ReconstructionProblem, embedded) -> ReconstructionResult:
    """Run LM from every start and keep the lowest final cost (ties go to the
    lowest start index).

    Starts 0..multistart-1 come from ``initialize``; one more start from
    ``two_view_start`` is appended when it is available.  Every start is
    followed by a second run from its depth-reversed partner, and the better
    of the pair represents that start.
    """
    opts = problem.options
    starts = [initialize(problem, embedded, [opts.seed, k]) for k in range(opts.multistart)]
    extra = two_view_start(problem, embedded)
    if extra is not None:
        starts.append(extra)

    best = None
    costs = []
    for k, x0 in enumerate(starts):
        try:
            x, diag = _run(problem, x0)
        except EvaluationError as exc:
            log.info("start %d: initial point not evaluable (%s)", k, exc)
            costs.append(np.inf)
            continue
        try:
            x2, diag2 = _run(problem, reflected_start(problem, x))
            if diag2.cost < diag.cost:
                x, diag = x2, diag2
        except (EvaluationError, ValueError) as exc:
            log.info("start %d: reflected start not evaluable (%s)", k, exc)
        costs.append(diag.cost)
        log.info("start %d: cost %.3e after %d iterations (%s)", k, diag.cost, diag.iterations,
                 diag.reason)
        if best is None or diag.cost < best[2].cost:
            best = (k, x, diag)
    if best is None:
        raise DegenerateTargets("no starting point could be evaluated")

    k, x, diag = best
    x = _fix_half_space(problem, x)
    r = assemble_residuals(problem, x)
    cams, objs = problem.layout.split(problem.expand(x))
    return ReconstructionResult(problem.variant, objs.copy(), cams[:, 0].copy(), cams[:, 1:].copy(),
                                r, float(np.sqrt(np.mean(r * r))), diag.iterations, diag.converged,
                                x, diag, k, costs)


def reconstruct(pictures, variant=None, options: SolverOptions | None = None) -> ReconstructionResult:
    """Embed, compute targets, fix the gauge, initialize and solve."""
    variant = Variant.parse(variant if variant is not None else pictures.variant)
    n, t = pictures.n, pictures.t
    if not counting_ok(variant, n, t):
        raise InsufficientData(
            f"{equation_count(variant, n, t)} equations for {unknown_count(variant, n, t)} unknowns "
            f"(n={n}, t={t}); need n > 3 and t >= (3n-6)/(2n-6)")
    targets, embedded = compute_targets(pictures, variant)
    problem = ReconstructionProblem.from_targets(targets, options)
    return solve(problem, embedded)
