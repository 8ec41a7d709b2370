"""Levenberg-Marquardt least squares with forward-difference Jacobians."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllStepsRejected, EvaluationError, NonFiniteResidual

MAX_DAMPING = 1e12


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 10.0
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    fd_step: float = 1e-7
    multistart: int = 1
    seed: int = 0
    init_depth: float = 2.0
    init_perturbation: float = 0.1

    def __post_init__(self):
        for name in ("initial_damping", "gradient_tol", "step_tol", "fd_step",
                     "init_depth", "init_perturbation"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.damping_up <= 1 or self.damping_down <= 1:
            raise ValueError("damping factors must exceed 1")
        if self.max_iterations < 1 or self.multistart < 1:
            raise ValueError("max_iterations and multistart must be >= 1")


@dataclass
class LMDiagnostics:
    cost_trace: list = field(default_factory=list)
    iterations: int = 0
    nfev: int = 0
    converged: bool = False
    reason: str = ""
    damping: float = 0.0

    @property
    def cost(self) -> float:
        return self.cost_trace[-1]


def fd_jacobian(fun, x, r0, rel_step: float = 1e-7) -> np.ndarray:
    """Forward differences, step rel_step * max(1, |x_j|); falls back to a
    backward step where the forward point cannot be evaluated."""
    jac = np.empty((len(r0), len(x)))
    for j in range(len(x)):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += h
        try:
            rp = fun(xp)
        except EvaluationError:
            xp[j] = x[j] - h
            jac[:, j] = (r0 - fun(xp)) / h
            continue
        jac[:, j] = (rp - r0) / h
    return jac


def _evaluate(fun, x):
    r = np.asarray(fun(x), dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise NonFiniteResidual("residual function returned non-finite values")
    return r


def levenberg_marquardt(fun, x0, options: SolverOptions | None = None, jac=None):
    """Minimize 0.5 * |fun(x)|^2 starting from ``x0``.

    Damped normal equations (J^T J + mu diag(J^T J)) dx = -J^T r; mu shrinks on
    accepted steps and grows on rejected ones.  A trial point whose residual
    cannot be evaluated (EvaluationError) or is non-finite counts as rejected.

    ``jac(x, r)``, when given, returns the Jacobian at x (r is the residual
    there); by default forward differences are used.

    Returns ``(x, diagnostics)``.
    """
    opts = options or SolverOptions()
    x = np.array(x0, dtype=np.float64)
    diag = LMDiagnostics()
    r = _evaluate(fun, x)
    diag.nfev = 1
    cost = 0.5 * float(r @ r)
    diag.cost_trace.append(cost)
    mu = opts.initial_damping

    if jac is None:
        def jacobian(xx, rr):
            diag.nfev += len(xx)
            return fd_jacobian(fun, xx, rr, opts.fd_step)
    else:
        def jacobian(xx, rr):
            diag.nfev += len(xx)
            return np.asarray(jac(xx, rr), dtype=np.float64)

    while True:
        if cost == 0.0:
            diag.converged, diag.reason = True, "zero residual"
            break
        J = jacobian(x, r)
        grad = J.T @ r
        if np.max(np.abs(grad)) < opts.gradient_tol:
            diag.converged, diag.reason = True, "gradient tolerance"
            break
        if diag.iterations >= opts.max_iterations:
            diag.reason = "iteration limit"
            break
        A = J.T @ J
        scale = np.maximum(np.diag(A), 1e-12 * max(1.0, np.max(np.diag(A))))
        while True:
            step = np.linalg.solve(A + mu * np.diag(scale), -grad)
            if np.linalg.norm(step) <= opts.step_tol * (np.linalg.norm(x) + opts.step_tol):
                diag.converged, diag.reason = True, "step tolerance"
                break
            x_new = x + step
            try:
                r_new = fun(x_new)
                diag.nfev += 1
                r_new = np.asarray(r_new, dtype=np.float64)
                ok = bool(np.all(np.isfinite(r_new)))
            except EvaluationError:
                ok = False
            if ok:
                cost_new = 0.5 * float(r_new @ r_new)
                if cost_new < cost:
                    x, r, cost = x_new, r_new, cost_new
                    diag.cost_trace.append(cost)
                    mu = max(mu / opts.damping_down, 1e-15)
                    break
            mu *= opts.damping_up
            if mu > MAX_DAMPING:
                diag.damping = mu
                err = AllStepsRejected(f"no descent step found (damping {mu:.1e})")
                err.x, err.diagnostics = x, diag
                raise err
        if diag.converged:
            break
        diag.iterations += 1

    diag.damping = mu
    return x, diag
