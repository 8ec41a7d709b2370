import numpy as np
import pytest

from invsfm.errors import AllStepsRejected, EvaluationError, NonFiniteResidual
from invsfm.lm import SolverOptions, fd_jacobian, levenberg_marquardt


def rosenbrock(x):
    return np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])


def monotone(diag):
    return all(b <= a for a, b in zip(diag.cost_trace, diag.cost_trace[1:]))


def test_linear_residual_converges_fast():
    c = np.array([1.0, -2.0, 3.5])
    x, diag = levenberg_marquardt(lambda x: x - c, np.zeros(3))
    np.testing.assert_allclose(x, c, atol=1e-10)
    assert diag.converged and diag.iterations <= 3


def test_rosenbrock_minimum():
    x, diag = levenberg_marquardt(rosenbrock, [-1.2, 1.0])
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-8)
    assert diag.converged and monotone(diag)


def test_nan_at_start():
    with pytest.raises(NonFiniteResidual):
        levenberg_marquardt(lambda x: np.array([np.nan]), [0.0])


def test_all_steps_rejected_carries_state():
    calls = {"n": 0}

    def fun(x):
        calls["n"] += 1
        if calls["n"] > 1 and np.any(x != 0.5):
            raise EvaluationError("outside domain")
        return np.array([x[0] - 2.0])

    with pytest.raises(AllStepsRejected) as info:
        levenberg_marquardt(fun, [0.5], jac=lambda x, r: np.array([[1.0]]))
    assert info.value.x[0] == 0.5
    assert info.value.diagnostics.cost_trace == [1.125]


def test_evaluation_error_is_a_rejected_step():
    def fun(x):
        if x[0] > 1.5:
            raise EvaluationError("wall")
        return np.array([x[0] - 1.0, 0.1 * x[0]])

    x, diag = levenberg_marquardt(fun, [-3.0])
    assert x[0] < 1.5 and monotone(diag)


def test_iteration_limit():
    x, diag = levenberg_marquardt(rosenbrock, [-1.2, 1.0], SolverOptions(max_iterations=2))
    assert not diag.converged and diag.reason == "iteration limit" and diag.iterations == 2


def test_fd_jacobian_matches_analytic():
    x = np.array([0.3, -0.7])
    J = fd_jacobian(rosenbrock, x, rosenbrock(x))
    np.testing.assert_allclose(J, [[-20 * x[0], 10], [-1, 0]], atol=1e-5)


def test_options_validated():
    with pytest.raises(ValueError):
        SolverOptions(gradient_tol=0)
    with pytest.raises(ValueError):
        SolverOptions(damping_up=1.0)
    with pytest.raises(ValueError):
        SolverOptions(multistart=0)


@pytest.mark.parametrize("seed", range(10))
def test_cost_monotone_random_problems(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(6, 3))
    b = rng.normal(size=6)
    _, diag = levenberg_marquardt(lambda x: np.tanh(A @ x) - 0.5 * b, rng.normal(size=3))
    assert monotone(diag)
