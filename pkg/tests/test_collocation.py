import numpy as np
import pytest

import problems as P
from psicaputo.bvp import picard_solve
from psicaputo.collocation import CollocationSystem, collocation_solve, cross_validate
from psicaputo.errors import ConvergenceError, InputError
from psicaputo.problem import BvpProblem


def test_zero_problem_needs_no_step():
    prob = BvpProblem(1.5, 1.5, 0.5, 0.5, 1.0, 1.0, "0", "0", "t")
    sol = collocation_solve(prob)
    assert sol.iterations == 0 and sol.norm() == 0.0 and sol.method == "newton"


def test_manufactured():
    prob = P.manufactured()
    sol = collocation_solve(prob)
    t = sol.x.nodes
    assert np.max(np.abs(sol.x.values - P.exact(t))) <= 1e-6
    assert np.max(np.abs(sol.y.values - P.exact(t))) <= 1e-6
    assert cross_validate(sol, picard_solve(prob)).sup <= 1e-6


def test_agrees_with_picard_on_example_4_1():
    newton = collocation_solve(P.EX41)
    picard = picard_solve(P.EX41)
    diff = cross_validate(picard, newton)
    assert diff.passed and diff.sup <= 1e-6
    # same discretization: the two agree to roughly the solver tolerance
    assert diff.sup <= 10 * 1e-10


def test_agrees_with_picard_on_example_4_2():
    diff = cross_validate(picard_solve(P.EX42), collocation_solve(P.EX42))
    assert diff.sup <= 1e-9


def test_quadratic_tail():
    # strongly nonlinear problem so that several steps fall in the tail
    prob = BvpProblem(1.5, 1.5, 0.5, 0.5, 1.0, 1.0, "3*atan(x+y)+2", "2*exp(x/4)", "3*t^2")
    r = np.array(collocation_solve(prob, grid_n=100).increments)
    # pairs ending at the rounding floor carry no information
    pairs = [(a, b) for a, b in zip(r[:-1], r[1:]) if a < 1e-1 and b > 1e-12]
    c = pairs[0][1] / pairs[0][0] ** 2
    tail = [(a, b) for a, b in pairs if a < 1e-3]
    assert tail
    for a, b in tail:
        assert b <= 10 * c * a ** 2


def test_residual_vanishes_at_solution():
    sol = collocation_solve(P.EX41)
    system = CollocationSystem(P.EX41)
    u = np.concatenate([sol.x.values, sol.y.values])
    assert np.max(np.abs(system.residual(u))) <= 1e-10


def test_jacobian_of_linear_problem_is_identity():
    system = CollocationSystem(P.manufactured(), grid_n=20)
    J = system.jacobian(np.zeros(system.size))
    assert np.array_equal(J, np.eye(system.size))


def test_cross_validate_self_is_zero():
    sol = picard_solve(P.EX41)
    diff = cross_validate(sol, sol)
    assert diff.sup == 0.0 and diff.l2_x == 0.0 and diff.l2_y == 0.0


def test_cross_validate_grid_mismatch():
    with pytest.raises(InputError):
        cross_validate(picard_solve(P.EX41, grid_n=100), picard_solve(P.EX41))


def test_cross_validate_l2_of_constant_shift():
    sol = picard_solve(P.EX41)
    shifted = type(sol)(type(sol.x)(sol.x.values + 0.5), sol.y, 1, (0.0,), 0.0)
    diff = cross_validate(sol, shifted, tol=0.1)
    assert diff.sup_x == pytest.approx(0.5) and diff.l2_x == pytest.approx(0.5)
    assert not diff.passed


def test_step_limit_raises_with_best_iterate():
    with pytest.raises(ConvergenceError) as info:
        collocation_solve(P.EX41, tol=1e-14, max_newton=1)
    assert info.value.best.shape == (402,)
    assert len(info.value.history) == 2
