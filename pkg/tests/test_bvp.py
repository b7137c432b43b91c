import math

import numpy as np
import pytest

import problems as P
from psicaputo.bvp import (apply_T, discretize, picard_solve, residual_report, solve_linear_bvp,
                           spline_caputo)
from psicaputo.errors import ConvergenceError, InputError
from psicaputo.problem import BvpProblem, GridFunction, grid_nodes
from psicaputo.psi import PsiSpec

POWER = PsiSpec.power(3, 2)
IDENT = PsiSpec.identity()
H = 2 / math.gamma(1.5) * math.sqrt(3)


def test_linear_bvp_zero_forcing():
    x = solve_linear_bvp(lambda s: np.zeros_like(s), POWER, 1.5, 1.0, 0.5)
    assert np.all(x.values == 0.0)


def test_linear_bvp_manufactured():
    x = solve_linear_bvp(lambda s: H * s, POWER, 1.5, 1.0, 0.5)
    assert np.max(np.abs(x.values - P.exact(x.nodes))) <= 1e-6
    assert x.values[-1] == pytest.approx(-2.25, abs=1e-8)


def test_linear_bvp_constant_forcing_identity_psi():
    # x = t^1.5 / Gamma(2.5) + c t with c fixed by x(1) = x(1/2)
    x = solve_linear_bvp(lambda s: np.ones_like(s), IDENT, 1.5, 1.0, 0.5)
    g = math.gamma(2.5)
    c = (1 / -0.5) * (1 / g) * (1 - 0.5 ** 1.5)
    t = x.nodes
    assert np.max(np.abs(x.values - (t ** 1.5 / g + c * t))) <= 1e-12


def test_linear_bvp_boundary_conditions():
    lam, eta = 0.7, 0.3
    x = solve_linear_bvp(lambda s: np.cos(5 * s), POWER, 1.7, lam, eta, grid_n=100)
    assert x.values[0] == 0.0
    assert abs(x.values[-1] - lam * x.values[30]) <= 1e-12


def test_apply_T_of_zero_forcing_is_zero():
    prob = BvpProblem(1.5, 1.5, 0.5, 0.5, 1.0, 1.0, "0", "0", "3*t^2")
    z = GridFunction.zeros(40)
    tx, ty = apply_T(prob, z, z)
    assert np.all(tx.values == 0) and np.all(ty.values == 0)


def test_apply_T_with_pure_forcing_matches_linear_solve():
    prob = BvpProblem(1.5, 1.3, 0.5, 0.4, 1.0, 2.0, "exp(t)", "sin(3*t)", "3*t^2")
    z = GridFunction.zeros(100)
    tx, ty = apply_T(prob, z, z)
    ref_x = solve_linear_bvp(np.exp, POWER, 1.5, 1.0, 0.5, grid_n=100)
    ref_y = solve_linear_bvp(lambda s: np.sin(3 * s), POWER, 1.3, 2.0, 0.4, grid_n=100)
    assert np.max(np.abs(tx.values - ref_x.values)) <= 1e-10
    assert np.max(np.abs(ty.values - ref_y.values)) <= 1e-10


def test_apply_T_grid_mismatch():
    with pytest.raises(InputError):
        apply_T(P.EX41, GridFunction.zeros(10), GridFunction.zeros(20))


def test_example_operator_boundary_identity_at_origin():
    disc = discretize(P.EX41)
    n1 = disc.grid_n + 1
    tx, ty, tx_eta, ty_xi = disc.apply_full(np.zeros(n1), np.zeros(n1))
    assert tx[0] == 0.0 and ty[0] == 0.0
    assert abs(tx[-1] - tx_eta) <= 1e-12 and abs(ty[-1] - ty_xi) <= 1e-12
    # eta = 1/2 is a grid node, xi = 1/3 is not
    assert tx_eta == pytest.approx(tx[100], abs=1e-14)


def test_boundary_identities_for_random_pairs():
    rng = np.random.default_rng(5)
    disc = discretize(P.EX41)
    for _ in range(10):
        x, y = rng.normal(size=(2, disc.grid_n + 1)) * rng.uniform(0.1, 50)
        tx, ty, tx_eta, ty_xi = disc.apply_full(x, y)
        scale = 1 + P.sup(tx) + P.sup(ty)
        assert tx[0] == 0.0 and ty[0] == 0.0
        assert abs(tx[-1] - tx_eta) <= 1e-8 * scale
        assert abs(ty[-1] - ty_xi) <= 1e-8 * scale


def test_batched_apply_matches_columns():
    disc = discretize(P.EX41, 40)
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(2, 41, 3))
    tx, ty, _, _ = disc.apply_full(x, y)
    # equal up to summation order
    for j in range(3):
        cx, cy, _, _ = disc.apply_full(x[:, j], y[:, j])
        assert P.sup(tx[:, j] - cx) <= 1e-13 * (1 + P.sup(cx))
        assert P.sup(ty[:, j] - cy) <= 1e-13 * (1 + P.sup(cy))


# -- Picard -------------------------------------------------------------------

def test_picard_zero_problem():
    prob = BvpProblem(1.5, 1.5, 0.5, 0.5, 1.0, 1.0, "0", "0", "t")
    sol = picard_solve(prob)
    assert sol.iterations == 1 and sol.norm() == 0.0


def test_picard_manufactured():
    sol = picard_solve(P.manufactured())
    t = sol.x.nodes
    assert np.max(np.abs(sol.x.values - P.exact(t))) <= 1e-6
    assert np.max(np.abs(sol.y.values - P.exact(t))) <= 1e-6


def test_picard_example_4_1_contracts():
    sol = picard_solve(P.EX41)
    assert sol.converged and sol.final_increment <= 1e-10
    ratios = sol.contraction_ratios()
    assert len(ratios) >= 2 and np.max(ratios) <= 0.36


def test_picard_example_4_2_respects_bound():
    sol = picard_solve(P.EX42)
    assert sol.norm() <= 0.8149750109 + 1e-6
    assert sol.norm() == pytest.approx(0.0227578956, rel=1e-6)


def test_picard_failure_carries_best_iterate():
    with pytest.raises(ConvergenceError) as info:
        picard_solve(P.EX41, tol=1e-14, max_iter=3)
    best = info.value.best
    assert best.iterations == 3 and not best.converged
    assert len(info.value.history) == 3


def test_picard_start_is_respected():
    first = picard_solve(P.EX41)
    again = picard_solve(P.EX41, start=(first.x.values, first.y.values))
    assert again.iterations == 1


def test_picard_is_deterministic():
    a, b = picard_solve(P.EX41), picard_solve(P.EX41)
    assert np.array_equal(a.x.values, b.x.values) and np.array_equal(a.y.values, b.y.values)


def test_grid_refinement_example_4_2():
    tol = 1e-10
    coarse = picard_solve(P.EX42, tol=tol, grid_n=100)
    fine = picard_solve(P.EX42, tol=tol, grid_n=200)
    d = max(P.sup(fine.x.values[::2] - coarse.x.values), P.sup(fine.y.values[::2] - coarse.y.values))
    assert d <= 10 * tol


def test_grid_refinement_example_4_1():
    # f depends on |y|; the composed integrand is only C^1 and the fixed
    # quadrature rule settles near 1e-8, not at the solver tolerance
    coarse = picard_solve(P.EX41, grid_n=100)
    fine = picard_solve(P.EX41, grid_n=200)
    d = max(P.sup(fine.x.values[::2] - coarse.x.values), P.sup(fine.y.values[::2] - coarse.y.values))
    assert d <= 1e-7


# -- residuals --------------------------------------------------------------------

def test_residuals_manufactured():
    prob = P.manufactured()
    rep = residual_report(prob, picard_solve(prob))
    assert rep.fixed_point <= 1e-8
    assert rep.boundary_max <= 1e-8
    assert rep.ode <= 1e-3
    assert len(rep.checkpoints) == 5


def test_residuals_zero_problem():
    prob = BvpProblem(1.5, 1.5, 0.5, 0.5, 1.0, 1.0, "0", "0", "t")
    rep = residual_report(prob, picard_solve(prob))
    assert rep.fixed_point == 0.0 and rep.boundary_max == 0.0 and rep.ode == 0.0


def test_residuals_example_4_1():
    rep = residual_report(P.EX41, picard_solve(P.EX41))
    assert rep.fixed_point <= 1e-8 and rep.boundary_max <= 1e-8


def test_spline_caputo_of_w_squared():
    n = 200
    vals = (3 * grid_nodes(n) ** 2) ** 2
    t = np.array([0.25, 0.5, 0.9])
    assert np.allclose(spline_caputo(vals, POWER, 1.5, n, t), H * t, rtol=1e-6, atol=1e-6)


def test_spline_caputo_order_range():
    with pytest.raises(InputError):
        spline_caputo(np.zeros(9), POWER, 2.5, 8, [0.5])
