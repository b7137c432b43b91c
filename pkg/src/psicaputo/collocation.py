"""Damped Newton solver for the discrete fixed-point equations u = T(u).

It shares the discretization with :func:`psicaputo.bvp.picard_solve`, so a
comparison of the two isolates the iteration scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvp import DEFAULT_GRID_N, SolutionPair, discretize
from .errors import ConvergenceError, InputError
from .problem import GridFunction
from .quadrature import DEFAULT_N

PICARD_FALLBACK = 50
MAX_HALVINGS = 30


class CollocationSystem:
    """Residual u - T(u) on the stacked node vector [x; y] and its Jacobian."""

    def __init__(self, problem, grid_n=DEFAULT_GRID_N, quad_n=DEFAULT_N):
        self.disc = discretize(problem, grid_n, quad_n)
        self.size = self.disc.size

    def residual(self, u):
        return u - self.disc.apply(u)

    def jacobian(self, u):
        return np.eye(self.size) - self.disc.jacobian(u)


def collocation_solve(problem, tol=1e-10, max_newton=50, grid_n=DEFAULT_GRID_N,
                      quad_n=DEFAULT_N) -> SolutionPair:
    """Newton iteration with step halving, started from zero.

    If a step cannot reduce the residual, 50 Picard iterations are run once
    before Newton resumes.
    """
    system = CollocationSystem(problem, grid_n, quad_n)
    n1 = grid_n + 1
    u = np.zeros(system.size)
    r = system.residual(u)
    rnorm = float(np.max(np.abs(r)))
    history = [rnorm]
    fallback_used = False
    steps = 0
    while rnorm > tol:
        if steps >= max_newton:
            raise ConvergenceError(
                f"Newton did not reach {tol:g} in {max_newton} steps "
                f"(residual {rnorm:.3g})", best=u, history=history)
        steps += 1
        delta = np.linalg.solve(system.jacobian(u), -r)
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = u + lam * delta
            r_trial = system.residual(trial)
            n_trial = float(np.max(np.abs(r_trial)))
            if n_trial < rnorm:
                u, r, rnorm = trial, r_trial, n_trial
                break
            lam *= 0.5
        else:
            if fallback_used:
                raise ConvergenceError(
                    f"Newton stalled at residual {rnorm:.3g}", best=u, history=history)
            fallback_used = True
            for _ in range(PICARD_FALLBACK):
                u = system.disc.apply(u)
            r = system.residual(u)
            rnorm = float(np.max(np.abs(r)))
        history.append(rnorm)
    return SolutionPair(GridFunction(u[:n1]), GridFunction(u[n1:]), steps,
                        tuple(history), rnorm, method="newton")


@dataclass(frozen=True)
class DiffReport:
    sup_x: float
    sup_y: float
    l2_x: float
    l2_y: float
    tol: float

    @property
    def sup(self) -> float:
        return max(self.sup_x, self.sup_y)

    @property
    def passed(self) -> bool:
        return self.sup <= self.tol


def cross_validate(a: SolutionPair, b: SolutionPair, tol: float = 1e-6) -> DiffReport:
    """Node-wise sup and L2 (trapezoid) differences between two solutions on one grid."""
    if a.x.n_intervals != b.x.n_intervals:
        raise InputError("solutions live on different grids")
    nodes = a.x.nodes

    def l2(d):
        return float(np.sqrt(np.trapezoid(d * d, nodes)))

    dx = a.x.values - b.x.values
    dy = a.y.values - b.y.values
    return DiffReport(float(np.max(np.abs(dx))), float(np.max(np.abs(dy))), l2(dx), l2(dy), tol)
