"""Fixed-point operator of the coupled problem, Picard iteration and a posteriori residuals.

Each component of the operator is discretized once (a :class:`KernelPlan`):
the fractional integral at every grid node and at the interior boundary point
is a fixed weighted sum over quadrature nodes ``s``.  Applying the operator
then means interpolating the current iterate at ``s``, evaluating the
right-hand side there and contracting with the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import ConvergenceError, InputError
from .expression import eval_expr
from .problem import BvpProblem, GridFunction, compute_deltas, delta_for, grid_nodes
from .quadrature import DEFAULT_LEVELS, DEFAULT_N, kernel_nodes, sample

DEFAULT_GRID_N = 200


class KernelPlan:
    """Quadrature plan for one component: x = I^ord h + c (psi(t) - psi(0)),
    c = (I^ord h(1) - mult I^ord h(point)) / delta.
    """

    def __init__(self, psi, order, mult, point, grid_n, quad_n, levels):
        self.psi, self.order, self.mult, self.point = psi, order, mult, point
        self.grid_n = grid_n
        self.nodes = grid_nodes(grid_n)
        self.delta = delta_for(psi, mult, point)
        targets = np.append(self.nodes, point)
        s, w = kernel_nodes(psi, 0.0, targets, order - 1.0, quad_n, levels)
        w = w / math.gamma(order)
        self.shape = s.shape
        self.s = s.ravel()
        self.w = w.ravel()
        self.row = np.repeat(np.arange(s.shape[0]), s.shape[1])
        interval = np.clip(np.floor(self.s * grid_n).astype(int), 0, grid_n - 1)
        self._order = np.argsort(interval, kind="stable")
        self._starts = np.searchsorted(interval[self._order], np.arange(grid_n + 1))
        psi0 = psi.value(0.0)
        self.w_nodes = np.asarray(psi.value(self.nodes)) - psi0
        self.w_point = psi.value(point) - psi0

    def integrals(self, values):
        """Fractional integrals at all targets from forcing values at ``self.s``."""
        v = np.asarray(values, dtype=float)
        v = v.reshape(self.shape + v.shape[1:])
        w = self.w.reshape(self.shape)
        return np.einsum("mq,mq...->m...", w, v)

    def assemble(self, integrals):
        """Map target integrals to (values at grid nodes, value at the boundary point)."""
        n = self.grid_n
        at_nodes, at_one, at_point = integrals[: n + 1], integrals[n], integrals[n + 1]
        c = (at_one - self.mult * at_point) / self.delta
        w_nodes = self.w_nodes.reshape((-1,) + (1,) * (np.ndim(c)))
        return at_nodes + c * w_nodes, at_point + c * self.w_point

    def window(self, j):
        """Indices of quadrature nodes whose interpolated value depends on grid value j."""
        lo = max(j - 3, 0)
        hi = min(j + 3, self.grid_n)
        return self._order[self._starts[lo]:self._starts[hi]]


@lru_cache(maxsize=16)
def kernel_plan(psi, order, mult, point, grid_n=DEFAULT_GRID_N, quad_n=DEFAULT_N,
                levels=DEFAULT_LEVELS) -> KernelPlan:
    return KernelPlan(psi, order, mult, point, grid_n, quad_n, levels)


def _pchip(values, nodes):
    return PchipInterpolator(nodes, values, axis=0)


class Discretization:
    """Discrete operator T = (T1, T2) for a problem on a uniform grid."""

    def __init__(self, problem: BvpProblem, grid_n=DEFAULT_GRID_N, quad_n=DEFAULT_N,
                 levels=DEFAULT_LEVELS):
        compute_deltas(problem)
        self.problem = problem
        self.grid_n = grid_n
        self.nodes = grid_nodes(grid_n)
        p = problem
        self.plans = (
            kernel_plan(p.psi, p.alpha, p.lam, p.eta, grid_n, quad_n, levels),
            kernel_plan(p.psi, p.beta, p.mu, p.xi, grid_n, quad_n, levels),
        )
        self.rhs = (p.f, p.g)

    @property
    def size(self) -> int:
        return 2 * (self.grid_n + 1)

    def _forcing(self, k, ix, iy, idx=None):
        plan = self.plans[k]
        s = plan.s if idx is None else plan.s[idx]
        X, Y = ix(s), iy(s)
        tt = s.reshape(s.shape + (1,) * (X.ndim - 1))
        return eval_expr(self.rhs[k], t=tt, x=X, y=Y)

    def apply_full(self, xv, yv):
        """Return (T1 at nodes, T2 at nodes, T1 at eta, T2 at xi).

        ``xv`` and ``yv`` hold node values and may carry one trailing batch axis.
        """
        ix, iy = _pchip(xv, self.nodes), _pchip(yv, self.nodes)
        out = []
        for k in (0, 1):
            plan = self.plans[k]
            out.append(plan.assemble(plan.integrals(self._forcing(k, ix, iy))))
        (tx, tx_eta), (ty, ty_xi) = out
        return tx, ty, tx_eta, ty_xi

    def apply(self, u):
        """T on the stacked vector u = [x nodes, y nodes]."""
        n1 = self.grid_n + 1
        tx, ty, _, _ = self.apply_full(u[:n1], u[n1:])
        return np.concatenate([tx, ty])

    def jacobian(self, u, rel_step=1.5e-8):
        """Forward-difference Jacobian of T at u (step about sqrt(eps)).

        Perturbing one node value changes the monotone cubic interpolant on at
        most a few neighbouring intervals, so each column only re-evaluates the
        right-hand side at the quadrature nodes in that window.
        """
        n1 = self.grid_n + 1
        xv, yv = u[:n1].copy(), u[n1:].copy()
        ix, iy = _pchip(xv, self.nodes), _pchip(yv, self.nodes)
        base = [(ix(pl.s), iy(pl.s)) for pl in self.plans]
        F0 = [eval_expr(self.rhs[k], t=pl.s, x=base[k][0], y=base[k][1])
              for k, pl in enumerate(self.plans)]
        J = np.empty((2 * n1, 2 * n1))
        for col in range(2 * n1):
            which, j = divmod(col, n1)
            vec = xv if which == 0 else yv
            h = rel_step * (1.0 + abs(vec[j]))
            pert = vec.copy()
            pert[j] += h
            ip = _pchip(pert, self.nodes)
            column = []
            for k, plan in enumerate(self.plans):
                idx = plan.window(j)
                s = plan.s[idx]
                X, Y = base[k][0][idx], base[k][1][idx]
                if which == 0:
                    X = ip(s)
                else:
                    Y = ip(s)
                dF = eval_expr(self.rhs[k], t=s, x=X, y=Y) - F0[k][idx]
                dI = np.bincount(plan.row[idx], weights=plan.w[idx] * dF,
                                 minlength=plan.shape[0])
                column.append(plan.assemble(dI)[0])
            J[:, col] = np.concatenate(column) / h
        return J


@lru_cache(maxsize=8)
def discretize(problem, grid_n=DEFAULT_GRID_N, quad_n=DEFAULT_N, levels=DEFAULT_LEVELS):
    return Discretization(problem, grid_n, quad_n, levels)


def apply_T(problem: BvpProblem, x: GridFunction, y: GridFunction, quad_n: int = DEFAULT_N):
    """One application of the fixed-point operator on grid functions."""
    if x.n_intervals != y.n_intervals:
        raise InputError("x and y must live on the same grid")
    disc = discretize(problem, x.n_intervals, quad_n)
    tx, ty, _, _ = disc.apply_full(x.values, y.values)
    return GridFunction(tx), GridFunction(ty)


def solve_linear_bvp(h, psi, order, lam, eta, grid_n=DEFAULT_GRID_N, quad_n=DEFAULT_N,
                     levels=DEFAULT_LEVELS) -> GridFunction:
    """Closed-form solution of the single linear problem with forcing ``h(t)``."""
    alpha = getattr(order, "alpha", order)
    plan = kernel_plan(psi, float(alpha), float(lam), float(eta), grid_n, quad_n, levels)
    values, _ = plan.assemble(plan.integrals(sample(h, plan.s)))
    return GridFunction(values)


# --------------------------------------------------------------------------
# Picard iteration
# --------------------------------------------------------------------------

@dataclass
class SolutionPair:
    x: GridFunction
    y: GridFunction
    iterations: int
    increments: tuple
    final_increment: float
    method: str = "picard"
    converged: bool = True

    @property
    def grid_n(self) -> int:
        return self.x.n_intervals

    def norm(self) -> float:
        return self.x.sup_norm() + self.y.sup_norm()

    def contraction_ratios(self, floor=None):
        """Successive increment ratios, ignoring increments at rounding level."""
        inc = np.asarray(self.increments, dtype=float)
        if floor is None:
            floor = 1e3 * np.finfo(float).eps * max(1.0, self.norm())
        keep = inc[:-1] > floor
        return (inc[1:] / np.where(inc[:-1] > 0, inc[:-1], 1.0))[keep[: len(inc) - 1]]


def picard_solve(problem: BvpProblem, tol=1e-10, max_iter=200, grid_n=DEFAULT_GRID_N,
                 quad_n=DEFAULT_N, start=None) -> SolutionPair:
    """Iterate (x, y) <- T(x, y) from zero until the sup-norm increment is below ``tol``."""
    disc = discretize(problem, grid_n, quad_n)
    n1 = grid_n + 1
    if start is None:
        xv, yv = np.zeros(n1), np.zeros(n1)
    else:
        xv, yv = np.array(start[0], dtype=float), np.array(start[1], dtype=float)
    increments = []
    for it in range(1, max_iter + 1):
        tx, ty, _, _ = disc.apply_full(xv, yv)
        inc = float(np.max(np.abs(tx - xv)) + np.max(np.abs(ty - yv)))
        increments.append(inc)
        xv, yv = tx, ty
        if inc <= tol:
            return SolutionPair(GridFunction(xv), GridFunction(yv), it, tuple(increments), inc)
    last = SolutionPair(GridFunction(xv), GridFunction(yv), max_iter, tuple(increments),
                        increments[-1], converged=False)
    raise ConvergenceError(
        f"Picard iteration did not reach {tol:g} in {max_iter} iterations "
        f"(last increment {increments[-1]:.3g})", best=last, history=increments)


# --------------------------------------------------------------------------
# residuals
# --------------------------------------------------------------------------

def spline_caputo(values, psi, alpha, grid_n, targets):
    """Caputo derivative (order in (1, 2)) of the not-a-knot cubic spline through
    the node values, built in the variable u = psi(t).

    The spline's second derivative is piecewise linear in u, so the weakly
    singular integral is evaluated in closed form panel by panel.
    """
    if not 1.0 < alpha < 2.0:
        raise InputError("spline_caputo supports orders in (1,2)")
    nodes = grid_nodes(grid_n)
    u = np.asarray(psi.value(nodes), dtype=float)
    cs = CubicSpline(u, values)
    c3, c2 = cs.c[0], cs.c[1]
    p = 1.0 - alpha
    out = []
    for t in np.atleast_1d(targets):
        U = psi.value(float(t))
        K = int(np.searchsorted(u, U, side="right")) - 1
        K = min(max(K, 0), grid_n)
        total = 0.0
        for k in range(min(K + 1, grid_n)):
            lo, hi = u[k], min(u[k + 1], U)
            if hi <= lo:
                break
            A, B = 2.0 * c2[k], 6.0 * c3[k]
            z_hi, z_lo = U - lo, U - hi
            total += (A + B * (U - lo)) * (z_hi ** (p + 1) - z_lo ** (p + 1)) / (p + 1)
            total -= B * (z_hi ** (p + 2) - z_lo ** (p + 2)) / (p + 2)
        out.append(total / math.gamma(2.0 - alpha))
    return np.array(out)


@dataclass
class ResidualReport:
    fixed_point_x: float
    fixed_point_y: float
    boundary: dict
    ode_x: float
    ode_y: float
    checkpoints: tuple
    ode_details: dict = field(default_factory=dict)

    @property
    def fixed_point(self) -> float:
        return max(self.fixed_point_x, self.fixed_point_y)

    @property
    def boundary_max(self) -> float:
        return max(self.boundary.values())

    @property
    def ode(self) -> float:
        return max(self.ode_x, self.ode_y)


def _value_at(gf, point, nystrom):
    k = point * gf.n_intervals
    if float(k).is_integer():
        return float(gf.values[int(k)])
    return float(nystrom)


def residual_report(problem: BvpProblem, pair: SolutionPair, quad_n=DEFAULT_N,
                    n_checkpoints=5) -> ResidualReport:
    """Fixed-point, boundary and differential-equation residuals of a solution pair.

    Off-grid values at eta and xi come from the operator itself (Nystrom
    extension).  The equation residual applies the Caputo derivative to a
    cubic spline of the node values at interior checkpoints.
    """
    x, y = pair.x, pair.y
    n = x.n_intervals
    disc = discretize(problem, n, quad_n)
    tx, ty, tx_eta, ty_xi = disc.apply_full(x.values, y.values)
    xe = _value_at(x, problem.eta, tx_eta)
    yx = _value_at(y, problem.xi, ty_xi)
    boundary = {
        "x(0)": abs(float(x.values[0])),
        "x(1)-lam*x(eta)": abs(float(x.values[-1]) - problem.lam * xe),
        "y(0)": abs(float(y.values[0])),
        "y(1)-mu*y(xi)": abs(float(y.values[-1]) - problem.mu * yx),
    }
    idx = np.unique(np.rint(np.arange(1, n_checkpoints + 1) / (n_checkpoints + 1) * n).astype(int))
    tc = idx / n
    xs, ys = x.values[idx], y.values[idx]
    dx = spline_caputo(x.values, problem.psi, problem.alpha, n, tc)
    dy = spline_caputo(y.values, problem.psi, problem.beta, n, tc)
    fx = eval_expr(problem.f, t=tc, x=xs, y=ys)
    fy = eval_expr(problem.g, t=tc, x=xs, y=ys)
    return ResidualReport(
        fixed_point_x=float(np.max(np.abs(x.values - tx))),
        fixed_point_y=float(np.max(np.abs(y.values - ty))),
        boundary=boundary,
        ode_x=float(np.max(np.abs(dx - fx))),
        ode_y=float(np.max(np.abs(dy - fy))),
        checkpoints=tuple(tc),
        ode_details={"caputo_x": dx, "f": fx, "caputo_y": dy, "g": fy},
    )
