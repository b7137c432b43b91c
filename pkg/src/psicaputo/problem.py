"""The coupled four-point problem, its boundary determinants and grid functions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import expression as ex
from .calculus import FracOrder
from .errors import InputError, SingularProblemError
from .psi import PsiSpec

DEGENERACY = 1e-12


def _as_expr(value):
    node = ex.parse(value) if isinstance(value, str) else value
    extra = ex.variables(node) - {"t", "x", "y"}
    if extra:
        raise InputError(f"unexpected variables {sorted(extra)}")
    return node


@dataclass(frozen=True)
class BvpProblem:
    """Coupled system with orders in (1, 2) and conditions x(0)=0, x(1)=lam x(eta)
    (and y(0)=0, y(1)=mu y(xi)).

    ``f`` and ``g`` are expressions in ``t, x, y`` (strings are parsed).
    """

    alpha: float
    beta: float
    eta: float
    xi: float
    lam: float
    mu: float
    f: ex.Node
    g: ex.Node
    psi: PsiSpec

    def __post_init__(self):
        object.__setattr__(self, "f", _as_expr(self.f))
        object.__setattr__(self, "g", _as_expr(self.g))
        if isinstance(self.psi, str):
            object.__setattr__(self, "psi", PsiSpec.from_expression(self.psi))
        for name in ("alpha", "beta"):
            v = float(getattr(self, name))
            if not 1.0 < v < 2.0:
                raise InputError(f"{name} must lie in (1,2)")
            object.__setattr__(self, name, v)
        for name in ("eta", "xi"):
            v = float(getattr(self, name))
            if not 0.0 < v < 1.0:
                raise InputError(f"{name} must lie in (0,1)")
            object.__setattr__(self, name, v)
        for name in ("lam", "mu"):
            v = float(getattr(self, name))
            if not v > 0.0:
                raise InputError(f"{name} must be positive")
            object.__setattr__(self, name, v)

    @property
    def orders(self):
        return FracOrder(self.alpha), FracOrder(self.beta)

    @cached_property
    def psi_span(self) -> float:
        return self.psi.value(1.0) - self.psi.value(0.0)


def _delta(psi, mult, point):
    span = psi.value(1.0) - psi.value(0.0)
    d = mult * (psi.value(point) - psi.value(0.0)) - span
    return d, abs(d) < DEGENERACY * span


def compute_deltas(problem: BvpProblem):
    """Boundary determinants (Delta1, Delta2); raises if either is degenerate."""
    d1, bad1 = _delta(problem.psi, problem.lam, problem.eta)
    d2, bad2 = _delta(problem.psi, problem.mu, problem.xi)
    if bad1 or bad2:
        which = "Delta1" if bad1 else "Delta2"
        raise SingularProblemError(f"{which} vanishes; the boundary problem is singular")
    return d1, d2


def delta_for(psi, mult, point):
    d, bad = _delta(psi, mult, point)
    if bad:
        raise SingularProblemError("boundary determinant vanishes")
    return d


class GridFunction:
    """Values on the uniform grid t_i = i/N with monotone cubic interpolation.

    ``values`` may carry trailing batch axes.  Evaluation at grid nodes
    returns the stored values exactly.
    """

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.shape[0] < 9 or values.shape[0] % 2 == 0:
            raise InputError("a grid function needs an odd number (>= 9) of nodes")
        values.setflags(write=False)
        self.values = values

    @classmethod
    def zeros(cls, grid_n, batch=()):
        return cls(np.zeros((grid_n + 1, *batch)))

    @classmethod
    def sample(cls, fn, grid_n):
        return cls(np.asarray(fn(grid_nodes(grid_n)), dtype=float))

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0] - 1

    @property
    def nodes(self) -> np.ndarray:
        return grid_nodes(self.n_intervals)

    @cached_property
    def _interp(self):
        return PchipInterpolator(self.nodes, self.values, axis=0, extrapolate=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._interp(np.clip(t, 0.0, 1.0)))
        n = self.n_intervals
        k = np.rint(t * n)
        on_node = (k / n == t) & (k >= 0) & (k <= n)
        if np.any(on_node):
            out = np.array(out)
            out[on_node] = self.values[k[on_node].astype(int)]
        return out

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"GridFunction(N={self.n_intervals}, sup={self.sup_norm():.6g})"


def grid_nodes(grid_n: int) -> np.ndarray:
    if grid_n < 8 or grid_n % 2:
        raise InputError("grid_n must be an even number of intervals >= 8")
    return np.arange(grid_n + 1) / grid_n
