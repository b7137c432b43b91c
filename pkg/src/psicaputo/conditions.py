"""Lipschitz/growth constants and the existence and uniqueness conditions built from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .expression import eval_expr
from .problem import BvpProblem, compute_deltas

CONSTANT_NAMES = ("L1", "L2", "k0", "k1", "k2", "l0", "l1", "l2")
OMEGA0_CONVENTIONS = ("corrected", "paper-literal")


class ConstantEstimateWarning(UserWarning):
    """Sampled constants are lower bounds of the true suprema."""


@dataclass(frozen=True)
class ConstantSet:
    """Lipschitz constants L1, L2, growth constants k0..k2, l0..l2 and the sup bounds M1, M2.

    Any constant may be ``None`` when unknown.  ``estimated`` lists the
    fields that came from sampling rather than from the user.
    """

    L1: Optional[float] = None
    L2: Optional[float] = None
    k0: Optional[float] = None
    k1: Optional[float] = None
    k2: Optional[float] = None
    l0: Optional[float] = None
    l1: Optional[float] = None
    l2: Optional[float] = None
    M1: Optional[float] = None
    M2: Optional[float] = None
    estimated: tuple = field(default=())

    def __post_init__(self):
        for f in fields(self):
            if f.name == "estimated":
                continue
            v = getattr(self, f.name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"constant {f.name} must be finite and >= 0")

    @property
    def provenance(self) -> str:
        if not self.estimated:
            return "user-supplied"
        known = [f.name for f in fields(self) if f.name != "estimated" and getattr(self, f.name) is not None]
        return "sampled-estimate" if set(known) <= set(self.estimated) else "mixed"

    @property
    def has_lipschitz(self) -> bool:
        return self.L1 is not None and self.L2 is not None

    @property
    def has_growth(self) -> bool:
        return all(getattr(self, n) is not None for n in ("k0", "k1", "k2", "l0", "l1", "l2"))

    def merged_with(self, other: "ConstantSet") -> "ConstantSet":
        """Fill unknown fields of ``self`` from ``other``."""
        updates, est = {}, list(self.estimated)
        for f in fields(self):
            if f.name == "estimated":
                continue
            if getattr(self, f.name) is None and getattr(other, f.name) is not None:
                updates[f.name] = getattr(other, f.name)
                if f.name in other.estimated:
                    est.append(f.name)
        return replace(self, estimated=tuple(est), **updates)


def _sup_at_origin(expr, grid):
    vals = eval_expr(expr, t=grid, x=np.zeros_like(grid), y=np.zeros_like(grid))
    return float(np.max(np.abs(vals)))


def _lipschitz(expr, T, X, Y, h=1e-6):
    base = eval_expr(expr, t=T, x=X, y=Y)
    dx = np.abs(eval_expr(expr, t=T, x=X + h, y=Y) - base) / h
    dy = np.abs(eval_expr(expr, t=T, x=X, y=Y + h) - base) / h
    return float(max(dx.max(), dy.max()))


def _envelope(expr, T, X, Y):
    # smallest (in mean) k0 + k1|x| + k2|y| lying above |expr| at every sample
    vals = np.abs(eval_expr(expr, t=T, x=X, y=Y)).ravel()
    ax, ay = np.abs(X).ravel(), np.abs(Y).ravel()
    A = -np.column_stack([np.ones_like(ax), ax, ay])
    c = -A.mean(axis=0)
    res = linprog(c, A_ub=A, b_ub=-vals, bounds=[(0, None)] * 3, method="highs")
    if not res.success:
        return float(vals.max()), 0.0, 0.0
    k = res.x
    # guard against solver round-off below the samples
    slack = np.max(vals - (k[0] + k[1] * ax + k[2] * ay))
    return float(k[0] + max(slack, 0.0)), float(k[1]), float(k[2])


def estimate_constants(problem: BvpProblem, sample_grid: int = 21,
                       box_radius: float = 10.0) -> ConstantSet:
    """Sample f and g to estimate every constant; the results are lower bounds only."""
    if sample_grid < 10:
        raise ValueError("sample_grid must be at least 10")
    t_fine = np.linspace(0.0, 1.0, 50 * sample_grid + 1)
    M1 = _sup_at_origin(problem.f, t_fine)
    M2 = _sup_at_origin(problem.g, t_fine)
    t = np.linspace(0.0, 1.0, sample_grid)
    box = np.linspace(-box_radius, box_radius, sample_grid)
    box = np.union1d(box, [0.0])
    T, X, Y = np.meshgrid(t, box, box, indexing="ij")
    L1 = _lipschitz(problem.f, T, X, Y)
    L2 = _lipschitz(problem.g, T, X, Y)
    k0, k1, k2 = _envelope(problem.f, T, X, Y)
    l0, l1, l2 = _envelope(problem.g, T, X, Y)
    floor = np.finfo(float).tiny
    warnings.warn("sampled constants are lower bounds only", ConstantEstimateWarning,
                  stacklevel=2)
    names = ("L1", "L2", "k0", "k1", "k2", "l0", "l1", "l2", "M1", "M2")
    return ConstantSet(L1=L1, L2=L2, k0=max(k0, floor), k1=k1, k2=k2,
                       l0=max(l0, floor), l1=l1, l2=l2, M1=M1, M2=M2, estimated=names)


def sup_bounds(problem: BvpProblem, samples: int = 2001) -> tuple:
    """(M1, M2) = sup |f(t,0,0)|, sup |g(t,0,0)| over a fine t-grid."""
    t = np.linspace(0.0, 1.0, samples)
    return _sup_at_origin(problem.f, t), _sup_at_origin(problem.g, t)


@dataclass(frozen=True)
class ConditionReport:
    delta1: float
    delta2: float
    coeff_alpha: float
    coeff_beta: float
    gamma1: Optional[float]
    gamma2: Optional[float]
    gamma3: Optional[float]
    gamma4: Optional[float]
    omega0: Optional[float]
    omega1: Optional[float]
    omega2: Optional[float]
    omega_star: Optional[float]
    omega0_convention: str
    provenance: str

    @property
    def contraction_constant(self) -> Optional[float]:
        if self.gamma3 is None or self.gamma4 is None:
            return None
        return self.gamma3 + self.gamma4

    @property
    def uniqueness_verdict(self) -> Optional[bool]:
        c = self.contraction_constant
        return None if c is None else c < 1.0

    @property
    def existence_verdict(self) -> Optional[bool]:
        return None if self.omega_star is None else self.omega_star < 1.0

    @property
    def r_bound(self) -> Optional[float]:
        c = self.contraction_constant
        if c is None or self.gamma1 is None or self.gamma2 is None or c >= 1.0:
            return None
        return (self.gamma1 + self.gamma2) / (1.0 - c)

    @property
    def solution_bound(self) -> Optional[float]:
        if self.omega_star is None or self.omega0 is None or self.omega_star >= 1.0:
            return None
        return self.omega0 / (1.0 - self.omega_star)

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out.update(contraction_constant=self.contraction_constant,
                   r_bound=self.r_bound, solution_bound=self.solution_bound,
                   uniqueness_verdict=self.uniqueness_verdict,
                   existence_verdict=self.existence_verdict)
        return out


def bound_coefficient(span, order, mult, delta):
    """[span^ord + (|mult|+1)/|delta| span^(ord+1)] / Gamma(ord+1)."""
    return (span ** order + (abs(mult) + 1.0) / abs(delta) * span ** (order + 1.0)) / math.gamma(order + 1.0)


def condition_report(problem: BvpProblem, constants: ConstantSet,
                     omega0_convention: str = "corrected") -> ConditionReport:
    """Evaluate the gamma and Omega constants and the derived verdicts.

    ``omega0_convention="corrected"`` weighs the alpha bracket by k0 and the
    beta bracket by l0; ``"paper-literal"`` multiplies both by l0.
    """
    if omega0_convention not in OMEGA0_CONVENTIONS:
        raise ValueError(f"omega0_convention must be one of {OMEGA0_CONVENTIONS}")
    d1, d2 = compute_deltas(problem)
    span = problem.psi_span
    ca = bound_coefficient(span, problem.alpha, problem.lam, d1)
    cb = bound_coefficient(span, problem.beta, problem.mu, d2)
    c = constants

    def lin(u, v):
        return None if u is None or v is None else ca * u + cb * v

    def one(coef, v):
        return None if v is None else coef * v

    if omega0_convention == "corrected":
        omega0 = lin(c.k0, c.l0)
    else:
        omega0 = None if c.l0 is None else (ca + cb) * c.l0
    omega1 = lin(c.k1, c.l1)
    omega2 = lin(c.k2, c.l2)
    omega_star = None if omega1 is None or omega2 is None else max(omega1, omega2)
    return ConditionReport(
        delta1=d1, delta2=d2, coeff_alpha=ca, coeff_beta=cb,
        gamma1=one(ca, c.M1), gamma2=one(cb, c.M2),
        gamma3=one(ca, c.L1), gamma4=one(cb, c.L2),
        omega0=omega0, omega1=omega1, omega2=omega2, omega_star=omega_star,
        omega0_convention=omega0_convention, provenance=c.provenance)
