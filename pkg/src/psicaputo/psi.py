"""Weight functions psi: evaluation, derivative, inverse and validation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expression as ex
from .errors import InputError, NumericalError

DOMAIN = (0.0, 1.0)
_SLACK = 1e-14
INVERSE_TABLE_SIZE = 4097


@dataclass(frozen=True)
class PsiSpec:
    """An increasing weight function psi on [0, 1].

    Use the constructors :meth:`identity`, :meth:`affine`, :meth:`power` and
    :meth:`from_expression` rather than building instances directly.  All
    methods accept scalars or numpy arrays.
    """

    kind: str
    params: tuple = ()
    expr: ex.Node | None = field(default=None, compare=True)
    domain: tuple = DOMAIN

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def affine(cls, a, b=0.0):
        """psi(t) = a*t + b."""
        return cls("affine", (float(a), float(b)))

    @classmethod
    def power(cls, c, p):
        """psi(t) = c*t^p."""
        if p <= 0:
            raise InputError("power psi needs a positive exponent")
        return cls("power", (float(c), float(p)))

    @classmethod
    def from_expression(cls, source):
        node = ex.parse(source) if isinstance(source, str) else source
        extra = ex.variables(node) - {"t"}
        if extra:
            raise InputError(f"psi may only depend on t, found {sorted(extra)}")
        if node == ex.Var("t"):
            return cls.identity()
        return cls("expression", (), node)

    # -- symbolic forms ----------------------------------------------------

    def as_expr(self) -> ex.Node:
        if self.kind == "expression":
            return self.expr
        if self.kind == "identity":
            return ex.Var("t")
        a, b = self.params
        t = ex.Var("t")
        if self.kind == "affine":
            return ex._add(ex._mul(ex._num(a), t), ex._num(b))
        return ex._mul(ex._num(a), ex._pow(t, ex._num(b)))

    @cached_property
    def deriv_expr(self) -> ex.Node:
        return ex.diff_expr(self.as_expr(), "t")

    def __str__(self):
        return ex.to_string(self.as_expr())

    # -- numerics ----------------------------------------------------------

    def _check_domain(self, t):
        a, b = self.domain
        arr = np.asarray(t, dtype=float)
        if arr.size and (np.min(arr) < a - _SLACK or np.max(arr) > b + _SLACK):
            raise InputError(f"argument outside the psi domain [{a}, {b}]")
        return np.clip(arr, a, b)

    def value(self, t):
        tt = self._check_domain(t)
        if self.kind == "identity":
            out = tt.copy()
        elif self.kind == "affine":
            out = self.params[0] * tt + self.params[1]
        elif self.kind == "power":
            out = self.params[0] * tt ** self.params[1]
        else:
            out = np.asarray(ex.eval_expr(self.expr, t=tt), dtype=float)
        return float(out) if out.ndim == 0 else out

    __call__ = value

    def deriv(self, t):
        tt = self._check_domain(t)
        if self.kind == "identity":
            out = np.ones_like(tt)
        elif self.kind == "affine":
            out = np.full_like(tt, self.params[0])
        elif self.kind == "power":
            c, p = self.params
            with np.errstate(divide="ignore"):
                out = c * p * tt ** (p - 1.0)
        else:
            out = np.asarray(ex.eval_expr(self.deriv_expr, t=tt), dtype=float)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def range(self):
        a, b = self.domain
        return self.value(a), self.value(b)

    def inverse(self, u):
        """Return t with psi(t) = u; closed form for builtins, bisection plus Newton otherwise."""
        lo, hi = self.range
        uu = np.asarray(u, dtype=float)
        slack = _SLACK * max(1.0, abs(lo), abs(hi))
        if uu.size and (np.min(uu) < lo - slack or np.max(uu) > hi + slack):
            raise InputError(f"value outside the psi range [{lo}, {hi}]")
        uu = np.clip(uu, lo, hi)
        if self.kind == "identity":
            out = uu.copy()
        elif self.kind == "affine":
            a, b = self.params
            out = (uu - b) / a
        elif self.kind == "power":
            c, p = self.params
            out = (uu / c) ** (1.0 / p)
        else:
            out = self._invert_numeric(uu)
        out = np.clip(out, *self.domain)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def _inverse_table(self):
        a, b = self.domain
        t = np.linspace(a, b, INVERSE_TABLE_SIZE)
        v = np.asarray(self.value(t), dtype=float)
        if not np.all(np.diff(v) > 0):
            return None
        return t, v

    def _invert_numeric(self, u, max_bisect=200, newton_steps=5):
        # Bracket from a monotone table of psi, start Newton from the linear
        # interpolant and keep it inside the bracket.  Entries that Newton
        # cannot finish (psi' ~ 0) are bisected down to rounding level.
        a, b = self.domain
        table = self._inverse_table
        if table is None:
            lo, hi = np.full(u.shape, a), np.full(u.shape, b)
            t = 0.5 * (lo + hi)
        else:
            tg, vg = table
            k = np.clip(np.searchsorted(vg, u), 1, tg.size - 1)
            lo, hi = tg[k - 1], tg[k]
            frac = np.clip((u - vg[k - 1]) / (vg[k] - vg[k - 1]), 0.0, 1.0)
            t = lo + frac * (hi - lo)
        for _ in range(newton_steps):
            d = np.asarray(self.deriv(t))
            r = np.asarray(self.value(t)) - u
            ok = d > 0
            step = np.where(ok, r / np.where(ok, d, 1.0), 0.0)
            t_new = np.clip(t - step, lo, hi)
            if np.array_equal(t_new, t):
                break
            t = t_new
        scale = max(1.0, *(abs(v) for v in self.range))
        bad = np.abs(np.asarray(self.value(t)) - u) > 16 * np.finfo(float).eps * scale
        if np.any(bad):
            t = np.array(t, dtype=float)
            t[bad] = self._bisect(u[bad], lo[bad], hi[bad], max_bisect)
            if np.any(np.abs(np.asarray(self.value(t)) - u) > 1e-12 * scale):
                raise NumericalError("psi inverse did not reach 1e-12 accuracy")
        return t

    def _bisect(self, u, lo, hi, max_bisect):
        floor = 4 * np.finfo(float).eps
        for _ in range(max_bisect):
            mid = 0.5 * (lo + hi)
            above = np.asarray(self.value(mid)) >= u
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
            if np.all(hi - lo <= floor * np.maximum(1.0, np.abs(hi))):
                return 0.5 * (lo + hi)
        raise NumericalError("psi inverse: bisection did not converge in 200 steps")


@dataclass
class ValidationReport:
    passed: bool
    violations: list
    warnings: list
    n_samples: int

    def __bool__(self):
        return self.passed


def validate_psi(spec: PsiSpec, n_samples: int = 1001) -> ValidationReport:
    """Check positivity of psi', monotonicity and the inverse round trip on a uniform grid.

    A zero derivative at an endpoint only produces a warning.
    """
    if n_samples < 2:
        raise InputError("validate_psi needs at least 2 samples")
    a, b = spec.domain
    t = np.linspace(a, b, n_samples)
    violations, warns = [], []
    try:
        vals = np.asarray(spec.value(t))
        d = np.asarray(spec.deriv(t))
    except Exception as exc:  # evaluation failures are findings here
        return ValidationReport(False, [f"evaluation failed: {exc}"], [], n_samples)

    interior = d[1:-1]
    bad = np.flatnonzero(~(interior > 0))
    if bad.size:
        violations.append(
            f"psi' <= 0 at {bad.size} interior points, first at t={t[bad[0] + 1]:.6g}")
    for idx in (0, -1):
        if d[idx] == 0:
            warns.append(f"psi' vanishes at the endpoint t={t[idx]:g}")
        elif not d[idx] > 0:
            violations.append(f"psi' < 0 at the endpoint t={t[idx]:g}")
    steps = np.diff(vals)
    if np.any(steps <= 0):
        k = int(np.flatnonzero(steps <= 0)[0])
        violations.append(f"psi not strictly increasing near t={t[k]:.6g}")
    if not violations:
        try:
            back = np.asarray(spec.inverse(vals))
            err = np.max(np.abs(back - t))
            if err > 1e-12:
                violations.append(f"inverse round trip error {err:.3g} exceeds 1e-12")
        except Exception as exc:
            violations.append(f"inverse failed: {exc}")
    for w in warns:
        warnings.warn(w, stacklevel=2)
    return ValidationReport(not violations, violations, warns, n_samples)
