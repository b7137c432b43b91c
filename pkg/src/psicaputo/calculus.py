"""Fractional integrals and derivatives with respect to a weight function psi.

All operators take the lower terminal ``a`` and evaluate at ``t`` (scalar or
array).  ``sigma`` may be an expression tree in ``t`` or a callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expression as ex
from .errors import InputError, UnsupportedOperationError
from .quadrature import DEFAULT_LEVELS, DEFAULT_N, kernel_nodes, sample

FD_SCALE = 1e-4
FD_NEAR_LEFT = 1e-3
MAX_FD_ORDER = 4


@dataclass(frozen=True)
class FracOrder:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("fractional order must be positive")

    @property
    def is_integer(self) -> bool:
        return float(self.alpha).is_integer()

    @property
    def n(self) -> int:
        if self.is_integer:
            return int(self.alpha)
        return math.floor(self.alpha) + 1


def as_order(order) -> FracOrder:
    return order if isinstance(order, FracOrder) else FracOrder(float(order))


def gamma_ratio(num: float, den: float) -> float:
    """Gamma(num) / Gamma(den) for positive arguments, through log-Gamma."""
    return math.exp(math.lgamma(num) - math.lgamma(den))


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def power_rule(kind, psi, a, t, alpha, beta):
    """Closed forms for the integral or Caputo derivative of (psi(t) - psi(a))^(beta - 1)."""
    if not beta > 0:
        raise InputError("power_rule needs beta > 0")
    w = np.asarray(psi.value(t), dtype=float) - psi.value(a)
    if kind == "integral":
        if alpha < 0:
            raise InputError("integral order must be non-negative")
        if alpha == 0:
            return _scalar(w ** (beta - 1.0))
        return _scalar(gamma_ratio(beta, beta + alpha) * w ** (beta + alpha - 1.0))
    if kind != "caputo":
        raise InputError(f"unknown power_rule kind {kind!r}")
    n = as_order(alpha).n
    k = beta - 1.0
    if k.is_integer() and 0 <= k <= n - 1:
        return _scalar(np.zeros_like(w))
    if not beta - alpha > 0:
        raise InputError("caputo power rule needs beta - alpha - 1 > -1")
    return _scalar(gamma_ratio(beta, beta - alpha) * w ** (beta - alpha - 1.0))


def psi_rl_integral(sigma, psi, order, a, t, quad_n=DEFAULT_N, levels=DEFAULT_LEVELS):
    """Left-sided fractional integral of ``sigma`` with respect to ``psi``."""
    alpha = as_order(order).alpha
    s, w = kernel_nodes(psi, a, t, alpha - 1.0, quad_n, levels)
    vals = sample(sigma, s)
    out = np.einsum("...i,...i->...", w, vals) / math.gamma(alpha)
    return _scalar(out)


# --------------------------------------------------------------------------
# sequential derivatives (1/psi' d/dt)^k
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _symbolic_chain(node, psi, k):
    dpsi = psi.deriv_expr
    chain = [node]
    for _ in range(k):
        chain.append(ex._div(ex.diff_expr(chain[-1], "t"), dpsi))
    return chain[k]


def _fornberg(offsets, k):
    """Finite-difference weights for the k-th derivative at 0 on the given offsets."""
    m = len(offsets)
    c = np.zeros((m, k + 1))
    c1, c4 = 1.0, offsets[0]
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, k)
        c2, c5 = 1.0, c4
        c4 = offsets[i]
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, k]


def _fd_sequential(sigma, psi, k, t):
    # (1/psi' d/dt)^k is d^k/du^k in u = psi(t); difference there to avoid 1/psi'.
    lo, hi = psi.range
    u = np.atleast_1d(np.asarray(psi.value(t), dtype=float))
    h0 = FD_SCALE * (hi - lo)
    h = np.minimum(h0, FD_NEAR_LEFT * (u - lo))
    h = np.where(h > 0, h, h0)
    central = np.arange(k + 1) - k / 2.0
    backward = np.arange(-(k + 1), 1, dtype=float)
    forward = np.arange(0, k + 2, dtype=float)
    wc = _fornberg(central, k)
    wb = _fornberg(backward, k)
    wf = _fornberg(forward, k)
    out = np.empty_like(u)
    use_b = u + central[-1] * h > hi
    use_f = (u + central[0] * h < lo) & ~use_b
    use_c = ~(use_b | use_f)
    for mask, offs, wts in ((use_c, central, wc), (use_b, backward, wb), (use_f, forward, wf)):
        if not np.any(mask):
            continue
        um, hm = u[mask], h[mask]
        pts = np.clip(um[:, None] + offs[None, :] * hm[:, None], lo, hi)
        vals = sample(sigma, psi.inverse(pts))
        out[mask] = vals @ wts / hm ** k
    return out.reshape(np.shape(t))


def psi_seq_derivative(sigma, psi, k, t):
    """Apply (1/psi'(t) d/dt) k times to ``sigma`` and evaluate at ``t``.

    Expressions are differentiated symbolically.  Other callables use central
    differences in ``u = psi(t)`` with step 1e-4 of the psi range, shrunk
    near the left end of the domain and one-sided at the right end.
    """
    if k < 0:
        raise InputError("sequential derivative order must be >= 0")
    if k == 0:
        return _scalar(sample(sigma, np.asarray(t, dtype=float)))
    if isinstance(sigma, ex.Node):
        if ex.contains_call(sigma, "abs"):
            raise UnsupportedOperationError("abs-bearing expressions are not differentiable")
        chain = _symbolic_chain(sigma, psi, k)
        return _scalar(sample(chain, np.asarray(t, dtype=float)))
    if k > MAX_FD_ORDER:
        raise UnsupportedOperationError(
            f"finite differences beyond order {MAX_FD_ORDER} are noise-dominated")
    return _scalar(_fd_sequential(sigma, psi, k, t))


def psi_caputo_derivative(sigma, psi, order, a, t, quad_n=DEFAULT_N, levels=DEFAULT_LEVELS):
    """Caputo-type derivative with respect to ``psi`` for sigma in C^n."""
    order = as_order(order)
    n = order.n
    if order.is_integer:
        return psi_seq_derivative(sigma, psi, n, t)
    p = n - order.alpha - 1.0
    s, w = kernel_nodes(psi, a, t, p, quad_n, levels)
    live = np.any(w != 0, axis=-1)
    vals = np.zeros_like(s)
    if np.any(live):
        vals[live] = psi_seq_derivative(sigma, psi, n, s[live])
    out = np.einsum("...i,...i->...", w, vals) / math.gamma(n - order.alpha)
    return _scalar(out)


def psi_rl_derivative(sigma, psi, order, a, t, quad_n=DEFAULT_N, levels=DEFAULT_LEVELS):
    """Riemann-Liouville-type derivative; the outer derivatives are finite differences.

    Less accurate than :func:`psi_caputo_derivative`.
    """
    order = as_order(order)
    n = order.n
    if order.is_integer:
        return psi_seq_derivative(sigma, psi, n, t)
    inner = n - order.alpha

    def integral(tt):
        return psi_rl_integral(sigma, psi, inner, a, tt, quad_n, levels)

    return psi_seq_derivative(integral, psi, n, t)
