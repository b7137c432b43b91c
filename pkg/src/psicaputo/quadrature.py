"""Gauss-Jacobi rules and psi-weighted kernel integrals.

The integrals handled here are

    K_p[sigma](a, t) = int_a^t psi'(s) (psi(t) - psi(s))^p sigma(s) ds,   p > -1.

With ``u = psi(s)`` this becomes ``int (psi(t) - u)^p sigma(psi^{-1}(u)) du``,
whose only kernel singularity is the Jacobi weight at the right end.  The
left end is refined geometrically: when ``psi'(a) = 0`` (for instance
``psi = 3 t^2``) the composed integrand ``sigma(psi^{-1}(u))`` behaves like a
fractional power of ``u - psi(a)`` and a single Gauss rule converges only
algebraically.  Pieces away from the right end carry the kernel as an
explicit smooth factor and use Gauss-Legendre nodes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, InputError

DEFAULT_N = 64
DEFAULT_LEVELS = 8
GRADING_RATIO = 0.02


@dataclass(frozen=True)
class JacobiRule:
    """Gauss rule for the weight (1 - x)^p on [-1, 1]."""

    n: int
    p: float
    nodes: np.ndarray
    weights: np.ndarray


_cache: dict = {}
_cache_lock = threading.Lock()


def _recurrence(n, a, b):
    k = np.arange(n, dtype=float)
    s = 2.0 * k + a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        diag = (b * b - a * a) / (s * (s + 2.0))
    diag[0] = (b - a) / (a + b + 2.0)
    k = np.arange(1, n, dtype=float)
    s = 2.0 * k + a + b
    off2 = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0))
    return diag, np.sqrt(off2)


def jacobi_rule(n: int, p: float) -> JacobiRule:
    """Golub-Welsch construction of the n-point rule for (1 - x)^p."""
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 512):
        raise InputError("jacobi_rule needs 1 <= n <= 512")
    if not p > -1:
        raise InputError("jacobi_rule needs p > -1")
    key = (int(n), round(float(p), 12))
    rule = _cache.get(key)
    if rule is not None:
        return rule
    a, b = float(p), 0.0
    mu0 = 2.0 ** (a + 1.0) / (a + 1.0)
    diag, off = _recurrence(n, a, b)
    if n == 1:
        nodes, vecs = diag.copy(), np.ones((1, 1))
    else:
        nodes, vecs = eigh_tridiagonal(diag, off)
    weights = mu0 * vecs[0, :] ** 2
    order = np.argsort(nodes)
    nodes, weights = nodes[order], weights[order]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    rule = JacobiRule(int(n), float(p), nodes, weights)
    with _cache_lock:
        _cache.setdefault(key, rule)
    return _cache[key]


def legendre_rule(n: int) -> JacobiRule:
    return jacobi_rule(n, 0.0)


def kernel_nodes(psi, a, t, p, n=DEFAULT_N, levels=DEFAULT_LEVELS):
    """Nodes ``s`` and weights ``w`` with ``sum(w * sigma(s)) ~ K_p[sigma](a, t)``.

    ``t`` may be an array; the result then has shape ``t.shape + (m,)`` where
    ``m = n * (levels + 1)``.  Rows with ``t == a`` get zero weights.
    Endpoints are never sampled.
    """
    if not p > -1:
        raise InputError("kernel exponent must exceed -1")
    tt = np.asarray(t, dtype=float)
    if np.any(tt < a):
        raise InputError("integration requires t >= a")
    ua = psi.value(a)
    ut = np.asarray(psi.value(tt), dtype=float)[..., None]
    width = ut - ua
    jac = jacobi_rule(n, p)
    if levels == 0:
        u = ua + width * (1.0 + jac.nodes) / 2.0
        w = (width / 2.0) ** (p + 1.0) * jac.weights + 0.0 * u
    else:
        leg = legendre_rule(n)
        q = GRADING_RATIO
        us, ws = [], []
        # right piece [ua + q W, ut] carries the Jacobi weight
        lo = ua + q * width
        half = (ut - lo) / 2.0
        us.append(lo + half * (1.0 + jac.nodes))
        ws.append(half ** (p + 1.0) * jac.weights)
        for k in range(1, levels + 1):
            hi = ua + q ** k * width
            lo = ua + q ** (k + 1) * width if k < levels else ua + 0.0 * width
            half = (hi - lo) / 2.0
            uk = lo + half * (1.0 + leg.nodes)
            us.append(uk)
            with np.errstate(divide="ignore", invalid="ignore"):
                ws.append(half * leg.weights * (ut - uk) ** p)
        u = np.concatenate(us, axis=-1)
        w = np.concatenate(ws, axis=-1)
    zero = width[..., 0] <= 0
    if np.any(zero):
        w = np.where(zero[..., None], 0.0, w)
        u = np.where(zero[..., None], ua, u)
    lo_u, hi_u = psi.range
    s = psi.inverse(np.clip(u, lo_u, hi_u))
    return np.asarray(s, dtype=float), w


def sample(sigma, s):
    """Evaluate ``sigma`` at the array ``s``; accepts expressions, vectorized or scalar callables."""
    from .expression import Node, eval_expr

    s = np.asarray(s, dtype=float)
    if isinstance(sigma, Node):
        return np.asarray(eval_expr(sigma, t=s), dtype=float)
    try:
        out = np.asarray(sigma(s), dtype=float)
    except (TypeError, ValueError):
        out = None
    if out is None or (out.shape != s.shape and out.ndim != 0):
        out = np.array([float(sigma(v)) for v in s.ravel()]).reshape(s.shape)
    elif out.shape != s.shape:
        out = np.full(s.shape, float(out))
    return out


def psi_weighted_integral(sigma, psi, a, t, p, n=DEFAULT_N, levels=DEFAULT_LEVELS):
    """K_p[sigma](a, t); ``t`` may be a scalar or an array."""
    s, w = kernel_nodes(psi, a, t, p, n, levels)
    vals = sample(sigma, s)
    out = np.einsum("...i,...i->...", w, vals)
    return float(out) if np.ndim(out) == 0 else out


def _panel(psi, ua, ut, lo, hi, p, m, sigma, right):
    if right:
        rule = jacobi_rule(m, p)
        half = (hi - lo) / 2.0
        u = lo + half * (1.0 + rule.nodes)
        w = half ** (p + 1.0) * rule.weights
    else:
        rule = legendre_rule(m)
        half = (hi - lo) / 2.0
        u = lo + half * (1.0 + rule.nodes)
        w = half * rule.weights * (ut - u) ** p
    return float(np.dot(w, sample(sigma, psi.inverse(u))))


def adaptive_integral(sigma, psi, a, t, p, rel_tol=1e-10, levels=DEFAULT_LEVELS,
                      max_panels=4000):
    """Integrate to relative tolerance ``rel_tol``.

    First doubles the per-piece node count from 16 to 512.  If that does not
    settle (non-smooth sigma), switches to bisection of the panel with the
    largest local error estimate.  Returns ``(value, error_estimate, nodes_used)``.
    """
    used = 0
    prev = None
    n = 16
    while n <= 512:
        val = psi_weighted_integral(sigma, psi, a, t, p, n, levels)
        used += n * (levels + 1)
        if prev is not None:
            err = abs(val - prev)
            if err <= rel_tol * max(1.0, abs(val)):
                return val, err, used
        prev = val
        n *= 2

    ua, ut = psi.value(a), psi.value(t)
    width = ut - ua
    if width <= 0:
        return 0.0, 0.0, used
    q = GRADING_RATIO
    cuts = [ua] + [ua + q ** k * width for k in range(levels, 0, -1)] + [ut]
    m = 16

    def estimate(lo, hi):
        right = hi == ut
        coarse = _panel(psi, ua, ut, lo, hi, p, m, sigma, right)
        fine = _panel(psi, ua, ut, lo, hi, p, 2 * m, sigma, right)
        return fine, abs(fine - coarse)

    panels = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        v, e = estimate(lo, hi)
        used += 3 * m
        panels.append([lo, hi, v, e])
    best = math.fsum(pnl[2] for pnl in panels)
    history = []
    while True:
        total = math.fsum(pnl[2] for pnl in panels)
        err = math.fsum(pnl[3] for pnl in panels)
        best = total
        history.append(err)
        if err <= rel_tol * max(1.0, abs(total)):
            return total, err, used
        if len(panels) >= max_panels:
            raise ConvergenceError(
                f"adaptive_integral: tolerance {rel_tol:g} not reached "
                f"(error estimate {err:.3g})", best=best, history=history)
        k = max(range(len(panels)), key=lambda i: panels[i][3])
        lo, hi = panels[k][0], panels[k][1]
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise ConvergenceError("adaptive_integral: panel width underflow",
                                   best=best, history=history)
        left = [lo, mid, *estimate(lo, mid)]
        right = [mid, hi, *estimate(mid, hi)]
        used += 6 * m
        panels[k:k + 1] = [left, right]
