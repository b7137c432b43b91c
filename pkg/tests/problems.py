"""Test problems shared by the solver suites.

The manufactured problem has the exact solution w^2 - 15/4 w (w = 3 t^2) in
both components.  Random problems are built so that their Lipschitz and
growth constants are known exactly rather than sampled.
"""

import mpmath as mp
import numpy as np

import oracles
from psicaputo.conditions import ConstantSet
from psicaputo.problem import BvpProblem

F41 = "exp(-3*t)/(75+t)*(sin(x)+abs(y))+exp(-t)/(1+t^2)"
G41 = "1/(2*t^2+100)*(abs(x)/(1+abs(x))+sin(y))+sin(t)+1"
F42 = "cos(t)/sqrt(625+t)+exp(-t)/200*sin(x)+1/300*y*abs(x)/(1+abs(x))"
G42 = "exp(-2*t)/(2*sqrt(1600+t))+sin(x)/270+sin(y)/(3*(60+t))"

EX41 = BvpProblem(1.5, 4 / 3, 0.5, 1 / 3, 1.0, 1.0, F41, G41, "3*t^2")
EX42 = BvpProblem(1.5, 4 / 3, 0.5, 1 / 3, 1.0, 1.0, F42, G42, "3*t^2")


def manufactured(alpha=1.5, beta=4 / 3):
    """Decoupled problem with forcing C t^(2(2-order)); eta = xi = 1/2, lam = mu = 1."""
    ca = float(oracles.manufactured_forcing(alpha))
    cb = float(oracles.manufactured_forcing(beta))
    f = f"{ca!r}*t^{2 * (2 - alpha)!r}"
    g = f"{cb!r}*t^{2 * (2 - beta)!r}"
    return BvpProblem(alpha, beta, 0.5, 0.5, 1.0, 1.0, f, g, "3*t^2")


def exact(t):
    return oracles.manufactured_solution(np.asarray(t, dtype=float))


# (expression, mpmath version) pairs for random problems
PSI_CHOICES = (
    ("t", lambda t: t),
    ("3*t^2", lambda t: 3 * t ** 2),
    ("exp(t)", mp.exp),
    ("t+t^2", lambda t: t + t ** 2),
    ("t^3+2*t", lambda t: t ** 3 + 2 * t),
)


class RandomProblem:
    """A problem together with exactly known constants and the oracle gammas."""

    def __init__(self, problem, constants, gammas):
        self.problem = problem
        self.constants = constants
        self.gamma1, self.gamma2, self.gamma3, self.gamma4 = gammas

    @property
    def contraction(self):
        return self.gamma3 + self.gamma4

    @property
    def r_bound(self):
        return (self.gamma1 + self.gamma2) / (1.0 - self.contraction)


def random_problem(rng):
    """f = c1 sin x + c2 cos y + a0 + a1 t and g = d1 atan x + d2 sin y + b0 exp(-t).

    Then |f(t,x1,y1) - f(t,x2,y2)| <= max|c| (|dx| + |dy|), sup|f(t,0,0)| is
    attained at an endpoint, and the same holds for g.
    """
    psi_src, psi_mp = PSI_CHOICES[rng.integers(len(PSI_CHOICES))]
    while True:
        alpha, beta = rng.uniform(1.1, 1.9, 2)
        eta, xi = rng.uniform(0.15, 0.85, 2)
        lam, mu = rng.uniform(0.2, 2.5, 2)
        base = oracles.constants(alpha, beta, eta, xi, lam, mu, psi_mp)
        span = float(psi_mp(mp.mpf(1)) - psi_mp(mp.mpf(0)))
        if min(abs(base["delta1"]), abs(base["delta2"])) > 0.2 * span:
            break
    q = rng.uniform(0.3, 0.8)
    share = rng.uniform(0.3, 0.7)
    L1 = share * q / float(base["ca"])
    L2 = (1 - share) * q / float(base["cb"])
    s1, s2, s3, s4 = rng.choice([-1.0, 1.0], 4)
    c1, c2 = s1 * L1, s2 * L1 * rng.uniform(0.3, 1.0)
    d1, d2 = s3 * L2 * rng.uniform(0.3, 1.0), s4 * L2
    a0, a1, b0 = rng.uniform(-1, 1, 3)
    c1, c2, d1, d2, a0, a1, b0 = map(float, (c1, c2, d1, d2, a0, a1, b0))
    f = f"({c1!r})*sin(x)+({c2!r})*cos(y)+({a0!r})+({a1!r})*t"
    g = f"({d1!r})*atan(x)+({d2!r})*sin(y)+({b0!r})*exp(-t)"
    M1 = max(abs(c2 + a0), abs(c2 + a0 + a1))
    M2 = abs(b0)
    problem = BvpProblem(alpha, beta, eta, xi, lam, mu, f, g, psi_src)
    with mp.workdps(oracles.DPS):
        full = oracles.constants(alpha, beta, eta, xi, lam, mu, psi_mp, L1=L1, L2=L2, M1=M1, M2=M2)
    gammas = tuple(float(full[k]) for k in ("gamma1", "gamma2", "gamma3", "gamma4"))
    return RandomProblem(problem, ConstantSet(L1=L1, L2=L2, M1=M1, M2=M2), gammas)


def random_grid_pair(rng, grid_n, radius):
    """Smooth random (x, y) node values with sup(x) + sup(y) = radius * u, u in (0, 1]."""
    t = np.linspace(0.0, 1.0, grid_n + 1)
    out = []
    for _ in range(2):
        k = np.arange(1, 5)[:, None]
        amp = rng.normal(size=(4, 1)) / k
        phase = rng.uniform(0, 2 * np.pi, (4, 1))
        v = np.sum(amp * np.sin(k * np.pi * t + phase), axis=0) + rng.normal()
        out.append(v / np.max(np.abs(v)))
    share = rng.uniform(0.1, 0.9)
    size = radius * rng.uniform(0.2, 1.0)
    return out[0] * share * size, out[1] * (1 - share) * size


def sup(v):
    return float(np.max(np.abs(v)))
