"""
Fractional integrals with respect to another function
=====================================================

The integral of order alpha taken with respect to psi turns powers of
w = psi(t) - psi(0) into powers again.  We check that numerically, then look at
how the Caputo-type derivative undoes the integral.
"""

import math

import numpy as np

from psicaputo import PsiSpec, parse, power_rule, psi_caputo_derivative, psi_rl_integral

psi = PsiSpec.power(3, 2)          # psi(t) = 3 t^2
t = np.linspace(0.1, 1.0, 4)
w = psi(t)

# w^(beta-1) integrated to order alpha gives Gamma(beta)/Gamma(beta+alpha) w^(beta+alpha-1)
alpha, beta = 0.7, 2.5
numeric = psi_rl_integral(lambda s: psi(s) ** (beta - 1), psi, alpha, 0.0, t)
closed = power_rule("integral", psi, 0.0, t, alpha, beta)
print("t         numeric             closed form")
for row in zip(t, numeric, closed):
    print("%.2f  %.15f  %.15f" % row)

# order 3/2 of w^2 is Gamma(3)/Gamma(3/2) w^(1/2); constants and w itself vanish
sigma = parse("(3*t^2)^2")
print()
print("D^1.5 w^2 at t=1:", psi_caputo_derivative(sigma, psi, 1.5, 0.0, 1.0))
print("expected        :", 2 / math.gamma(1.5) * math.sqrt(3))
print("D^1.5 of 2 - w  :", psi_caputo_derivative(parse("2-3*t^2"), psi, 1.5, 0.0, t))

# derivative after integral gives sigma back; the inner integral is only a
# callable here, so the outer derivative goes through finite differences
sigma = parse("exp(3*t^2/2)")
inner = lambda s: psi_rl_integral(sigma, psi, 1.5, 0.0, s, quad_n=24)
back = psi_caputo_derivative(inner, psi, 1.5, 0.0, t, quad_n=24)
print()
print("relative error of D I sigma:", np.max(np.abs(back / np.exp(w / 2) - 1)))
