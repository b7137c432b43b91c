"""
Checking the solver against a known solution
============================================

Choose the answer first: x(t) = w^2 - 15/4 w with w = 3 t^2.  It satisfies
x(0) = 0 and x(1) = x(1/2), and its derivative of order 3/2 with respect to
psi = 3 t^2 is (2/Gamma(3/2)) sqrt(3) t.  Feeding that forcing to the linear
solver should give x back.
"""

import math

import numpy as np

from psicaputo import PsiSpec, solve_linear_bvp

psi = PsiSpec.power(3, 2)
h = lambda s: 2 / math.gamma(1.5) * math.sqrt(3) * s

for n in (20, 50, 200):
    x = solve_linear_bvp(h, psi, 1.5, 1.0, 0.5, grid_n=n)
    t = x.nodes
    err = np.max(np.abs(x.values - (9 * t ** 4 - 11.25 * t ** 2)))
    print("grid_n = %3d   max node error = %.2e" % (n, err))

# the quadrature is exact for this forcing, so the error does not depend on the grid
x = solve_linear_bvp(h, psi, 1.5, 1.0, 0.5)
print("x(1) = %.12f, x(1/2) = %.12f" % (x(1.0), x(0.5)))
