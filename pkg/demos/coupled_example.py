"""
A coupled four-point problem
============================

Two fractional equations of orders 3/2 and 4/3 with psi(t) = 3 t^2, coupled
through their right-hand sides, with x(0) = 0, x(1) = x(1/2) and y(0) = 0,
y(1) = y(1/3).  We evaluate the contraction condition, solve by Picard
iteration, and confirm the answer with an independent Newton solve.
"""

import numpy as np

from psicaputo import (ConstantSet, collocation_solve, condition_report, cross_validate,
                       picard_solve, residual_report, sup_bounds)
from psicaputo.config import parse_config

problem, constants, options = parse_config("example-4-1.cfg")

# Lipschitz constants come from the file; M1, M2 are sup |f(t,0,0)|, sup |g(t,0,0)|
m1, m2 = sup_bounds(problem)
constants = constants.merged_with(ConstantSet(M1=m1, M2=m2))
report = condition_report(problem, constants)
print("Delta1, Delta2   :", report.delta1, report.delta2)
print("gamma3 + gamma4  :", report.contraction_constant)
print("radius of T-ball :", report.r_bound)

picard = picard_solve(problem)
print()
print("Picard iterations:", picard.iterations)
print("increment ratios :", np.round(picard.contraction_ratios(), 5))
print("|x| + |y|        :", picard.norm())

# the observed ratio is far below gamma3 + gamma4: the bound is a worst case
newton = collocation_solve(problem)
diff = cross_validate(picard, newton)
print()
print("Newton residual history:", ["%.1e" % r for r in newton.increments])
print("sup difference to Picard:", diff.sup)

res = residual_report(problem, picard)
print()
for name, value in res.boundary.items():
    print("boundary %-18s %.1e" % (name, value))
print("fixed point residual      %.1e" % res.fixed_point)

# a few values of the solution
for t in (0.25, 0.5, 0.75, 1.0):
    print("t = %.2f   x = %.10f   y = %.10f" % (t, picard.x(t), picard.y(t)))
