"""
Approaching the real axis
=========================

Weighted norms of the free resolvent stay bounded as eps -> 0, while the
unweighted norm blows up like 1/eps.
"""

import numpy as np

from fracscat import make_grid
from fracscat.resolvent import BoundaryResolvent, limiting_absorption_norms, log_log_slope

grid = make_grid(1, 128, 32.0)
rep = limiting_absorption_norms(grid, BoundaryResolvent(1.0, 1, 1.0, sigma=1.0))

print(f"{'eps':>10} {'weighted':>10} {'unweighted':>12}")
for e, w, u in zip(rep.epsilon, rep.weighted_norm, rep.unweighted_norm):
    print(f"{e:10.2e} {w:10.4f} {u:12.2f}")

# the ladder never goes below twice the local gap between shells,
# below that the grid cannot tell lam + i eps from a nearby eigenvalue
print("unweighted slope in log-log:", round(log_log_slope(rep.epsilon, rep.unweighted_norm), 4))
print("extrapolated boundary norm:", round(float(rep.extrapolant_norm[-1]), 4))
