"""
Fractional powers of a magnetic Laplacian
=========================================

Two ways to get (H_A)^{s/2}: diagonalise, or integrate the resolvent.
They should agree to round-off on a small grid.
"""

import numpy as np

from fracscat import make_grid, make_potential
from fracscat.operators import (build_magnetic_laplacian, frac_power_balakrishnan,
                                frac_power_eig)

# 64 points on [-16, 16), a smooth bump of vector potential
grid = make_grid(1, 64, 16.0)
A = make_potential(grid, "gaussian", {"a": 0.5, "w": 2.0})
H = build_magnetic_laplacian(grid, A)

print("lowest eigenvalues of H_A:", np.round(np.linalg.eigvalsh(H.matrix)[:4], 5))

for s in (0.5, 1.0, 1.5):
    exact = frac_power_eig(H, s / 2).matrix
    quad = frac_power_balakrishnan(H, s).matrix
    rel = np.linalg.norm(quad - exact, 2) / np.linalg.norm(exact, 2)
    print(f"s = {s}:  relative gap between the two routes = {rel:.1e}")
