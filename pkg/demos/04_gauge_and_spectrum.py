"""
Gauge invariance and the point spectrum
=======================================

A vector potential with zero flux is a pure gauge in 1D, so H_A is unitarily
equivalent to the free Laplacian.  On a grid this holds well away from
the Nyquist band.  Then a double barrier shows what a trapped state looks like
to the embedded eigenvalue scan.
"""

import numpy as np

from fracscat import make_grid, make_potential
from fracscat.operators import build_magnetic_laplacian, frac_power_eig
from fracscat.spectral import (double_barrier, embedded_eigenvalue_scan,
                               gauge_transform_check, with_scalar_potential)

grid = make_grid(1, 128, 16.0)
x = grid.x1d
A = make_potential(grid, "custom_samples",
                   {"samples": (-0.25 * x * np.exp(-x**2 / 4))[None, :]})   # d/dx of a bump
rep = gauge_transform_check(grid, A)
print(f"conjugation defect, |xi| <= {rep.band} xi_max: {rep.defect_band:.1e}")
print(f"conjugation defect, whole grid:          {rep.defect_full:.1e}")

HsA = frac_power_eig(build_magnetic_laplacian(grid, A), 0.5)
print("embedded candidates without barrier:", len(embedded_eigenvalue_scan(HsA).indices))

trapped = embedded_eigenvalue_scan(with_scalar_potential(HsA, double_barrier(grid)))
print("embedded candidates with a double barrier:", len(trapped.indices))
print("their energies:", np.round(trapped.energies[:5], 3))
