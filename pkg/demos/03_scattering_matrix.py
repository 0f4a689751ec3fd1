"""
Wave operators and the scattering matrix
========================================

Build W_+ and W_- on a small basis of wave packets, then look at how
unitary S = W_+^* W_- is.  The zero potential is a control.
"""

import numpy as np

from fracscat import make_grid, make_potential
from fracscat.operators import build_laplacian, build_magnetic_laplacian, frac_power_eig
from fracscat.scattering import (Propagator, scattering_matrix, unitarity_defects,
                                 wave_operator_cook, wave_packet_basis)

grid = make_grid(1, 128, 32.0)
H0 = frac_power_eig(build_laplacian(grid), 0.5)          # s = 1
basis, labels = wave_packet_basis(grid, [1.25, 1.75, 2.25, 2.75], [-3.0, 3.0], 3.0, "centred")
print("basis size:", basis.shape[1])

for a in (0.0, 0.1, 0.5):
    A = make_potential(grid, "gaussian", {"a": a, "w": 2.0})
    HA = frac_power_eig(build_magnetic_laplacian(grid, A), 0.5)
    V = HA - H0
    props = (Propagator(HA), Propagator(H0))
    Wp = wave_operator_cook(HA, H0, V, basis, "+", 20.0, propagators=props)
    Wm = wave_operator_cook(HA, H0, V, basis, "-", 20.0, propagators=props)
    S = scattering_matrix(Wp.value, Wm.value)
    d1, d2 = unitarity_defects(S)
    print(f"a = {a}:  |S*S - I| = {d1:.1e}   |SS* - I| = {d2:.1e}   "
          f"|S - I| = {np.linalg.norm(S - np.eye(len(S)), 2):.3f}")
