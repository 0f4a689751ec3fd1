"""Fractional magnetic Schrödinger scattering on periodic pseudospectral grids."""

__version__ = "0.1.0"

from .grid import GridSpec, make_grid  # noqa: E402
from .potentials import VectorPotential, certify_decay, make_potential  # noqa: E402
from .operators import (HermitianOperator, build_laplacian, build_magnetic_laplacian,  # noqa: E402
                        frac_power_balakrishnan, frac_power_eig, perturbation_vx)

__all__ = ["GridSpec", "make_grid", "VectorPotential", "certify_decay", "make_potential",
           "HermitianOperator", "build_laplacian", "build_magnetic_laplacian",
           "frac_power_balakrishnan", "frac_power_eig", "perturbation_vx", "__version__"]
