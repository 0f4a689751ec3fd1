"""Eigen-diagnostics: localisation, the power identity and gauge equivalence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import FluxObstruction
from .grid import GridSpec, fourier_matrix
from .operators import HermitianOperator, build_laplacian, build_magnetic_laplacian
from .potentials import VectorPotential, antiderivative_1d

PR_THRESHOLD = 0.2
EMBEDDED_MIN = 1e-6
FLUX_TOL = 1e-8


def participation_ratio(U: NDArray) -> NDArray[np.float64]:
    """``(sum |u|^2)^2 / (M sum |u|^4)`` for each column of ``U``."""
    p = np.abs(U) ** 2
    return p.sum(axis=0) ** 2 / (U.shape[0] * (p**2).sum(axis=0))


@dataclass
class SpectralDecomposition:
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]
    participation: NDArray[np.float64]
    point_flags: NDArray[np.bool_]
    threshold: float
    residual: float
    orthonormality: float

    @property
    def point_vectors(self) -> NDArray:
        return self.eigenvectors[:, self.point_flags]

    @property
    def continuous_vectors(self) -> NDArray:
        return self.eigenvectors[:, ~self.point_flags]


def eigensystem(H: HermitianOperator, threshold: float = PR_THRESHOLD) -> SpectralDecomposition:
    """Dense diagonalisation with residual and orthonormality certificates."""
    w, U = H.eig()
    scale = max(H.norm(), np.finfo(float).tiny)
    residual = float(np.max(np.linalg.norm(H.matrix @ U - U * w, axis=0)) / scale)
    ortho = float(np.max(np.abs(U.conj().T @ U - np.eye(H.dim))))
    pr = participation_ratio(U)
    return SpectralDecomposition(w, U, pr, pr < threshold, threshold, residual, ortho)


@dataclass
class PowerIdentityTable:
    s: float
    integer_part: int
    fractional_part: float
    mu: NDArray[np.float64]
    defects: NDArray[np.float64]
    scale: float

    @property
    def max_relative(self) -> float:
        return float(self.defects.max() / self.scale)

    def rows(self):
        return list(zip(self.mu.tolist(), (self.defects / self.scale).tolist()))


def power_identity_check(HA: HermitianOperator, s: float) -> PowerIdentityTable:
    """Defects ``|H_A u_k - mu_k^{2/s} u_k|`` over eigenpairs of ``H_A^{s/2}``.

    ``H_A^{s/2}`` is assembled by functional calculus from ``H_A`` and then
    diagonalised afresh, so its eigenvectors are not copied from ``H_A``.
    The power ``2/s`` is applied as an integer part times a remainder in
    ``[0, 1)``.
    """
    if not 0 < s < 2:
        raise ValueError("order s must lie in (0, 2)")
    from .operators import frac_power_eig

    Hs = frac_power_eig(HA, 0.5 * s)
    mu, U = np.linalg.eigh(Hs.matrix)
    mu = np.maximum(mu, 0.0)
    power = 2.0 / s
    m2 = int(np.floor(power))
    a1 = power - m2
    lam = mu**m2 * (mu**a1 if a1 > 0 else 1.0)
    defects = np.linalg.norm(HA.matrix @ U - U * lam, axis=0)
    return PowerIdentityTable(s, m2, a1, mu, defects, HA.norm())


@dataclass
class EmbeddedScan:
    threshold: float
    energy_min: float
    indices: list[int]
    energies: list[float]
    participation: list[float]

    @property
    def empty(self) -> bool:
        return not self.indices

    def to_dict(self) -> dict:
        return dict(threshold=self.threshold, energy_min=self.energy_min,
                    indices=self.indices, energies=self.energies,
                    participation=self.participation, empty=self.empty)


def embedded_eigenvalue_scan(HsA: HermitianOperator, threshold: float = PR_THRESHOLD,
                             energy_min: float = EMBEDDED_MIN) -> EmbeddedScan:
    """Localised eigenvectors (participation below ``threshold``) above ``energy_min``."""
    dec = eigensystem(HsA, threshold)
    sel = np.flatnonzero(dec.point_flags & (dec.eigenvalues > energy_min))
    return EmbeddedScan(threshold, energy_min, sel.tolist(),
                        dec.eigenvalues[sel].tolist(), dec.participation[sel].tolist())


def double_barrier(grid: GridSpec, height: float = 40.0, separation: float = 6.0,
                   width: float = 0.5) -> NDArray[np.float64]:
    """Two smooth scalar barriers at ``+-separation/2`` along the first axis.

    Added to the diagonal this traps states at positive energy; it is an
    electric potential and therefore outside the magnetic class.
    """
    x = grid.coords[0]
    c = 0.5 * separation
    bump = np.exp(-((x - c) ** 2) / width**2) + np.exp(-((x + c) ** 2) / width**2)
    return (height * bump).ravel()


def with_scalar_potential(H: HermitianOperator, q: NDArray) -> HermitianOperator:
    return HermitianOperator(H.matrix + np.diag(q), f"{H.label}+scalar")


@dataclass
class GaugeReport:
    flux: float
    defect_full: float
    defect_band: float
    spectral_full: float
    spectral_band: float
    band: float

    def to_dict(self) -> dict:
        return dict(flux=self.flux, defect_full=self.defect_full,
                    defect_band=self.defect_band, spectral_full=self.spectral_full,
                    spectral_band=self.spectral_band, band=self.band)


def gauge_transform_check(grid: GridSpec, A: VectorPotential, band: float = 0.5) -> GaugeReport:
    """Compare ``U_G (-Delta_A) U_G^*`` with ``-Delta`` for ``G = -int_0^x A``.

    ``defect_full`` is the relative operator-norm defect on the whole grid.
    Near the Nyquist frequency the product ``A u`` aliases, so the defect is
    also measured on the Fourier band ``|xi| <= band * xi_max``
    (``defect_band``).  ``spectral_*`` compare ascending eigenvalues, all of
    them or those below ``(band * xi_max)^2``, relative to ``|-Delta|``.
    """
    if grid.n != 1:
        raise ValueError("the gauge check is one-dimensional")
    a = A.components[0]
    flux = float(np.sum(a) * grid.h)
    if abs(flux) > FLUX_TOL:
        raise FluxObstruction(
            f"flux int A = {flux:.3e}; exp(iG) is not single valued on the torus")
    G = -antiderivative_1d(grid, a)
    UG = np.exp(-1j * G)
    HA = build_magnetic_laplacian(grid, A)
    H0 = build_laplacian(grid)
    conj = UG[:, None] * HA.matrix * UG.conj()[None, :]
    scale = H0.norm()
    diff = conj - H0.matrix
    F = fourier_matrix(grid)
    keep = np.flatnonzero(np.ravel(grid.xi_norm) <= band * grid.xi_max)
    Fb = F[keep]
    diff_band = Fb @ diff @ Fb.conj().T
    eA = np.linalg.eigvalsh(HA.matrix)
    e0 = np.linalg.eigvalsh(H0.matrix)
    low = e0 <= (band * grid.xi_max) ** 2
    return GaugeReport(
        flux=flux,
        defect_full=float(np.linalg.norm(diff, 2) / scale),
        defect_band=float(np.linalg.norm(diff_band, 2) / scale),
        spectral_full=float(np.max(np.abs(eA - e0)) / scale),
        spectral_band=float(np.max(np.abs(eA[low] - e0[low])) / scale),
        band=band)
