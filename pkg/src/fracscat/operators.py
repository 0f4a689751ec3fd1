"""Dense Hermitian operators: Laplacians, fractional powers and ``V_x``.

Two independent routes compute fractional powers.  The eigen route applies
``lambda -> lambda^p`` to a dense Hermitian eigendecomposition and is the
oracle.  The Balakrishnan route integrates resolvents by quadrature and never
diagonalises anything.

Exact null vectors are handled by deflation in the quadrature route: the
known kernel ``K`` (for example the constant mode of ``-Delta``) is shifted
to ``nu`` before integration and its contribution removed in closed form.
Without it, ``lambda^(s/2)`` is evaluated at the rounding-level eigenvalue
near zero, which costs several digits for small ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .errors import HermiticityViolation, NegativeSpectrum
from .grid import GridSpec, fourier_matrix, multiplier_matrix
from .potentials import VectorPotential, antiderivative_1d
from .quadrature import QuadratureScheme, integrate, integrate_checked

HERMITICITY_TOL = 1e-10
NEGATIVE_TOL = 1e-8
SNAP_FACTOR = 64.0


class HermitianOperator:
    """Dense complex Hermitian matrix in the grid-node basis.

    ``null_basis`` optionally holds orthonormal columns spanning a known
    exact kernel; it is used by the quadrature route only.
    """

    def __init__(self, matrix: NDArray, label: str = "", null_basis: NDArray | None = None,
                 meta: dict | None = None):
        self.matrix = np.ascontiguousarray(matrix, dtype=complex)
        self.label = label
        self.null_basis = null_basis
        self.meta = dict(meta or {})
        self._eig: tuple[NDArray, NDArray] | None = None
        self._norm: float | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim}, label={self.label!r})"

    def apply(self, u: NDArray) -> NDArray:
        shape = np.shape(u)
        return (self.matrix @ np.reshape(u, (self.dim, -1))).reshape(shape)

    def solve_shifted(self, z: complex, u: NDArray) -> NDArray:
        """Solve ``(M - z) w = u`` by dense factorisation."""
        shape = np.shape(u)
        A = self.matrix - z * np.eye(self.dim)
        w = sla.solve(A, np.reshape(u, (self.dim, -1)), assume_a="her" if np.imag(z) == 0 else "gen")
        return w.reshape(shape)

    def eig(self) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
        """Cached ascending eigenvalues and orthonormal eigenvectors."""
        if self._eig is None:
            w, U = np.linalg.eigh(self.matrix)
            self._eig = (w, U)
        return self._eig

    def set_eig(self, w: NDArray, U: NDArray) -> None:
        order = np.argsort(w, kind="stable")
        self._eig = (np.asarray(w)[order], np.asarray(U)[:, order])

    def norm(self) -> float:
        """Spectral norm (largest absolute eigenvalue)."""
        if self._norm is None:
            if self._eig is not None:
                self._norm = float(np.max(np.abs(self._eig[0])))
            else:
                self._norm = float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))
        return self._norm

    def hermiticity_residual(self) -> float:
        scale = max(self.norm(), np.finfo(float).tiny)
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)) / scale)

    def eig_residuals(self) -> dict[str, float]:
        w, U = self.eig()
        scale = max(self.norm(), np.finfo(float).tiny)
        recon = np.linalg.norm(self.matrix - (U * w) @ U.conj().T, 2) / scale
        ortho = np.max(np.abs(U.conj().T @ U - np.eye(self.dim)))
        return {"reconstruction": float(recon), "orthonormality": float(ortho)}

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix - other.matrix, f"({self.label})-({other.label})")


def _hermitian_from(matrix: NDArray, label: str, tol: float = HERMITICITY_TOL,
                    **kwargs) -> HermitianOperator:
    """Check Hermiticity, then store the exactly symmetrised matrix."""
    skew = np.max(np.abs(matrix - matrix.conj().T))
    scale = np.max(np.abs(matrix).sum(axis=1))
    if scale > 0 and skew > tol * scale:
        raise HermiticityViolation(
            f"{label}: |M - M*| = {skew:.2e} exceeds {tol:.0e} |M|; refine the grid")
    return HermitianOperator(0.5 * (matrix + matrix.conj().T), label, **kwargs)


def constant_null_basis(grid: GridSpec) -> NDArray[np.complex128]:
    return np.full((grid.size, 1), 1.0 / np.sqrt(grid.size), dtype=complex)


def build_laplacian(grid: GridSpec) -> HermitianOperator:
    """``-Delta`` with symbol ``|xi|^2``; plane-wave eigenbasis attached."""
    sym = np.ravel(grid.xi_norm**2)
    F = fourier_matrix(grid)
    op = HermitianOperator(multiplier_matrix(grid, sym), "laplacian",
                           null_basis=constant_null_basis(grid))
    op.set_eig(sym, F.conj().T)
    return op


def derivative_matrix(grid: GridSpec, axis: int) -> NDArray[np.complex128]:
    return multiplier_matrix(grid, 1j * grid.xi[axis])


def first_order_matrix(A: VectorPotential) -> NDArray[np.complex128]:
    """Dense matrix of ``V1 = -i A.grad - i div(A .) + |A|^2``."""
    grid = A.grid
    out = np.diag(np.ravel(A.magnitude() ** 2)).astype(complex)
    for k, comp in enumerate(A.components):
        D = derivative_matrix(grid, k)
        a = np.ravel(comp)
        out += -1j * (a[:, None] * D) - 1j * (D * a[None, :])
    return out


def gauge_null_vector(A: VectorPotential) -> NDArray[np.complex128] | None:
    """Kernel vector ``exp(i G)`` of ``-Delta_A`` for a zero-flux 1-D potential."""
    grid = A.grid
    if grid.n != 1:
        return None
    a = A.components[0]
    if abs(np.sum(a) * grid.h) > 1e-8:
        return None
    G = -antiderivative_1d(grid, a)
    v = np.exp(1j * G)
    return (v / np.linalg.norm(v))[:, None]


def build_magnetic_laplacian(grid: GridSpec, A: VectorPotential,
                             null_tol: float = 1e-12) -> HermitianOperator:
    """``-Delta_A = sum_j D_j^* D_j`` with ``D_j = d_j + i A_j``."""
    if A.is_zero:
        op = build_laplacian(grid)
        op.label = "magnetic_laplacian[A=0]"
        op._eig = None
        return op
    H = np.zeros((grid.size, grid.size), dtype=complex)
    for k, comp in enumerate(A.components):
        D = derivative_matrix(grid, k) + 1j * np.diag(np.ravel(comp))
        H += D.conj().T @ D
    op = _hermitian_from(H, f"magnetic_laplacian[{A.family.value}]")
    v = gauge_null_vector(A)
    if v is not None and np.linalg.norm(op.matrix @ v) <= null_tol * op.norm():
        op.null_basis = v
    return op


def coupling_constant_closed_form(s: float) -> float:
    return float(np.sin(0.5 * np.pi * s) / np.pi)


def coupling_constant(s: float, scheme: QuadratureScheme | None = None) -> float:
    """``c(s)`` as the reciprocal of ``int_0^inf tau^(s/2-1)/(tau+1) d tau``."""
    if not 0 < s < 2:
        raise ValueError("order s must lie in (0, 2)")
    scheme = scheme or QuadratureScheme()
    res = integrate(lambda tau: np.array(tau ** (0.5 * s - 1) / (tau + 1.0)), scheme)
    return float(1.0 / res.value)


def _snapped_eigenvalues(H: HermitianOperator) -> NDArray[np.float64]:
    w, _ = H.eig()
    if w.min() < -NEGATIVE_TOL:
        raise NegativeSpectrum(f"{H.label}: smallest eigenvalue {w.min():.3e} < -{NEGATIVE_TOL}")
    snap = SNAP_FACTOR * np.finfo(float).eps * max(H.norm(), 1.0)
    return np.where(np.abs(w) <= snap, 0.0, np.maximum(w, 0.0))


def frac_power_eig(H: HermitianOperator, p: float) -> HermitianOperator:
    """``H^p`` by functional calculus on the cached eigendecomposition."""
    if p <= 0:
        raise ValueError("exponent p must be positive")
    w = _snapped_eigenvalues(H)
    _, U = H.eig()
    wp = w**p
    op = HermitianOperator((U * wp) @ U.conj().T, f"({H.label})^{p:g}[eig]",
                           null_basis=H.null_basis)
    op.matrix = 0.5 * (op.matrix + op.matrix.conj().T)
    op.set_eig(wp, U)
    return op


def _posdef_solver(M: NDArray):
    """Return ``tau -> ((tau + M)^{-1} applied to a right-hand side)`` factory."""
    eye = np.eye(M.shape[0])

    def solve(tau: float, rhs: NDArray) -> NDArray:
        try:
            c = sla.cho_factor(M + tau * eye, lower=False, check_finite=False)
            return sla.cho_solve(c, rhs, check_finite=False)
        except sla.LinAlgError:
            return sla.solve(M + tau * eye, rhs, check_finite=False)

    return solve


def _deflated(H: HermitianOperator):
    """Return ``(H + nu K K^*, K, nu)``; ``K`` is None without a known kernel."""
    K = H.null_basis
    if K is None:
        return H.matrix, None, 0.0
    nu = float(np.max(np.abs(H.matrix).sum(axis=1)))
    return H.matrix + nu * (K @ K.conj().T), K, nu


def frac_power_balakrishnan(H: HermitianOperator, s: float,
                            scheme: QuadratureScheme | None = None,
                            check: bool = True) -> HermitianOperator:
    """``H^(s/2) = c(s) H int_0^inf tau^(s/2-1) (tau + H)^{-1} d tau``."""
    if not 0 < s < 2:
        raise ValueError("order s must lie in (0, 2)")
    scheme = scheme or QuadratureScheme()
    c = coupling_constant(s, scheme)
    Hd, K, nu = _deflated(H)
    solve = _posdef_solver(Hd)

    def integrand(tau):
        return tau ** (0.5 * s - 1) * solve(tau, Hd)

    res = integrate_checked(integrand, scheme, check=check)
    out = c * res.value
    if K is not None:
        out = out - nu ** (0.5 * s) * (K @ K.conj().T)
    out = 0.5 * (out + out.conj().T)
    meta = {"t_min": res.t_min, "t_max": res.t_max, "evaluations": res.evaluations,
            "doubling_change": res.doubling_change, "deflated": K is not None}
    return HermitianOperator(out, f"({H.label})^{s / 2:g}[quad]", null_basis=H.null_basis,
                             meta=meta)


class Route(str, Enum):
    DIFFERENCE = "difference"
    INTEGRAL = "integral"


@dataclass
class OperatorPair:
    """``-Delta`` and ``-Delta_A`` built once and shared between routes."""

    grid: GridSpec
    A: VectorPotential
    H0: HermitianOperator = field(init=False)
    HA: HermitianOperator = field(init=False)

    def __post_init__(self):
        self.H0 = build_laplacian(self.grid)
        self.HA = build_magnetic_laplacian(self.grid, self.A)


def perturbation_vx(grid: GridSpec, A: VectorPotential, s: float,
                    route: str | Route = Route.DIFFERENCE, ordering: str = "first",
                    scheme: QuadratureScheme | None = None, pair: OperatorPair | None = None,
                    check: bool = True) -> HermitianOperator:
    """``V_x = (-Delta_A)^(s/2) - (-Delta)^(s/2)`` by the chosen route.

    The integral route evaluates
    ``c(s) int tau^(s/2) (tau + H_A)^{-1} V1 (tau + H_0)^{-1} d tau``
    (``ordering="first"``) or the same with the two resolvents swapped
    (``ordering="second"``).
    """
    route = Route(route)
    if not 0 < s < 2:
        raise ValueError("order s must lie in (0, 2)")
    pair = pair or OperatorPair(grid, A)
    label = f"Vx[s={s:g},{route.value}]"
    if A.is_zero:
        return HermitianOperator(np.zeros((grid.size, grid.size), complex), label)
    if route is Route.DIFFERENCE:
        V = frac_power_eig(pair.HA, 0.5 * s).matrix - frac_power_eig(pair.H0, 0.5 * s).matrix
        return _hermitian_from(V, label, tol=1e-9)
    if ordering not in ("first", "second"):
        raise ValueError("ordering must be 'first' or 'second'")
    scheme = scheme or QuadratureScheme()
    c = coupling_constant(s, scheme)
    V1 = first_order_matrix(A)
    left, right = (pair.HA, pair.H0) if ordering == "first" else (pair.H0, pair.HA)
    Ld, KL, nuL = _deflated(left)
    Rd, KR, nuR = _deflated(right)
    solve_L = _posdef_solver(Ld)
    solve_R = _posdef_solver(Rd)
    V1_KR = V1 @ KR if KR is not None else None
    KL_V1 = KL.conj().T @ V1 if KL is not None else None

    def integrand(tau):
        right_part = solve_R(tau, V1.conj().T).conj().T  # V1 (tau + R)^{-1}
        term = solve_L(tau, right_part)
        if KR is not None:
            gR = 1.0 / tau - 1.0 / (tau + nuR)
            term = term + gR * solve_L(tau, V1_KR) @ KR.conj().T
        if KL is not None:
            gL = 1.0 / tau - 1.0 / (tau + nuL)
            term = term + gL * KL @ solve_R(tau, KL_V1.conj().T).conj().T
        return tau ** (0.5 * s) * term

    res = integrate_checked(integrand, scheme, check=check)
    V = c * res.value
    op = _hermitian_from(V, label + f"[{ordering}]", tol=1e-9)
    op.meta = {"t_min": res.t_min, "t_max": res.t_max, "evaluations": res.evaluations,
               "doubling_change": res.doubling_change}
    return op


def weighted_vx_norm(grid: GridSpec, Vx: HermitianOperator, s: float, sigma: float,
                     delta: float, alpha: float) -> float:
    """Largest singular value of ``<x>^delta V_x : H^{s,-sigma} -> H^{alpha,-sigma}``."""
    if sigma <= 0.5 or delta <= 1 or not 0 < alpha < min(1.0, s):
        raise ValueError("need sigma > 1/2, delta > 1 and 0 < alpha < min(1, s)")
    w = np.ravel(grid.japanese())
    B_alpha = multiplier_matrix(grid, grid.bessel_symbol(alpha))
    B_s_inv = multiplier_matrix(grid, grid.bessel_symbol(-s))
    out = (w ** (-sigma))[:, None] * (B_alpha @ ((w**delta)[:, None] * Vx.matrix))
    T = out @ (B_s_inv * (w**sigma)[None, :])
    return float(np.linalg.norm(T, 2))
