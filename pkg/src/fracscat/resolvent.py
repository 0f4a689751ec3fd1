"""Free and magnetic fractional resolvents and limiting-absorption limits.

Sign convention: ``R_0(z) = (|xi|^s - z)^{-1}``, so the boundary value
``R_0(lam + i0)`` is the limit of ``(|xi|^s - lam - i eps)^{-1}``.  The
Balakrishnan quadrature in :mod:`operators` uses ``(tau + H)^{-1}`` instead,
which is ``-R(-tau)`` in this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import NearSpectrum, NotConverging, SingularShift
from .grid import (GridSpec, SpaceKind, WeightedSpace, local_shell_gap,
                   multiplier_matrix, shell_energies, weighted_norm)
from .operators import HermitianOperator

SINGULAR_TOL = 1e-13
SPECTRUM_MARGIN = 1e-10
MIN_LADDER = 5


def free_resolvent(grid: GridSpec, s: float, z: complex, u: NDArray) -> NDArray:
    """``F^{-1} (|xi|^s - z)^{-1} F u``."""
    denom = grid.xi_norm**s - z
    if np.min(np.abs(denom)) < SINGULAR_TOL:
        raise SingularShift(f"z = {z} coincides with a grid value of |xi|^{s:g}")
    return grid.apply_multiplier(1.0 / denom, u)


def free_resolvent_matrix(grid: GridSpec, s: float, z: complex) -> NDArray:
    denom = grid.xi_norm**s - z
    if np.min(np.abs(denom)) < SINGULAR_TOL:
        raise SingularShift(f"z = {z} coincides with a grid value of |xi|^{s:g}")
    return multiplier_matrix(grid, 1.0 / denom)


def magnetic_fractional_resolvent(HsA: HermitianOperator, z: complex, u: NDArray,
                                  margin: float = SPECTRUM_MARGIN) -> NDArray:
    """Solve ``(H - z) w = u`` after checking ``z`` against the spectrum."""
    w, _ = HsA.eig()
    j = int(np.argmin(np.abs(w - z)))
    if abs(w[j] - z) < margin:
        raise NearSpectrum(f"z = {z} is within {margin:g} of eigenvalue {w[j]:.6g}",
                           eigenvalue=float(w[j]))
    return HsA.solve_shifted(z, u)


def neville_at_zero(eps: NDArray, values: list) -> object:
    """Polynomial extrapolation of ``values(eps)`` to ``eps = 0``."""
    p = [np.asarray(v) for v in values]
    x = np.asarray(eps, dtype=float)
    m = len(p)
    for level in range(1, m):
        for i in range(m - level):
            j = i + level
            p[i] = (x[j] * p[i] - x[i] * p[i + 1]) / (x[j] - x[i])
    return p[0]


@dataclass(frozen=True)
class BoundaryResolvent:
    """Limiting-absorption recipe for ``R_0(lam +- i0)``.

    The ladder is ``eps_k = eps0 * ratio**k`` for ``k < depth``; entries below
    ``floor_factor`` times the local shell gap are dropped because the
    finite grid then resolves individual eigenvalues instead of a continuum.
    ``eps0=None`` starts the ladder so that ``MIN_LADDER`` entries remain.
    Extrapolation to ``eps = 0`` is polynomial of degree ``order`` on the
    last ``order + 1`` kept entries (``order=1`` is first-order Richardson).
    """

    lam: float
    sign: int = 1
    s: float = 1.0
    eps0: float | None = None
    ratio: float = 0.5
    depth: int = 8
    order: int = 1
    sigma: float = 1.0
    floor_factor: float = 2.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("spectral parameter lam must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not 0 < self.ratio < 1 or self.depth < 2 or self.order < 1:
            raise ValueError("need 0 < ratio < 1, depth >= 2, order >= 1")

    def floor(self, grid: GridSpec) -> float:
        return self.floor_factor * local_shell_gap(grid, self.s, self.lam)

    def ladder(self, grid: GridSpec) -> tuple[NDArray, NDArray, float]:
        """Return ``(kept, dropped, floor)`` ladders for this grid."""
        e = shell_energies(grid, self.s)
        gap = local_shell_gap(grid, self.s, self.lam)
        if self.lam > e[-1] + 0.5 * gap:
            raise ValueError(f"lam = {self.lam} lies beyond the top shell {e[-1]:.4g}")
        floor = self.floor_factor * gap
        eps0 = self.eps0 if self.eps0 is not None else floor * self.ratio ** (-(MIN_LADDER - 1))
        eps = eps0 * self.ratio ** np.arange(self.depth)
        keep = eps >= floor * (1 - 1e-12)
        if keep.sum() < self.order + 1:
            raise NotConverging(
                f"only {keep.sum()} ladder entries lie above the resolution floor "
                f"{floor:.3g}; raise eps0 or enlarge L")
        return eps[keep], eps[~keep], floor

    def shift(self, eps: float) -> complex:
        return self.lam + 1j * self.sign * eps

    def extrapolants(self, eps: NDArray, values: list) -> list:
        """Running extrapolants; entry ``k`` uses ladder entries up to ``k``."""
        out = []
        for k in range(self.order, len(eps)):
            lo = k - self.order
            out.append(neville_at_zero(eps[lo:k + 1], values[lo:k + 1]))
        return out


@dataclass
class LimitingAbsorptionReport:
    lam: float
    sign: int
    sigma: float
    floor: float
    epsilon: list[float]
    dropped: list[float]
    weighted_norm: list[float]
    unweighted_norm: list[float]
    extrapolant_norm: list[float]
    differences: list[float]
    bound_estimate: float
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[float, float, float, float]]:
        pad = len(self.epsilon) - len(self.extrapolant_norm)
        ext = [float("nan")] * pad + list(self.extrapolant_norm)
        return list(zip(self.epsilon, self.weighted_norm, self.unweighted_norm, ext))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "lam", "sign", "sigma", "floor", "epsilon", "dropped", "weighted_norm",
            "unweighted_norm", "extrapolant_norm", "differences", "bound_estimate", "extra")}


def _check_differences(diffs: list[float]) -> None:
    tail = diffs[-3:]
    if len(tail) >= 2 and any(b > a * (1 + 1e-9) + 1e-15 for a, b in zip(tail, tail[1:])):
        raise NotConverging(
            f"extrapolation differences {['%.2e' % d for d in tail]} do not decrease; "
            "lam may sit near a sparse shell")


def limiting_absorption(grid: GridSpec, s: float, lam: float, sign: int, sigma: float,
                        u: NDArray, recipe: BoundaryResolvent | None = None,
                        check: bool = True) -> tuple[NDArray, LimitingAbsorptionReport]:
    """Extrapolated ``R_0(lam +- i0) u`` with the weighted-norm history."""
    if sigma <= 0.5:
        raise ValueError("weight exponent sigma must exceed 1/2")
    recipe = recipe or BoundaryResolvent(lam, sign, s, sigma=sigma)
    eps, dropped, floor = recipe.ladder(grid)
    out_space = WeightedSpace(-sigma, s, SpaceKind.HSSIGMA)
    vals = [free_resolvent(grid, s, recipe.shift(e), u) for e in eps]
    ext = recipe.extrapolants(eps, vals)
    diffs = [weighted_norm(grid, b - a, out_space) for a, b in zip(ext, ext[1:])]
    if check:
        _check_differences(diffs)
    u_norm = weighted_norm(grid, u, WeightedSpace(sigma))
    final = ext[-1]
    report = LimitingAbsorptionReport(
        lam=lam, sign=sign, sigma=sigma, floor=floor,
        epsilon=eps.tolist(), dropped=dropped.tolist(),
        weighted_norm=[weighted_norm(grid, v, out_space) for v in vals],
        unweighted_norm=[grid.l2_norm(v) for v in vals],
        extrapolant_norm=[weighted_norm(grid, e, out_space) for e in ext],
        differences=diffs,
        bound_estimate=weighted_norm(grid, final, out_space) / u_norm if u_norm else 0.0)
    return final, report


def boundary_resolvent_matrix(grid: GridSpec, recipe: BoundaryResolvent) -> NDArray:
    """Dense extrapolated ``R_0(lam +- i0)`` in the node basis (columnwise limit)."""
    eps, _, _ = recipe.ladder(grid)
    mats = [free_resolvent_matrix(grid, recipe.s, recipe.shift(e)) for e in eps]
    return recipe.extrapolants(eps, mats)[-1]


def limiting_absorption_norms(grid: GridSpec, recipe: BoundaryResolvent,
                              check: bool = True) -> LimitingAbsorptionReport:
    """Operator norms of ``R_0(lam +- i eps)`` over the ladder.

    ``weighted_norm`` is the norm ``L^{2,sigma} -> H^{s,-sigma}`` and
    ``unweighted_norm`` the plain ``L^2 -> L^2`` norm; both are exact
    largest singular values of dense matrices.
    """
    s, sigma = recipe.s, recipe.sigma
    eps, dropped, floor = recipe.ladder(grid)
    w = np.ravel(grid.weight(-sigma))
    B = multiplier_matrix(grid, grid.bessel_symbol(s))
    mats = [free_resolvent_matrix(grid, s, recipe.shift(e)) for e in eps]
    wrap = [w[:, None] * (B @ m) * w[None, :] for m in mats]
    ext = recipe.extrapolants(eps, wrap)
    diffs = [float(np.linalg.norm(b - a, 2)) for a, b in zip(ext, ext[1:])]
    if check:
        _check_differences(diffs)
    ext_norms = [float(np.linalg.norm(e, 2)) for e in ext]
    return LimitingAbsorptionReport(
        lam=recipe.lam, sign=recipe.sign, sigma=sigma, floor=floor,
        epsilon=eps.tolist(), dropped=dropped.tolist(),
        weighted_norm=[float(np.linalg.norm(m, 2)) for m in wrap],
        unweighted_norm=[float(1.0 / np.min(np.abs(grid.xi_norm**s - recipe.shift(e))))
                         for e in eps],
        extrapolant_norm=ext_norms, differences=diffs, bound_estimate=ext_norms[-1])


def log_log_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


@dataclass
class ScalingFit:
    taus: list[float]
    norms: list[float]
    exponent: float
    predicted: float
    N_w: float
    N1_w: float

    def rows(self):
        return list(zip(self.taus, self.norms))

    def to_dict(self) -> dict:
        return dict(taus=self.taus, norms=self.norms, exponent=self.exponent,
                    predicted=self.predicted, N_w=self.N_w, N1_w=self.N1_w)


def weighted_free_resolvent_scaling(grid: GridSpec, taus, N_w: float, N1_w: float) -> ScalingFit:
    """Fit ``log || <x>^N1 (tau - Delta)^{-1} <x>^-N ||`` against ``log tau``."""
    if not 0 <= N1_w <= N_w:
        raise ValueError("need 0 <= N1 <= N")
    taus = np.asarray(taus, dtype=float)
    w = np.ravel(grid.japanese())
    norms = []
    for tau in taus:
        R = multiplier_matrix(grid, 1.0 / (tau + grid.xi_norm**2))
        T = (w**N1_w)[:, None] * R * (w ** (-N_w))[None, :]
        norms.append(float(np.linalg.norm(T, 2)))
    return ScalingFit(taus.tolist(), norms, log_log_slope(taus, norms),
                      -1.0 + 0.5 * (N_w - N1_w), float(N_w), float(N1_w))
