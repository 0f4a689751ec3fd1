"""Energy shells, exceptional-set scans and distorted Fourier transforms.

On the lattice an energy surface ``{|xi|^s = lam}`` is the exact level set of
the integer ``|k|^2``, so shells do not depend on ``s`` as index sets.  The
transform is assembled shell by shell: for shell energy ``lam_j`` solve
``(I + V_x R_0(lam_j +- i eps)) w = u`` on the limiting-absorption ladder,
restrict ``F w`` to the shell and extrapolate the restricted values to
``eps = 0``.  Counting measure on the shell replaces the surface measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ExceptionalShell, NotConverging
from .grid import GridSpec, fourier_matrix
from .operators import HermitianOperator
from .resolvent import BoundaryResolvent, boundary_resolvent_matrix, neville_at_zero

EXCEPTIONAL_TOL = 1e-6
MASS_TOL = 1e-10
DEFAULT_ORDER = 3


@dataclass(frozen=True)
class ShellDecomposition:
    """Partition of the mode lattice (flat FFT ordering) into energy shells."""

    s: float
    k2: tuple[int, ...]
    energies: tuple[float, ...]
    indices: tuple[NDArray[np.int64], ...]
    excluded: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def multiplicities(self) -> list[int]:
        return [len(i) for i in self.indices]

    def interior(self) -> list[int]:
        """Shell numbers that count towards acceptance metrics."""
        return [j for j, ex in enumerate(self.excluded) if not ex]

    def shell_of(self) -> NDArray[np.int64]:
        """Shell number of every mode."""
        out = np.empty(sum(self.multiplicities), dtype=np.int64)
        for j, idx in enumerate(self.indices):
            out[idx] = j
        return out


def shell_decompose(grid: GridSpec, s: float) -> ShellDecomposition:
    """Group modes by ``|xi|^s``.

    The zero shell and every shell containing a Nyquist mode (wave number
    ``-N/2`` on some axis, which has no mirror partner) are marked excluded.
    """
    if s <= 0:
        raise ValueError("order s must be positive")
    k2 = np.ravel(grid.k_squared)
    ks = np.meshgrid(*([grid.k1d] * grid.n), indexing="ij")
    nyquist = np.zeros(grid.size, dtype=bool)
    for k in ks:
        nyquist |= np.ravel(k) == -grid.N // 2
    keys = np.unique(k2)
    indices, excluded = [], []
    for key in keys:
        idx = np.flatnonzero(k2 == key)
        indices.append(idx)
        excluded.append(bool(key == 0 or nyquist[idx].any()))
    energies = (np.pi / grid.L) ** s * keys.astype(float) ** (0.5 * s)
    return ShellDecomposition(s, tuple(int(k) for k in keys), tuple(energies.tolist()),
                              tuple(indices), tuple(excluded))


@dataclass
class ShellRecord:
    energy: float
    multiplicity: int
    excluded: bool
    epsilon: list[float]
    min_singular: float
    spread: float

    def to_dict(self) -> dict:
        return dict(energy=self.energy, multiplicity=self.multiplicity,
                    excluded=self.excluded, epsilon=self.epsilon,
                    min_singular=self.min_singular, spread=self.spread)


@dataclass
class DistortedTransform:
    """Values of ``F^A_{+-} u`` on the mode lattice (flat FFT ordering)."""

    values: NDArray[np.complex128]
    sign: int
    shells: ShellDecomposition
    records: list[ShellRecord] = field(default_factory=list)

    def on_shell(self, j: int) -> NDArray:
        return self.values[self.shells.indices[j]]

    def interior_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.values.shape[0], dtype=bool)
        for j in self.shells.interior():
            mask[self.shells.indices[j]] = True
        return mask


class DistortedFT:
    """Reusable distorted transform for fixed ``(grid, V_x, s, sigma, sign)``.

    Weighted-basis factors are precomputed once, so transforming many
    vectors (columns) costs one solve per shell and ladder entry.
    """

    def __init__(self, grid: GridSpec, Vx: HermitianOperator, s: float, sigma: float = 1.0,
                 sign: int = 1, ratio: float = 0.7, depth: int = 12,
                 order: int = DEFAULT_ORDER, eps0: float | None = None,
                 floor_factor: float = 2.0):
        self.grid, self.Vx, self.s, self.sigma, self.sign = grid, Vx, s, sigma, sign
        self.recipe_kwargs = dict(sign=sign, s=s, eps0=eps0, ratio=ratio, depth=depth,
                                  order=order, sigma=sigma, floor_factor=floor_factor)
        self.shells = shell_decompose(grid, s)
        self.F = fourier_matrix(grid)
        w = np.ravel(grid.weight(sigma))
        self.w = w
        self.zero = not np.any(Vx.matrix)
        Vw = w[:, None] * Vx.matrix / w[None, :]
        self.P = Vw @ (w[:, None] * self.F.conj().T)   # Vw W F^*
        self.Q = self.F / w[None, :]                    # F W^{-1}
        self.sym = np.ravel(grid.xi_norm**s)

    def recipe(self, lam: float) -> BoundaryResolvent:
        return BoundaryResolvent(lam, **self.recipe_kwargs)

    def transform(self, u: NDArray, check_exceptional: bool = True) -> DistortedTransform:
        grid = self.grid
        U = np.reshape(u, (grid.size, -1)).astype(complex)
        Fu = self.F @ U
        out = Fu.copy()
        records: list[ShellRecord] = []
        total = max(np.linalg.norm(U), np.finfo(float).tiny)
        eye = np.eye(grid.size)
        Wu = self.w[:, None] * U
        for j, (lam, idx) in enumerate(zip(self.shells.energies, self.shells.indices)):
            excluded = self.shells.excluded[j]
            if lam == 0 or self.zero:
                records.append(ShellRecord(lam, len(idx), excluded, [], 1.0, 0.0))
                continue
            recipe = self.recipe(lam)
            eps, _, _ = recipe.ladder(grid)
            vals, smin = [], np.inf
            for i, e in enumerate(eps):
                d = 1.0 / (self.sym - recipe.shift(e))
                M = eye + (self.P * d[None, :]) @ self.Q
                if check_exceptional and i == len(eps) - 1:
                    smin = float(np.linalg.svd(M, compute_uv=False)[-1])
                y = np.linalg.solve(M, Wu)
                vals.append(self.Q[idx] @ y)
            mass = np.linalg.norm(Fu[idx]) / total
            if check_exceptional and smin < EXCEPTIONAL_TOL and mass > MASS_TOL:
                raise ExceptionalShell(f"shell lam = {lam:.6g} is flagged exceptional "
                                       f"(smallest singular value {smin:.2e})", energy=lam)
            ext = recipe.extrapolants(eps, vals)
            out[idx] = ext[-1]
            spread = float(np.linalg.norm(ext[-1] - ext[-2])) if len(ext) > 1 else float("nan")
            records.append(ShellRecord(lam, len(idx), excluded, eps.tolist(),
                                       smin if check_exceptional else float("nan"), spread))
        values = out[:, 0] if np.ndim(u) == 1 else out
        return DistortedTransform(values, self.sign, self.shells, records)


def distorted_transform(grid: GridSpec, Vx: HermitianOperator, s: float, sigma: float,
                        u: NDArray, sign: int, **kwargs) -> DistortedTransform:
    """``F^A_{+-} u`` assembled shell by shell (see :class:`DistortedFT`)."""
    return DistortedFT(grid, Vx, s, sigma, sign, **kwargs).transform(u)


def intertwining_defects(dft: DistortedFT, propagate, u: NDArray, t: float) -> dict[float, float]:
    """Per interior shell: ``|F^A e^{itH} u - e^{it lam} F^A u| / |u|`` on the shell.

    ``propagate(t, u)`` must return ``e^{-itH} u``.
    """
    base = dft.transform(u)
    moved = dft.transform(propagate(-t, u))
    scale = np.linalg.norm(u)
    out = {}
    for j in dft.shells.interior():
        lam = dft.shells.energies[j]
        diff = moved.on_shell(j) - np.exp(1j * t * lam) * base.on_shell(j)
        out[lam] = float(np.linalg.norm(diff) / scale)
    return out


@dataclass
class ExceptionalScan:
    lams: list[float]
    sign: int
    sigma: float
    min_singular: list[float]
    flagged: list[float]
    missing: list[float]
    threshold: float = EXCEPTIONAL_TOL

    def to_dict(self) -> dict:
        return dict(lams=self.lams, sign=self.sign, sigma=self.sigma,
                    min_singular=self.min_singular, flagged=self.flagged,
                    missing=self.missing, threshold=self.threshold)


def exceptional_scan(grid: GridSpec, Vx: HermitianOperator, s: float, sigma: float,
                     lam_grid, sign: int = 1, ratio: float = 0.7, depth: int = 12,
                     order: int = 1, eps0: float | None = None) -> ExceptionalScan:
    """Smallest singular value of ``I + V_x R_0(lam +- i0)`` on ``L^{2,sigma}``."""
    w = np.ravel(grid.weight(sigma))
    Vw = w[:, None] * Vx.matrix / w[None, :]
    eye = np.eye(grid.size)
    lams, smins, flagged, missing = [], [], [], []
    for lam in lam_grid:
        lam = float(lam)
        try:
            R = boundary_resolvent_matrix(grid, BoundaryResolvent(
                lam, sign, s, eps0=eps0, ratio=ratio, depth=depth, order=order, sigma=sigma))
        except NotConverging:
            missing.append(lam)
            continue
        M = eye + Vw @ (w[:, None] * R / w[None, :])
        smin = float(np.linalg.svd(M, compute_uv=False)[-1])
        lams.append(lam)
        smins.append(smin)
        if smin < EXCEPTIONAL_TOL:
            flagged.append(lam)
    return ExceptionalScan(lams, sign, sigma, smins, flagged, missing)


def mid_shell_grid(grid: GridSpec, s: float, count: int, lo_frac: float = 0.05,
                   hi_frac: float = 0.7) -> NDArray[np.float64]:
    """``count`` energies at midpoints between consecutive shells in a band."""
    e = np.asarray(shell_decompose(grid, s).energies)
    mids = 0.5 * (e[1:] + e[:-1])
    top = e[-1]
    mids = mids[(mids > lo_frac * top) & (mids < hi_frac * top)]
    if len(mids) <= count:
        return mids
    pick = np.linspace(0, len(mids) - 1, count).round().astype(int)
    return mids[np.unique(pick)]
