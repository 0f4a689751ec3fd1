"""Periodic pseudospectral lattice, Fourier symbols and weighted norms.

Grid functions are numpy arrays of shape ``(N,)`` (n=1) or ``(N, N)`` (n=2).
Operators act on the flattened C-order vector of length ``N**n``.  The
discrete Fourier transform is ``numpy.fft.fftn`` with ``norm="ortho"``, so
coefficients come in numpy's frequency ordering and Parseval holds exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import GridError

DEFAULT_MEMORY_CAP = 4096
SUPPORT_MARGIN = 0.8


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-L, L)**n`` with ``N`` points per axis."""

    n: int
    N: int
    L: float

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @cached_property
    def x1d(self) -> NDArray[np.float64]:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def k1d(self) -> NDArray[np.int64]:
        """Integer wave numbers per axis in FFT ordering."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).round().astype(np.int64)

    @cached_property
    def xi1d(self) -> NDArray[np.float64]:
        return np.pi * self.k1d / self.L

    @cached_property
    def coords(self) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.meshgrid(*([self.x1d] * self.n), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.meshgrid(*([self.xi1d] * self.n), indexing="ij"))

    @cached_property
    def radius(self) -> NDArray[np.float64]:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def xi_norm(self) -> NDArray[np.float64]:
        return np.sqrt(sum(c**2 for c in self.xi))

    @cached_property
    def k_squared(self) -> NDArray[np.int64]:
        """Integer ``|k|**2`` over the mode lattice (exact shell labels)."""
        ks = np.meshgrid(*([self.k1d] * self.n), indexing="ij")
        return sum(k * k for k in ks)

    @property
    def xi_max(self) -> float:
        return np.pi * self.N / (2.0 * self.L)

    def japanese(self) -> NDArray[np.float64]:
        """The bracket ``<x> = sqrt(1 + |x|^2)`` on the nodes."""
        return np.sqrt(1.0 + self.radius**2)

    def weight(self, sigma: float) -> NDArray[np.float64]:
        return self.japanese() ** sigma

    def bessel_symbol(self, s: float) -> NDArray[np.float64]:
        """Fourier multiplier ``(1 + |xi|^2)^(s/2)``."""
        return (1.0 + self.xi_norm**2) ** (0.5 * s)

    def fft(self, u: NDArray) -> NDArray[np.complex128]:
        return np.fft.fftn(np.reshape(u, self.shape), norm="ortho")

    def ifft(self, u_hat: NDArray) -> NDArray[np.complex128]:
        return np.fft.ifftn(np.reshape(u_hat, self.shape), norm="ortho")

    def apply_multiplier(self, symbol: NDArray, u: NDArray) -> NDArray[np.complex128]:
        return self.ifft(symbol * self.fft(u))

    def derivative(self, u: NDArray, axis: int) -> NDArray[np.complex128]:
        """Spectral partial derivative along ``axis``."""
        return self.apply_multiplier(1j * self.xi[axis], u)

    def l2_norm(self, u: NDArray) -> float:
        return float(self.h ** (0.5 * self.n) * np.linalg.norm(np.ravel(u)))

    def inner(self, u: NDArray, v: NDArray) -> complex:
        """Grid ``L^2`` inner product, antilinear in the first slot."""
        return complex(self.h**self.n * np.vdot(np.ravel(u), np.ravel(v)))

    def mode(self, k: tuple[int, ...] | int) -> NDArray[np.complex128]:
        """Plane wave ``exp(i xi_k . x)`` sampled on the nodes."""
        k = (k,) if np.isscalar(k) else tuple(k)
        phase = sum(np.pi * kj / self.L * c for kj, c in zip(k, self.coords))
        return np.exp(1j * phase)

    def check_support(self, u: NDArray, tol: float = 1e-10) -> bool:
        """Warn when ``u`` carries mass beyond ``0.8 L``; returns True if clean."""
        outside = np.abs(np.reshape(u, self.shape))[self.radius > SUPPORT_MARGIN * self.L]
        scale = np.max(np.abs(u)) if np.size(u) else 0.0
        if outside.size and scale > 0 and outside.max() > tol * scale:
            warnings.warn(
                f"grid function has relative mass {outside.max() / scale:.2e} beyond "
                f"{SUPPORT_MARGIN}L; weights use true coordinates", stacklevel=2)
            return False
        return True


def _is_power_of_two(N: int) -> bool:
    return N > 0 and (N & (N - 1)) == 0


def make_grid(n: int, N: int, L: float, memory_cap: int = DEFAULT_MEMORY_CAP) -> GridSpec:
    """Validate parameters and build a :class:`GridSpec`."""
    if n not in (1, 2):
        raise GridError(f"dimension n must be 1 or 2, got {n}")
    if not isinstance(N, (int, np.integer)) or not _is_power_of_two(int(N)) or N < 8:
        raise GridError(f"N must be a power of two >= 8 for the FFT, got {N}")
    if not np.isfinite(L) or L <= 0:
        raise GridError(f"half-width L must be positive, got {L}")
    if int(N) ** n > memory_cap:
        raise GridError(f"N^n = {int(N) ** n} exceeds the dense memory cap {memory_cap}")
    return GridSpec(int(n), int(N), float(L))


class SpaceKind(str, Enum):
    L2SIGMA = "L2sigma"
    HSSIGMA = "Hssigma"


@dataclass(frozen=True)
class WeightedSpace:
    """``L^{2,sigma}`` (kind L2sigma) or ``H^{s,sigma}`` (kind Hssigma)."""

    sigma: float = 0.0
    s: float = 0.0
    kind: SpaceKind = SpaceKind.L2SIGMA

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind is SpaceKind.HSSIGMA and self.s < 0:
            raise ValueError("H^{s,sigma} needs s >= 0")


def weighted_norm(grid: GridSpec, u: NDArray, space: WeightedSpace) -> float:
    """Norm of ``u`` in the given weighted space."""
    if np.size(u) != grid.size:
        raise ValueError(f"grid function has {np.size(u)} entries, grid has {grid.size}")
    v = np.reshape(u, grid.shape)
    if space.kind is SpaceKind.HSSIGMA and space.s != 0:
        v = grid.apply_multiplier(grid.bessel_symbol(space.s), v)
    return grid.l2_norm(grid.weight(space.sigma) * v)


def fractional_symbol(grid: GridSpec, s: float, z: complex = 0.0) -> NDArray:
    """Table of ``|xi|^s - z`` over the mode lattice (FFT ordering)."""
    if s <= 0:
        raise ValueError("symbol order s must be positive")
    sym = grid.xi_norm**s
    if z == 0:
        return sym
    return sym - z


def fourier_matrix(grid: GridSpec) -> NDArray[np.complex128]:
    """Dense unitary DFT matrix acting on flattened grid vectors."""
    eye = np.eye(grid.size, dtype=complex).reshape((grid.size,) + grid.shape)
    axes = tuple(range(1, grid.n + 1))
    return np.fft.fftn(eye, axes=axes, norm="ortho").reshape(grid.size, grid.size).T


def multiplier_matrix(grid: GridSpec, symbol: NDArray) -> NDArray[np.complex128]:
    """Dense node-basis matrix of the Fourier multiplier ``symbol``."""
    F = fourier_matrix(grid)
    return F.conj().T @ (np.ravel(symbol)[:, None] * F)


def shell_energies(grid: GridSpec, s: float) -> NDArray[np.float64]:
    """Distinct values of ``|xi|^s`` over the mode lattice, ascending."""
    k2 = np.unique(grid.k_squared)
    return (np.pi / grid.L) ** s * k2.astype(float) ** (0.5 * s)


def local_shell_gap(grid: GridSpec, s: float, lam: float) -> float:
    """Spacing of the shell energies bracketing ``lam``.

    Strictly between two shells this is their difference; on a shell it is
    the mean of the two neighbouring spacings.
    """
    e = shell_energies(grid, s)
    i = int(np.searchsorted(e, lam))
    if i < len(e) and np.isclose(e[i], lam, rtol=1e-12, atol=0):
        lo = e[i] - e[i - 1] if i > 0 else e[i + 1] - e[i]
        hi = e[i + 1] - e[i] if i + 1 < len(e) else lo
        return float(0.5 * (lo + hi))
    if i == 0:
        return float(e[1] - e[0])
    if i >= len(e):
        return float(e[-1] - e[-2])
    return float(e[i] - e[i - 1])
