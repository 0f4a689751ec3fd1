"""Magnetic vector potentials and numerical certification of their decay."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.special import erfc

from .errors import FitUnstable, PotentialError, UnderResolved
from .grid import GridSpec

BOUNDARY_TOL = 1e-10
FLOOR = 1e-14
RESOLUTION_TOL = 1e-8


class Family(str, Enum):
    ZERO = "zero"
    GAUSSIAN = "gaussian"
    POLYNOMIAL_DECAY = "polynomial_decay"
    CUSTOM_SAMPLES = "custom_samples"


@dataclass(frozen=True)
class DecayCertificate:
    """Fitted bound ``|A| + |grad A| + |grad grad A| <= C <x>^(-beta)``.

    ``beta`` and the line constant come from a least-squares fit in log-log
    coordinates over the annulus ``[L/4, 3L/4]``.  ``residual`` is the largest
    relative excess of the sampled profile over that fitted line, and ``C``
    is the line constant inflated by ``1 + residual`` so that the bound holds
    on every sample.  A small residual says the profile really is a power
    law; super-polynomial profiles (Gaussians) give a large residual and a
    huge ``beta``, which still certifies the hypothesis ``beta > n + 2``.
    """

    C: float
    beta: float
    residual: float
    fit_rms: float
    n: int

    @property
    def admissible(self) -> bool:
        return self.beta > self.n + 2 and self.C > 0

    @property
    def power_law(self) -> bool:
        return self.residual <= 0.05

    def to_dict(self) -> dict[str, Any]:
        return {"C": self.C, "beta": self.beta, "residual": self.residual,
                "fit_rms": self.fit_rms, "admissible": self.admissible,
                "power_law": self.power_law}


@dataclass(frozen=True)
class VectorPotential:
    grid: GridSpec
    components: tuple[NDArray[np.float64], ...]
    family: Family
    params: dict = field(default_factory=dict)
    certified: DecayCertificate | None = None

    @property
    def is_zero(self) -> bool:
        return all(not np.any(c) for c in self.components)

    def magnitude(self) -> NDArray[np.float64]:
        return np.sqrt(sum(c**2 for c in self.components))

    def stacked(self) -> NDArray[np.float64]:
        return np.stack(self.components)


def boundary_mask(grid: GridSpec) -> NDArray[np.bool_]:
    """Nodes adjacent to the periodic seam (first and last index on any axis)."""
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.n):
        idx = [slice(None)] * grid.n
        for j in (0, grid.N - 1):
            idx[axis] = j
            mask[tuple(idx)] = True
    return mask


def _as_vector(value, n: int, name: str) -> NDArray[np.float64]:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1 and n > 1:
        arr = np.repeat(arr, n)
    if arr.shape != (n,):
        raise PotentialError(f"parameter {name!r} needs {n} components, got {arr.size}")
    return arr


def polynomial_cutoff(grid: GridSpec, centre: float = 0.8, width: float = 0.04):
    """Smooth even cutoff equal to 1 inside ``centre*L`` and vanishing at the seam."""
    return 0.5 * erfc((grid.radius - centre * grid.L) / (width * grid.L))


def make_potential(grid: GridSpec, family: str | Family, params: dict | None = None) -> VectorPotential:
    """Sample a vector potential of the given family on ``grid``.

    gaussian: ``a`` (amplitude per component), ``w`` (width).
    polynomial_decay: ``a``, ``beta0``, optional ``cutoff_centre`` and
    ``cutoff_width`` (fractions of L).
    custom_samples: ``samples`` array of shape ``(n,) + grid.shape``.
    """
    family = Family(family)
    params = dict(params or {})
    n = grid.n
    if family is Family.ZERO:
        comps = tuple(np.zeros(grid.shape) for _ in range(n))
    elif family is Family.GAUSSIAN:
        a = _as_vector(params.get("a", 0.5), n, "a")
        w = float(params.get("w", 2.0))
        if w <= 0:
            raise PotentialError("gaussian width w must be positive")
        env = np.exp(-grid.radius**2 / w**2)
        comps = tuple(aj * env for aj in a)
        params = {"a": a.tolist(), "w": w}
    elif family is Family.POLYNOMIAL_DECAY:
        a = _as_vector(params.get("a", 0.5), n, "a")
        beta0 = float(params.get("beta0", n + 3))
        centre = float(params.get("cutoff_centre", 0.8))
        width = float(params.get("cutoff_width", 0.04))
        env = grid.japanese() ** (-beta0) * polynomial_cutoff(grid, centre, width)
        comps = tuple(aj * env for aj in a)
        params = {"a": a.tolist(), "beta0": beta0, "cutoff_centre": centre,
                  "cutoff_width": width}
    else:
        samples = np.asarray(params.get("samples"))
        if samples.shape != (n,) + grid.shape:
            raise PotentialError(f"custom samples must have shape {(n,) + grid.shape}")
        if np.iscomplexobj(samples):
            if np.abs(samples.imag).max() > 0:
                raise PotentialError("vector potential components must be real")
            samples = samples.real
        comps = tuple(np.array(c, dtype=float) for c in samples)
        params = {k: v for k, v in params.items() if k != "samples"}
    mask = boundary_mask(grid)
    edge = max(float(np.abs(c[mask]).max()) for c in comps)
    if edge > BOUNDARY_TOL:
        raise PotentialError(
            f"|A| = {edge:.2e} at the boundary exceeds {BOUNDARY_TOL:.0e}; enlarge L "
            "or shrink the potential")
    return VectorPotential(grid, comps, family, params)


def spectral_tail(grid: GridSpec, f: NDArray) -> float:
    """Largest Fourier coefficient beyond 3/4 of the Nyquist radius, relative."""
    f_hat = np.abs(grid.fft(f))
    top = f_hat.max()
    if top == 0:
        return 0.0
    return float(f_hat[grid.xi_norm > 0.75 * grid.xi_max].max(initial=0.0) / top)


def decay_profile(A: VectorPotential) -> NDArray[np.float64]:
    """Pointwise ``|A| + |grad A| + |grad grad A|`` with spectral derivatives."""
    grid = A.grid
    first = 0.0
    second = 0.0
    for comp in A.components:
        for k in range(grid.n):
            dk = grid.derivative(comp, k).real
            first = first + dk**2
            for l in range(grid.n):
                second = second + grid.derivative(dk, l).real ** 2
    return A.magnitude() + np.sqrt(first) + np.sqrt(second)


def _radial_maxima(grid: GridSpec, profile: NDArray, r_lo: float, r_hi: float):
    r = grid.radius.ravel()
    p = profile.ravel()
    edges = np.arange(r_lo, r_hi + grid.h, grid.h)
    radii, values = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (r >= lo) & (r < hi)
        if np.any(sel):
            j = np.argmax(p[sel])
            radii.append(r[sel][j])
            values.append(p[sel][j])
    return np.array(radii), np.array(values)


def certify_decay(A: VectorPotential) -> DecayCertificate:
    """Fit the decay exponent of the hypothesis profile over ``[L/4, 3L/4]``."""
    grid = A.grid
    tails = [spectral_tail(grid, c) for c in A.components]
    if max(tails) > RESOLUTION_TOL:
        raise UnderResolved(
            f"spectral tail {max(tails):.1e} exceeds {RESOLUTION_TOL:.0e}; refine the grid")
    profile = decay_profile(A)
    pmax = float(profile.max())
    if pmax < FLOOR:
        raise FitUnstable("decay profile vanishes; the zero potential is trivially admissible")
    r, p = _radial_maxima(grid, profile, grid.L / 4, 3 * grid.L / 4)
    keep = p > FLOOR * max(pmax, 1.0)
    if keep.sum() < 3:
        raise FitUnstable("fewer than three profile samples above the noise floor")
    logx = np.log(np.sqrt(1 + r[keep] ** 2))
    logp = np.log(p[keep])
    slope, intercept = np.polyfit(logx, logp, 1)
    beta = -float(slope)
    fit = slope * logx + intercept
    fit_rms = float(np.sqrt(np.mean((logp - fit) ** 2)))
    residual = float(max(0.0, np.max(np.exp(logp - fit)) - 1.0))
    C = float(np.exp(intercept) * (1.0 + residual))
    return DecayCertificate(C, beta, residual, fit_rms, grid.n)


def with_certificate(A: VectorPotential) -> VectorPotential:
    return VectorPotential(A.grid, A.components, A.family, A.params, certify_decay(A))


def first_order_potential_apply(A: VectorPotential, u: NDArray) -> NDArray[np.complex128]:
    """``V1 u = -i A.grad u - i div(A u) + |A|^2 u`` with spectral derivatives."""
    grid = A.grid
    u = np.reshape(u, grid.shape).astype(complex)
    out = A.magnitude() ** 2 * u
    for k, comp in enumerate(A.components):
        out = out - 1j * comp * grid.derivative(u, k) - 1j * grid.derivative(comp * u, k)
    return out


def antiderivative_1d(grid: GridSpec, f: NDArray) -> NDArray[np.float64]:
    """Spectral ``int_0^x f`` for a zero-mean periodic function on a 1-D grid."""
    f_hat = grid.fft(f)
    xi = grid.xi1d
    g_hat = np.zeros_like(f_hat)
    nz = xi != 0
    g_hat[nz] = f_hat[nz] / (1j * xi[nz])
    g_hat[grid.N // 2] = 0.0
    g = grid.ifft(g_hat).real
    return g - np.interp(0.0, grid.x1d, g)
