"""Propagators, wave operators, the scattering matrix and completeness checks.

Time evolution uses the dense eigendecomposition, so ``e^{-itH}`` is exact
up to diagonalisation error.  Two routes compute ``W^{(T)}``: Cook's
integral of ``i e^{itH} V_x e^{-itH_0}`` and the direct product
``e^{iTH} e^{-iTH_0}``.  Sign conventions:

* ``W_+^{(T)} = e^{iTH} e^{-iTH_0}``
* ``W_-^{(T)} = e^{-iTH} e^{iTH_0}``
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import subspace_angles

from .errors import TailNotDecaying
from .grid import GridSpec
from .operators import HermitianOperator


class Propagator:
    """``t -> e^{-itH}`` from a cached eigendecomposition."""

    def __init__(self, H: HermitianOperator):
        self.H = H
        self.w, self.U = H.eig()

    def __call__(self, t: float, u: NDArray) -> NDArray:
        return self.propagate(t, u)

    def propagate(self, t: float, u: NDArray) -> NDArray:
        shape = np.shape(u)
        c = self.U.conj().T @ np.reshape(u, (self.U.shape[0], -1))
        out = self.U @ (np.exp(-1j * t * self.w)[:, None] * c)
        return out.reshape(shape)


def propagate(prop: Propagator, t: float, u: NDArray) -> NDArray:
    return prop.propagate(t, u)


def _direction(direction) -> int:
    d = {"+": 1, "-": -1, 1: 1, -1: -1}.get(direction)
    if d is None:
        raise ValueError("direction must be '+' or '-'")
    return d


@dataclass
class WaveOperatorResult:
    """``W^{(T)} u`` with convergence diagnostics.

    ``checkpoints`` maps each truncation time to the value there;
    ``truncation`` is the self-reported error ``|W^{(T)} - W^{(T/2)}|`` per
    column; ``integrand`` holds ``(|t|, |V_x e^{-itH_0} u|)`` samples (Cook
    route only).
    """

    value: NDArray
    direction: int
    T: float
    route: str
    checkpoints: dict[float, NDArray] = field(default_factory=dict)
    truncation: NDArray | None = None
    integrand_t: NDArray | None = None
    integrand_norm: NDArray | None = None

    def isometry_defect(self, u: NDArray) -> NDArray:
        U = np.reshape(u, (self.value.shape[0], -1))
        V = np.reshape(self.value, U.shape)
        return np.abs(np.linalg.norm(V, axis=0) - np.linalg.norm(U, axis=0))


def _tail_decays(norms: NDArray, ref: NDArray, rel: float = 1e-9, floor: float = 1e-12) -> bool:
    """True if every column is non-increasing over the final quarter.

    Increments below ``rel`` times the column maximum or ``floor`` times the
    input norm ``ref`` count as round-off.
    """
    q = norms[int(np.floor(0.75 * (len(norms) - 1))):]
    if q.shape[0] < 2:
        return True
    tol = rel * np.max(norms, axis=0) + floor * ref
    return bool(np.all(np.diff(q, axis=0) <= tol))


def wave_operator_cook(HsA: HermitianOperator, Hs0: HermitianOperator, Vx: HermitianOperator,
                       u: NDArray, direction, T: float, quadrature_dt: float = 0.25,
                       nodes: int = 8, checkpoints=(), check_tail: bool = True,
                       propagators: tuple[Propagator, Propagator] | None = None
                       ) -> WaveOperatorResult:
    """``W_{+-}^{(T)} u`` by Gauss-Legendre panels on Cook's integral.

    ``W_+^{(T)} u = u + i int_0^T e^{itH} V_x e^{-itH_0} u dt`` and
    ``W_-^{(T)} u = u - i int_{-T}^0 (same) dt``.
    """
    d = _direction(direction)
    if T <= 0 or quadrature_dt <= 0:
        raise ValueError("T and quadrature_dt must be positive")
    pA, p0 = propagators or (Propagator(HsA), Propagator(Hs0))
    M = HsA.dim
    U = np.reshape(u, (M, -1)).astype(complex)
    a = p0.U.conj().T @ U
    C = pA.U.conj().T @ Vx.matrix @ p0.U
    panels = max(1, int(round(T / quadrature_dt)))
    edges = np.linspace(0.0, T, panels + 1)
    want = sorted(set(float(c) for c in checkpoints) | {T / 2, T})
    x, wts = np.polynomial.legendre.leggauss(nodes)
    acc = np.zeros_like(a)
    ts, norms = [], []
    stored: dict[float, NDArray] = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        for tau, wt in zip(0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * wts):
            t = d * tau
            g = C @ (np.exp(-1j * t * p0.w)[:, None] * a)
            ts.append(tau)
            norms.append(np.linalg.norm(g, axis=0))
            acc += wt * np.exp(1j * t * pA.w)[:, None] * g
        for c in want:
            if abs(hi - c) <= 1e-9 * T and c not in stored:
                stored[c] = U + 1j * d * (pA.U @ acc)
    for c in want:
        if c not in stored:
            warnings.warn(f"checkpoint {c} is not a panel boundary; skipped", stacklevel=2)
    norms_arr = np.array(norms)
    if check_tail and not _tail_decays(norms_arr, np.linalg.norm(U, axis=0)):
        raise TailNotDecaying(
            "Cook integrand grows over the final quarter of [0, T]; "
            "increase L or reduce T (box wrap-around)")
    shape = np.shape(u)
    value = stored[T]
    trunc = np.linalg.norm(stored[T] - stored[T / 2], axis=0) if T / 2 in stored else None
    return WaveOperatorResult(value.reshape(shape), d, T, "cook",
                              {k: v.reshape(shape) for k, v in stored.items()},
                              trunc, np.array(ts), norms_arr)


def wave_operator_direct(HsA: HermitianOperator, Hs0: HermitianOperator, u: NDArray,
                         direction, T: float, ladder=None,
                         propagators: tuple[Propagator, Propagator] | None = None
                         ) -> WaveOperatorResult:
    """``W^{(T)} u = e^{i d T H} e^{-i d T H_0} u`` on a ladder of times."""
    d = _direction(direction)
    pA, p0 = propagators or (Propagator(HsA), Propagator(Hs0))
    times = sorted(set(float(t) for t in (ladder or ())) | {T / 2, T})
    stored = {t: pA.propagate(-d * t, p0.propagate(d * t, u)) for t in times}
    M = HsA.dim
    trunc = np.linalg.norm(np.reshape(stored[T] - stored[T / 2], (M, -1)), axis=0)
    return WaveOperatorResult(stored[T], d, T, "direct", stored, trunc)


def intertwining_defect(prop_A: Propagator, prop_0: Propagator, W, u: NDArray,
                        t: float) -> float:
    """``|e^{itH} W u - W e^{itH_0} u| / |u|`` for a callable ``W``."""
    lhs = prop_A.propagate(-t, W(u))
    rhs = W(prop_0.propagate(-t, u))
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(u))


def wave_packet(grid: GridSpec, k0, x0, width: float) -> NDArray[np.complex128]:
    """Normalised Gaussian packet ``exp(-|x-x0|^2 / (2 w^2) + i k0.x)``."""
    k0 = np.atleast_1d(np.asarray(k0, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    r2 = sum((c - xc) ** 2 for c, xc in zip(grid.coords, x0))
    phase = sum(k * c for k, c in zip(k0, grid.coords))
    b = np.exp(-r2 / (2 * width**2) + 1j * phase).ravel()
    return b / np.linalg.norm(b)


def lowdin(B: NDArray) -> NDArray:
    """Symmetric orthonormalisation of the columns of ``B``."""
    for _ in range(2):  # the second pass removes round-off of ill-conditioned overlaps
        S = B.conj().T @ B
        w, V = np.linalg.eigh(S)
        if w.min() <= 1e-10 * w.max():
            raise ValueError("basis vectors are numerically dependent")
        B = B @ (V * w ** -0.5) @ V.conj().T
    return B


def band_filter(grid: GridSpec, lo: float, hi: float) -> NDArray[np.float64]:
    """Smooth Fourier annulus: zero at ``xi = 0``, about 1 on ``[lo, hi]``."""
    r = grid.xi_norm
    return (1.0 - np.exp(-((r / (0.5 * lo)) ** 4))) * np.exp(-((r / (1.5 * hi)) ** 8))


def wave_packet_basis(grid: GridSpec, momenta, centres, width: float,
                      arrangement: str = "outgoing") -> tuple[NDArray, list[dict]]:
    """Orthonormal packets along the first axis for every ``(+-k, c)`` pair.

    ``arrangement`` places a packet with velocity sign ``v`` at
    ``v * c`` (outgoing), ``-v * c`` (incoming) or ``c`` (centred).  Each
    packet is passed through :func:`band_filter` so it carries no mass on
    the zero shell (a static mode that never leaves the potential).
    Returns the matrix of columns and a list describing each packet.
    """
    filt = band_filter(grid, min(momenta), max(momenta))
    cols, info = [], []
    for k in momenta:
        for sign in (1, -1):
            for c in centres:
                x = {"outgoing": sign * c, "incoming": -sign * c, "centred": c}[arrangement]
                k0 = [sign * k] + [0.0] * (grid.n - 1)
                x0 = [x] + [0.0] * (grid.n - 1)
                b = grid.apply_multiplier(filt, wave_packet(grid, k0, x0, width)).ravel()
                cols.append(b / np.linalg.norm(b))
                info.append({"k": sign * float(k), "x0": float(x)})
    return lowdin(np.array(cols).T), info


def group_speed(s: float, k: float) -> float:
    return s * abs(k) ** (s - 1)


def wrap_free_time(grid: GridSpec, s: float, band, support_radius: float) -> float:
    """Longest time a packet leaving the origin travels before its support
    wraps back towards the origin: ``(L - support_radius) / v_max``."""
    vmax = max(group_speed(s, k) for k in band)
    return (grid.L - support_radius) / vmax


def scattering_matrix(Wplus: NDArray, Wminus: NDArray) -> NDArray:
    """``S_jk = <W_+ b_j, W_- b_k>`` from wave-operator columns."""
    return Wplus.conj().T @ Wminus


def unitarity_defects(S: NDArray) -> tuple[float, float]:
    eye = np.eye(S.shape[0])
    return (float(np.linalg.norm(S.conj().T @ S - eye, 2)),
            float(np.linalg.norm(S @ S.conj().T - eye, 2)))


def completeness_angles(Wplus: NDArray, Wminus: NDArray) -> NDArray:
    """Principal angles (radians) between ``span W_+ b`` and ``span W_- b``."""
    return subspace_angles(Wplus, Wminus)


def point_overlap(W: NDArray, point_vectors: NDArray | None) -> float:
    if point_vectors is None or point_vectors.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(point_vectors.conj().T @ W, 2))


@dataclass
class FWDefects:
    per_vector: list[float]
    max_defect: float
    T: float

    def to_dict(self) -> dict:
        return dict(per_vector=self.per_vector, max_defect=self.max_defect, T=self.T)


def verify_fw_relation(W_columns: NDArray, dft, basis: NDArray, T: float = float("nan"),
                       interior_only: bool = True) -> FWDefects:
    """``|F^A W b - F b| / |b|`` per basis vector on the interior shells.

    ``dft`` is a :class:`fracscat.distorted_ft.DistortedFT` whose sign
    matches the wave operator that produced ``W_columns``.
    """
    lhs = dft.transform(W_columns)
    rhs = dft.F @ basis
    mask = lhs.interior_mask() if interior_only else np.ones(rhs.shape[0], bool)
    diff = np.reshape(lhs.values, rhs.shape) - rhs
    per = (np.linalg.norm(diff[mask], axis=0) / np.linalg.norm(basis, axis=0)).tolist()
    return FWDefects(per, float(max(per)), T)
