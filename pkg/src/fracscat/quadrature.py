"""Gauss-Legendre panel quadrature for integrals over ``(0, inf)``.

With ``tau = exp(t)`` the Balakrishnan-type integrands become smooth and
decay exponentially in both directions of ``t``.  The ``t`` axis is cut into
equal-width panels starting at ``t = 0`` (``tau = 1``) and extended outward
until a panel's contribution is negligible relative to the running total,
unless fixed truncation bounds are given.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import QuadratureNotConverged

DOUBLING_TOL = 1e-6


@dataclass(frozen=True)
class QuadratureScheme:
    """Composite Gauss-Legendre rule in ``t = log(tau)``.

    Attributes:
        nodes: Gauss-Legendre nodes per panel.
        panel_width: width of each panel in ``t``.
        t_min, t_max: fixed truncation bounds; ``None`` selects them
            adaptively from ``tol``.
        tol: relative size below which a tail panel is considered negligible.
        t_limit: hard cap on ``|t|`` for adaptive extension.
    """

    nodes: int = 16
    panel_width: float = 4.0
    t_min: float | None = None
    t_max: float | None = None
    tol: float = 1e-15
    t_limit: float = 400.0

    def __post_init__(self):
        if self.nodes < 1 or self.panel_width <= 0:
            raise ValueError("need at least one node and a positive panel width")
        if self.t_min is not None and self.t_min >= 0:
            raise ValueError("t_min must be negative")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be positive")

    def doubled(self) -> "QuadratureScheme":
        return replace(self, nodes=2 * self.nodes)

    def panel_rule(self, a: float, b: float):
        """Nodes ``tau`` and weights for ``d tau`` on ``[exp(a), exp(b)]``."""
        x, w = np.polynomial.legendre.leggauss(self.nodes)
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        tau = np.exp(t)
        return tau, 0.5 * (b - a) * w * tau


@dataclass
class QuadratureResult:
    value: np.ndarray
    t_min: float
    t_max: float
    evaluations: int
    doubling_change: float | None = None


def _fixed_edges(lo: float, hi: float, width: float) -> list[tuple[float, float]]:
    count = max(1, int(np.ceil((hi - lo) / width - 1e-12)))
    edges = np.linspace(lo, hi, count + 1)
    return list(zip(edges[:-1], edges[1:]))


def _norm(x) -> float:
    return float(np.max(np.abs(x)))


def integrate(f: Callable[[float], np.ndarray], scheme: QuadratureScheme) -> QuadratureResult:
    """Approximate ``int_0^inf f(tau) d tau`` on the composite rule."""
    total = 0.0
    count = 0

    def panel(a, b):
        nonlocal count
        taus, weights = scheme.panel_rule(a, b)
        acc = 0.0
        for tau, w in zip(taus, weights):
            acc = acc + w * f(tau)
        count += len(taus)
        return acc

    bounds = {}
    for direction, fixed in ((-1, scheme.t_min), (1, scheme.t_max)):
        if fixed is not None:
            lo, hi = (fixed, 0.0) if direction < 0 else (0.0, fixed)
            for a, b in _fixed_edges(lo, hi, scheme.panel_width):
                total = total + panel(a, b)
            bounds[direction] = fixed
            continue
        edge = 0.0
        quiet = 0
        while quiet < 2:
            nxt = edge + direction * scheme.panel_width
            a, b = sorted((edge, nxt))
            contrib = panel(a, b)
            total = total + contrib
            edge = nxt
            scale = max(_norm(total), np.finfo(float).tiny)
            quiet = quiet + 1 if _norm(contrib) <= scheme.tol * scale else 0
            if abs(edge) >= scheme.t_limit:
                raise QuadratureNotConverged(
                    f"integrand tail not negligible by |t| = {scheme.t_limit}")
        bounds[direction] = edge
    return QuadratureResult(np.asarray(total), bounds[-1], bounds[1], count)


def integrate_checked(f: Callable[[float], np.ndarray], scheme: QuadratureScheme,
                      check: bool = True, tol: float = DOUBLING_TOL) -> QuadratureResult:
    """Integrate, then redo the same panels with doubled nodes as a gate.

    Raises :class:`QuadratureNotConverged` if the relative change exceeds
    ``tol``.  The returned value is the doubled-node result.
    """
    first = integrate(f, scheme)
    if not check:
        return first
    fine_scheme = replace(scheme.doubled(), t_min=first.t_min, t_max=first.t_max)
    fine = integrate(f, fine_scheme)
    scale = max(_norm(fine.value), np.finfo(float).tiny)
    change = _norm(fine.value - first.value) / scale
    if change > tol:
        raise QuadratureNotConverged(
            f"doubling nodes changed the result by {change:.2e} (> {tol:.0e})")
    fine.doubling_change = change
    fine.evaluations += first.evaluations
    return fine
