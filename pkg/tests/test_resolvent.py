import numpy as np
import pytest

from fracscat import make_grid, make_potential
from fracscat.errors import NearSpectrum, NotConverging, SingularShift
from fracscat.grid import WeightedSpace, fourier_matrix, weighted_norm
from fracscat.operators import build_laplacian, build_magnetic_laplacian, frac_power_eig
from fracscat.resolvent import (BoundaryResolvent, free_resolvent, free_resolvent_matrix,
                                limiting_absorption, limiting_absorption_norms,
                                magnetic_fractional_resolvent, neville_at_zero,
                                weighted_free_resolvent_scaling)

from conftest import random_vector


@pytest.fixture(scope="module")
def g128():
    return make_grid(1, 128, 32.0)


def test_free_resolvent_negative_shift(g64, rng):
    u = random_vector(rng, 64)
    Hs = frac_power_eig(build_laplacian(g64), 0.5)
    w = free_resolvent(g64, 1.0, -1.0, u)
    np.testing.assert_allclose((Hs.matrix + np.eye(64)) @ w, u, atol=1e-11)


def test_free_resolvent_on_mode(g8):
    u = g8.mode(2)
    np.testing.assert_allclose(free_resolvent(g8, 1.0, 0.5j, u), u / (2 - 0.5j), atol=1e-13)


def test_free_resolvent_dense_oracle(g64, rng):
    u = random_vector(rng, 64)
    w = free_resolvent(g64, 2.0, 1j, u)
    dense = np.linalg.solve(build_laplacian(g64).matrix - 1j * np.eye(64), u)
    np.testing.assert_allclose(w, dense, atol=1e-11)


def test_singular_shift(g8):
    with pytest.raises(SingularShift):
        free_resolvent(g8, 1.0, 2.0, np.ones(8))


def test_resolvent_identities(g64):
    z1, z2 = 1.3 + 0.4j, 0.7 - 0.2j
    R1, R2 = free_resolvent_matrix(g64, 1.0, z1), free_resolvent_matrix(g64, 1.0, z2)
    np.testing.assert_allclose(R1 - R2, (z1 - z2) * R1 @ R2, atol=1e-10)
    np.testing.assert_allclose(free_resolvent_matrix(g64, 1.0, np.conj(z1)), R1.conj().T,
                               atol=1e-12)


def test_magnetic_resolvent(g64, gauss64, rng):
    u = random_vector(rng, 64)
    H0s = frac_power_eig(build_laplacian(g64), 0.5)
    np.testing.assert_allclose(magnetic_fractional_resolvent(H0s, 0.3j, u),
                               free_resolvent(g64, 1.0, 0.3j, u), atol=1e-11)
    HsA = frac_power_eig(build_magnetic_laplacian(g64, gauss64), 0.5)
    w = magnetic_fractional_resolvent(HsA, -1.0, u)
    assert np.linalg.norm(HsA.apply(w) + w - u) <= 1e-10 * np.linalg.norm(u)
    z = 1.0 + 0.5j
    Vx = HsA.matrix - H0s.matrix
    lhs = magnetic_fractional_resolvent(HsA, z, u + Vx @ free_resolvent(g64, 1.0, z, u))
    np.testing.assert_allclose(lhs, free_resolvent(g64, 1.0, z, u), atol=1e-9)
    with pytest.raises(NearSpectrum):
        magnetic_fractional_resolvent(HsA, HsA.eig()[0][5], u)


def test_neville_exact_on_polynomials():
    eps = np.array([0.4, 0.2, 0.1])
    assert neville_at_zero(eps, list(3 + 2 * eps - eps**2)) == pytest.approx(3.0)


def test_off_shell_input_is_exact(g128):
    # a single mode far from the lambda shell: every ladder value agrees with the limit
    u = g128.mode(40)
    exact = u / (np.pi * 40 / g128.L - 1.0)
    out, rep = limiting_absorption(g128, 1.0, 1.0, 1, 1.0, u, check=False)
    # first-order extrapolation leaves eps_a eps_b / d^3 with d the distance to lambda
    eps = rep.epsilon[-2:]
    d = np.pi * 40 / g128.L - 1.0
    assert np.max(np.abs(out - exact)) <= 1.01 * eps[0] * eps[1] / d**3
    recipe = BoundaryResolvent(1.0, 1, 1.0, order=4, depth=12, ratio=0.7)
    sharp, _ = limiting_absorption(g128, 1.0, 1.0, 1, 1.0, u, recipe=recipe, check=False)
    np.testing.assert_allclose(sharp, exact, atol=1e-4)


def test_limiting_absorption_report(g128):
    recipe = BoundaryResolvent(1.0, 1, 1.0)
    rep = limiting_absorption_norms(g128, recipe)
    assert min(rep.epsilon) >= rep.floor * (1 - 1e-12)
    assert max(rep.weighted_norm) <= 2 * rep.extrapolant_norm[-1]
    slope = np.polyfit(np.log(rep.epsilon), np.log(rep.unweighted_norm), 1)[0]
    assert abs(slope + 1) <= 0.1
    assert len(rep.rows()) == len(rep.epsilon)


def test_bump_bound_refinement():
    vals = []
    for N in (128, 256):
        g = make_grid(1, N, 32.0)
        u = np.exp(-g.x1d**2).astype(complex)
        u /= g.l2_norm(u)
        _, rep = limiting_absorption(g, 1.0, 1.0, 1, 1.0, u)
        vals.append(rep.bound_estimate)
    assert abs(vals[1] / vals[0] - 1) < 0.15


def test_branch_sign(g128):
    k = int(round(g128.L / np.pi))  # mode on the lambda = 1 shell
    u = g128.mode(k) * np.exp(-(g128.x1d / 6) ** 2)
    for sign in (1, -1):
        out, _ = limiting_absorption(g128, 1.0, 1.0, sign, 1.0, u, check=False)
        assert sign * np.imag(np.vdot(u, out)) >= 0


def test_ladder_floor_and_errors(g64):
    with pytest.raises(NotConverging):
        BoundaryResolvent(1.0, 1, 1.0, eps0=0.1).ladder(g64)
    with pytest.raises(ValueError):
        BoundaryResolvent(-1.0)
    kept, dropped, floor = BoundaryResolvent(1.0, 1, 1.0, eps0=10.0, depth=12).ladder(g64)
    assert np.all(kept >= floor * (1 - 1e-12)) and np.all(dropped < floor)


def test_scaling_fits(g64):
    taus = np.geomspace(1, 1000, 13)
    free = weighted_free_resolvent_scaling(g64, taus, 0, 0)
    np.testing.assert_allclose(free.norms, 1 / taus, rtol=1e-12)
    assert free.exponent == pytest.approx(-1.0, abs=1e-12)
    assert -1.0 <= weighted_free_resolvent_scaling(g64, taus, 2, 0).exponent <= 0.15
    assert abs(weighted_free_resolvent_scaling(g64, taus, 2, 2).exponent + 1) <= 0.15
    with pytest.raises(ValueError):
        weighted_free_resolvent_scaling(g64, taus, 1, 2)
