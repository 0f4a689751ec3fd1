import numpy as np
import pytest

from fracscat import make_grid, make_potential
from fracscat.errors import TailNotDecaying
from fracscat.grid import fourier_matrix
from fracscat.operators import build_laplacian, build_magnetic_laplacian, frac_power_eig
from fracscat.scattering import (Propagator, completeness_angles, intertwining_defect,
                                 point_overlap, scattering_matrix, unitarity_defects,
                                 verify_fw_relation, wave_operator_cook, wave_operator_direct,
                                 wave_packet_basis)
from fracscat.distorted_ft import DistortedFT
from fracscat.operators import HermitianOperator

from conftest import random_vector

MOMENTA = [1.25, 1.75, 2.25, 2.75]


class Setup:
    def __init__(self, a, T=20.0, s=1.0):
        self.grid = g = make_grid(1, 128, 32.0)
        self.A = make_potential(g, "gaussian", {"a": a, "w": 2.0})
        self.H0 = frac_power_eig(build_laplacian(g), 0.5 * s)
        self.HA = frac_power_eig(build_magnetic_laplacian(g, self.A), 0.5 * s)
        self.V = self.HA - self.H0
        self.B, self.info = wave_packet_basis(g, MOMENTA, [-3.0, 3.0], 3.0, "centred")
        self.props = (Propagator(self.HA), Propagator(self.H0))
        self.cook = {d: wave_operator_cook(self.HA, self.H0, self.V, self.B, d, T,
                                           checkpoints=[T / 4], propagators=self.props)
                     for d in "+-"}
        self.direct = {d: wave_operator_direct(self.HA, self.H0, self.B, d, T, [T / 4],
                                               propagators=self.props) for d in "+-"}
        self.S = scattering_matrix(self.cook["+"].value, self.cook["-"].value)


@pytest.fixture(scope="module")
def weak():
    return Setup(0.1)


def test_propagator_examples(g64, rng):
    H0 = frac_power_eig(build_laplacian(g64), 0.5)
    P = Propagator(H0)
    u = random_vector(rng, 64)
    np.testing.assert_allclose(P.propagate(0.0, u), u, atol=1e-13)
    m = g64.mode(3)
    np.testing.assert_allclose(P.propagate(2.0, m), np.exp(-2j * 3 * np.pi / 16) * m, atol=1e-12)
    assert abs(np.linalg.norm(P.propagate(5.0, u)) / np.linalg.norm(u) - 1) <= 1e-11
    np.testing.assert_allclose(P.propagate(1.3, P.propagate(0.4, u)), P.propagate(1.7, u),
                               atol=1e-10 * np.linalg.norm(u))


def test_free_wave_operators_are_identity(g64, rng):
    H0 = frac_power_eig(build_laplacian(g64), 0.5)
    zero = HermitianOperator(np.zeros((64, 64)), "zero")
    u = random_vector(rng, 64)
    for d in "+-":
        np.testing.assert_allclose(wave_operator_cook(H0, H0, zero, u, d, 8.0).value, u, atol=1e-13)
        np.testing.assert_allclose(wave_operator_direct(H0, H0, u, d, 8.0).value, u, atol=1e-12)


def test_routes_agree(weak):
    for d in "+-":
        gap = np.linalg.norm(weak.cook[d].value - weak.direct[d].value, axis=0)
        budget = weak.cook[d].truncation + weak.direct[d].truncation
        assert np.all(gap <= 2 * budget + 1e-12)
        assert gap.max() < 1e-10


def test_isometry_and_intertwining(weak):
    for d in "+-":
        assert weak.cook[d].isometry_defect(weak.B).max() <= 1e-3
    pA, p0 = weak.props
    for dsign in (1, -1):
        def W(v):
            return pA.propagate(-dsign * 20.0, p0.propagate(dsign * 20.0, v))
        for j in range(weak.B.shape[1]):
            assert intertwining_defect(pA, p0, W, weak.B[:, j], 1.0) <= 5e-3


def test_cook_integrand_tail_logged(weak):
    for d in "+-":
        r = weak.cook[d]
        assert r.integrand_t.shape[0] == r.integrand_norm.shape[0]
        q = r.integrand_norm[int(0.75 * len(r.integrand_norm)):]
        assert np.all(np.diff(q, axis=0) <= 1e-9 * r.integrand_norm.max(axis=0))


def test_tail_not_decaying_detected():
    # a wide packet on a short box wraps around and re-enters the potential
    g = make_grid(1, 64, 8.0)
    A = make_potential(g, "gaussian", {"a": 0.5, "w": 1.5})
    H0 = frac_power_eig(build_laplacian(g), 0.5)
    HA = frac_power_eig(build_magnetic_laplacian(g, A), 0.5)
    B, _ = wave_packet_basis(g, [2.0], [0.0], 1.0, "centred")
    with pytest.raises(TailNotDecaying):
        wave_operator_cook(HA, H0, HA - H0, B, "+", 18.0)


def test_unitarity(weak):
    u1, u2 = unitarity_defects(weak.S)
    assert max(u1, u2) <= 1e-2


def test_energy_conservation(weak):
    k = np.array([abs(i["k"]) for i in weak.info])
    off = np.abs(weak.S[np.not_equal.outer(k, k)])
    assert off.max() <= 1e-2


def test_s_matrix_against_gauge_phase(weak):
    # at s = 1 in one dimension the magnetic phase is the flux a w sqrt(pi),
    # picked up with opposite signs by right- and left-moving components
    g = weak.grid
    F = fourier_matrix(g)
    phi = 0.1 * 2.0 * np.sqrt(np.pi)
    xi = g.xi1d
    phase = np.where(xi > 0, np.exp(-1j * phi), np.where(xi < 0, np.exp(1j * phi), 1.0))
    oracle = weak.B.conj().T @ F.conj().T @ (phase[:, None] * (F @ weak.B))
    assert np.linalg.norm(weak.S - oracle, 2) <= 1e-5


def test_completeness(weak):
    angles = completeness_angles(weak.cook["+"].value, weak.cook["-"].value)
    assert angles.max() <= 0.1
    assert point_overlap(weak.cook["+"].value, None) == 0.0


def test_free_control():
    free = Setup(0.0, T=8.0)
    u1, u2 = unitarity_defects(free.S)
    assert max(u1, u2) <= 1e-10


def test_fw_relation_free(g64):
    H0 = frac_power_eig(build_laplacian(g64), 0.5)
    zero = HermitianOperator(np.zeros((64, 64)), "zero")
    B, _ = wave_packet_basis(g64, [1.5, 2.5], [0.0], 1.5, "centred")
    W = wave_operator_cook(H0, H0, zero, B, "-", 4.0).value
    fw = verify_fw_relation(W, DistortedFT(g64, zero, 1.0, 1.0, -1), B)
    assert fw.max_defect <= 1e-10


def test_basis_is_orthonormal_and_band_limited(weak):
    B = weak.B
    np.testing.assert_allclose(B.conj().T @ B, np.eye(B.shape[1]), atol=1e-13)
    Bhat = fourier_matrix(weak.grid) @ B
    assert np.abs(Bhat[0]).max() < 1e-12  # no mass on the zero shell
