import numpy as np
import pytest

from fracscat import make_grid
from fracscat.errors import FitUnstable, PotentialError, UnderResolved
from fracscat.operators import first_order_matrix
from fracscat.potentials import (antiderivative_1d, certify_decay, first_order_potential_apply,
                                 make_potential)

from conftest import random_vector


def test_zero_family(g64):
    A = make_potential(g64, "zero")
    assert A.is_zero
    with pytest.raises(FitUnstable):
        certify_decay(A)


def test_gaussian_values(g64, gauss64):
    a = gauss64.components[0]
    assert a[g64.N // 2] == pytest.approx(0.5)
    assert max(abs(a[0]), abs(a[-1])) < 1e-10


def test_gaussian_two_dimensional():
    g = make_grid(2, 32, 12.0)
    A = make_potential(g, "gaussian", {"a": [0.3, -0.2], "w": 1.5})
    assert np.abs(A.components[0]).max() == pytest.approx(0.3)
    assert np.abs(A.components[1]).max() == pytest.approx(0.2)
    assert A.magnitude().max() == pytest.approx(np.sqrt(0.13))


def test_boundary_smallness_rejected():
    g = make_grid(1, 32, 8.0)
    with pytest.raises(PotentialError):
        make_potential(g, "gaussian", {"a": 0.5, "w": 2.0})


def test_custom_samples_must_be_real(g64):
    with pytest.raises(PotentialError):
        make_potential(g64, "custom_samples", {"samples": 1j * np.ones((1, 64))})


def test_gaussian_certificate(g64, gauss64):
    cert = certify_decay(gauss64)
    assert cert.admissible
    assert cert.beta > g64.n + 2
    assert cert.C > 0


def test_polynomial_certificate_recovers_exponent():
    g = make_grid(1, 1024, 32.0)
    A = make_potential(g, "polynomial_decay", {"a": 0.5, "beta0": 4.0})
    cert = certify_decay(A)
    assert 3.5 <= cert.beta <= 4.5
    assert cert.admissible


def test_under_resolved():
    g = make_grid(1, 32, 8.0)
    A = make_potential(g, "gaussian", {"a": 0.3, "w": 1.2})
    with pytest.raises(UnderResolved):
        certify_decay(A)


def test_first_order_zero(g64, rng):
    A = make_potential(g64, "zero")
    assert not np.any(first_order_potential_apply(A, random_vector(rng, 64)))


def test_first_order_on_constant(g64, gauss64):
    a = gauss64.components[0]
    x = g64.x1d
    da = -2 * x / 4.0 * a  # derivative of a exp(-x^2/4)
    out = first_order_potential_apply(gauss64, np.ones(64))
    np.testing.assert_allclose(out, -1j * da + a**2, atol=1e-10)


def test_first_order_hermitian(g64, gauss64, rng):
    u, v = random_vector(rng, 64), random_vector(rng, 64)
    lhs = np.vdot(first_order_potential_apply(gauss64, u), v)
    rhs = np.vdot(u, first_order_potential_apply(gauss64, v))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
    np.testing.assert_allclose(first_order_matrix(gauss64) @ u,
                               first_order_potential_apply(gauss64, u), atol=1e-11)


def test_antiderivative(g64):
    x = g64.x1d
    f = -x / 2 * np.exp(-x**2 / 4)
    F = antiderivative_1d(g64, f)
    np.testing.assert_allclose(F, np.exp(-x**2 / 4) - 1.0, atol=1e-10)
