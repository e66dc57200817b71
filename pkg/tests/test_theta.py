import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ellipq.report import fundamental
from ellipq.theta import (
    TWO_PI_I,
    LatticeParams,
    PoleProximityError,
    ThetaTag,
    cosets,
    gram_rank,
    linear_combination,
    multi_theta_basis,
    quasi_periodicity_residual,
    theta_basis,
    theta_deriv,
    theta_eval,
    theta_logd,
)

# mpmath values of -i e^{-pi i eta/4} e^{pi i z} theta_1(pi z, e^{pi i eta}) at eta = 0.3+0.8i
FROZEN = [
    (0.25, 0.9957872465865484 - 1.008267476880257j),
    (0.1 + 0.2j, 0.7620893589837414 - 0.18921837735660044j),
    (0.7 + 0.5j, 1.1360365254660119 + 0.13033407130630795j),
]
THETA_PRIME0 = -0.11763174548307458 - 6.3214116629253665j


def jacobi_oracle(z, eta):
    q = mpmath.exp(1j * mpmath.pi * eta)
    v = -1j * mpmath.exp(-1j * mpmath.pi * eta / 4) * mpmath.exp(1j * mpmath.pi * z) * mpmath.jtheta(1, mpmath.pi * z, q)
    return complex(v)


@pytest.mark.parametrize("z, want", FROZEN)
def test_frozen_values(lat, z, want):
    assert abs(theta_eval(z, lat) - want) < 1e-13


def test_derivative_at_zero(lat):
    assert abs(theta_deriv(0.0, lat) - THETA_PRIME0) < 1e-12
    assert abs(lat.theta_prime0 - THETA_PRIME0) < 1e-12


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([1j, 0.3 + 0.8j, -0.4 + 1.3j]))
def test_matches_jacobi_theta(a, b, eta):
    lat = LatticeParams(eta)
    z = a + b * eta
    want = jacobi_oracle(z, eta)
    assert abs(theta_eval(z, lat) - want) <= 1e-12 * (1 + abs(want))


@pytest.mark.parametrize("eta", [1j, 0.3 + 0.8j])
def test_identities(eta):
    lat = LatticeParams(eta)
    z = fundamental(np.random.default_rng(0), (100,), lat)
    th = theta_eval(z, lat)
    mult = -np.exp(-TWO_PI_I * z)
    assert abs(theta_eval(0.0, lat)) < 1e-12
    assert np.allclose(theta_eval(z + 1, lat), th, rtol=1e-10, atol=1e-10)
    assert np.allclose(theta_eval(z + eta, lat), mult * th, rtol=1e-10, atol=1e-10)
    assert np.allclose(theta_eval(-z, lat), mult * th, rtol=1e-10, atol=1e-10)
    assert np.allclose(theta_logd(-z, lat) + theta_logd(z, lat), TWO_PI_I, atol=1e-9)


def test_truncation_radius_is_converged(lat):
    wide = LatticeParams(lat.eta, lat.radius + 10)
    z = np.array([0.3 + 0.1j, 0.9 + 0.7j])
    assert np.max(np.abs(theta_eval(z, lat) - theta_eval(z, wide))) < 1e-12


def test_logd_refuses_lattice_points(lat):
    with pytest.raises(PoleProximityError):
        theta_logd(1 + lat.eta, lat)


def test_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        LatticeParams(0.3 - 0.8j)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_scalar_basis_quasi_periodic(lat, m):
    basis = theta_basis(m, 0.2, lat)
    assert len(basis) == m
    z = fundamental(np.random.default_rng(1), (10,), lat)
    for f in basis:
        assert quasi_periodicity_residual(f, z) < 1e-10


@pytest.mark.parametrize("n_vec", [(2,), (3,), (2, 2), (3, 2), (2, 2, 2)])
def test_multi_basis_quasi_periodic(lat, n_vec):
    z = fundamental(np.random.default_rng(2), (10, len(n_vec)), lat)
    for f in multi_theta_basis(n_vec, lat):
        assert f.tag == ThetaTag.multi(n_vec)
        assert quasi_periodicity_residual(f, z) < 1e-9


@pytest.mark.parametrize("n_vec, want", [((2,), 2), ((3,), 3), ((2, 2), 3), ((3, 2), 5), ((2, 2, 2), 4), ((3, 4, 2), 19)])
@pytest.mark.parametrize("eta", [1j, 0.3 + 0.8j])
def test_gram_rank_equals_dimension(n_vec, want, eta):
    lat = LatticeParams(eta)
    basis = multi_theta_basis(n_vec, lat)
    assert len(cosets(n_vec).labels) == want
    z = fundamental(np.random.default_rng(3), (max(3 * want, 20), len(n_vec)), lat)
    rank, _ = gram_rank(basis, z)
    assert rank == want


def test_gram_rank_sees_planted_dependency(lat):
    basis = multi_theta_basis((3, 2), lat)
    planted = linear_combination(basis[:3], [1.0, -2.0, 0.5j], "planted")
    z = fundamental(np.random.default_rng(4), (20, 2), lat)
    rank, sv = gram_rank(basis + [planted], z)
    assert rank == len(basis)
    assert sv[-1] < 1e-8 * sv[0]


def test_wrong_law_is_detected(lat):
    f = multi_theta_basis((3,), lat)[0]
    wrong = linear_combination([f], [1.0])
    object.__setattr__(wrong, "tag", ThetaTag.multi((2,)))
    z = fundamental(np.random.default_rng(5), (10, 1), lat)
    assert quasi_periodicity_residual(wrong, z) > 1e-3
