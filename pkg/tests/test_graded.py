import numpy as np
import pytest

from ellipq import graded
from ellipq.report import SampleSpec, residual, scaled_zero


def combo(basis, w):
    return sum((b.scaled(c) for b, c in zip(basis[1:], w[1:])), basis[0].scaled(w[0]))


def triple(n_vec, lat, seed=0):
    rng = np.random.default_rng(seed)
    return [graded.random_degree_one(n_vec, lat, rng) for _ in range(3)]


def points(n_vec, alpha, lat, seed=3, count=12):
    return graded.sample_blocks(n_vec, alpha, lat, SampleSpec(seed=seed, count=count))


@pytest.mark.parametrize("n_vec", [(2,), (3, 2)])
def test_degree_one_elements_are_members(lat, n_vec):
    for f in graded.degree_one_basis(n_vec, lat):
        assert graded.membership_check(f, spec=SampleSpec(count=5)).passed


def test_sym_product_is_commutative_and_symmetric(lat):
    f, g, _ = triple((3,), lat)
    x = points((3,), 2, lat)
    fg = graded.sym_product(f, g)
    assert np.max(residual(fg(x), graded.sym_product(g, f)(x))) < 1e-13
    assert np.max(residual(fg(x), fg(x[:, ::-1]))) < 1e-13


@pytest.mark.parametrize("n_vec", [(2,), (3,), (3, 2)])
def test_two_variable_bracket_agrees_with_general(lat, n_vec):
    f, g, _ = triple(n_vec, lat)
    x = points(n_vec, 2, lat)
    assert np.max(residual(graded.bracket2(f, g)(x), graded.bracketN(f, g)(x))) < 1e-10


@pytest.mark.parametrize("n_vec", [(3,), (3, 2)])
def test_poisson_axioms(lat, n_vec):
    f, g, h = triple(n_vec, lat, seed=1)
    x2, x3 = points(n_vec, 2, lat), points(n_vec, 3, lat, seed=4)
    fg = graded.bracketN(f, g)
    assert np.max(scaled_zero(fg(x2) + graded.bracketN(g, f)(x2), fg(x2))) < 1e-10
    scale = graded.magnitude([f, g, h], x3)
    lhs = graded.bracketN(f, graded.sym_product(g, h))(x3)
    rhs = graded.sym_product(fg, h)(x3) + graded.sym_product(g, graded.bracketN(f, h))(x3)
    assert np.max(scaled_zero(lhs - rhs, lhs, rhs, scale)) < 1e-8
    terms = [graded.bracketN(a, graded.bracketN(b, c))(x3) for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
    assert np.max(scaled_zero(sum(terms), *terms, scale)) < 1e-7
    assert graded.membership_check(fg, spec=SampleSpec(count=8)).passed


def test_bracket_of_element_with_itself_vanishes(lat):
    f, _, _ = triple((3, 2), lat)
    x = points((3, 2), 2, lat)
    assert np.max(scaled_zero(graded.bracketN(f, f)(x), graded.magnitude([f, f], x))) < 1e-12


def test_jacobi_residual_sees_a_sign_error(lat):
    """Negative control: flipping one cyclic term must give an O(1) residual."""
    f, g, h = triple((3,), lat, seed=2)
    x3 = points((3,), 3, lat, seed=5)
    terms = [graded.bracketN(a, graded.bracketN(b, c))(x3) for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
    terms[2] = -terms[2]
    assert np.max(scaled_zero(sum(terms), *terms, graded.magnitude([f, g, h], x3))) > 1e-3


def test_commutative_case_has_zero_bracket(lat):
    # 3/2 = 2 - 1/2: the degree-one bracket vanishes identically
    f, g, _ = triple((2, 2), lat)
    x = points((2, 2), 2, lat)
    assert np.max(scaled_zero(graded.bracketN(f, g)(x), graded.magnitude([f, g], x))) < 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_star_product(lat, n):
    rng = np.random.default_rng(n)
    tau = 0.013 + 0.021j
    ws = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(3)]
    f0, g0 = (combo(graded.q_basis(n, 0, lat), w) for w in ws[:2])
    f, g, h = (combo(graded.q_basis(n, tau, lat), w) for w in ws)
    x2, x3 = points((n,), 2, lat, seed=5), points((n,), 3, lat, seed=6)
    assert np.max(residual(graded.star_product(f0, g0, 0)(x2), graded.sym_product(f0, g0)(x2))) < 1e-10
    lhs = graded.star_product(graded.star_product(f, g, tau), h, tau)(x3)
    rhs = graded.star_product(f, graded.star_product(g, h, tau), tau)(x3)
    assert np.max(residual(lhs, rhs)) < 1e-8
    assert graded.membership_check(graded.star_product(f, g, tau), spec=SampleSpec(count=8)).passed


@pytest.mark.parametrize("n", [3, 4])
def test_semiclassical_scale_is_n(lat, n):
    rng = np.random.default_rng(0)
    f0, g0 = (combo(graded.q_basis(n, 0, lat), rng.normal(size=n) + 1j * rng.normal(size=n)) for _ in range(2))
    x = points((n,), 2, lat, seed=7, count=20)
    est = graded.commutator_limit(f0, g0, x)
    assert not est.unstable
    lam, res = graded.fit_scalar(est.values, graded.bracketN(f0, g0)(x))
    assert np.max(res) < 1e-5
    assert abs(lam - n) < 1e-6


def test_semiclassical_limit_vanishes_when_n_is_two(lat):
    rng = np.random.default_rng(1)
    f0, g0 = (combo(graded.q_basis(2, 0, lat), rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(2))
    x = points((2,), 2, lat, seed=7)
    lam, res = graded.fit_scalar(graded.commutator_limit(f0, g0, x).values, graded.bracketN(f0, g0)(x))
    assert np.isnan(lam.real) and np.max(res) < 1e-8


def test_richardson_recovers_value_at_zero():
    est = graded.richardson(lambda t: np.array([1 + 2 * t + 3 * t**2 + 4 * t**3]), graded.LIMIT_STEPS)
    assert abs(est.values[0] - 1) < 1e-10 and not est.unstable
    with pytest.raises(ValueError):
        graded.richardson(lambda t: np.zeros(1), [1e-3])


def test_fit_scalar():
    model = np.array([1.0, 2.0, 3.0])
    lam, res = graded.fit_scalar((2 - 1j) * model, model)
    assert abs(lam - (2 - 1j)) < 1e-14 and np.max(res) < 1e-14
    lam, _ = graded.fit_scalar(model, np.zeros(3))
    assert np.isnan(lam.real)


def test_membership_detects_wrong_law(lat):
    f = graded.degree_one_basis((3,), lat)[0]
    g = graded.degree_one_basis((2,), lat)[0]
    assert not graded.membership_check(graded.sym_product(f, f), n_vec=(2,), spec=SampleSpec(count=5)).passed
    assert graded.membership_check(graded.sym_product(g, g), spec=SampleSpec(count=5)).passed


def test_incompatible_elements_rejected(lat):
    f = graded.degree_one_basis((3,), lat)[0]
    g = graded.degree_one_basis((2,), lat)[0]
    with pytest.raises(ValueError):
        graded.bracketN(f, g)


@pytest.mark.parametrize("n", [2, 3])
def test_raw_kernel_is_not_antisymmetric(lat, n):
    rng = np.random.default_rng(0)
    f = combo(graded.q_basis(n, 0, lat), rng.normal(size=n) + 1j * rng.normal(size=n))
    x = points((n,), 2, lat, seed=1)
    lam, res = graded.fit_scalar(graded.theta_ratio_bracket(f, f, "raw")(x), graded.sym_product(f, f)(x))
    assert abs(lam + 2j * np.pi * n) < 1e-10 and np.max(res) < 1e-12


def test_odd_kernel_is_commutator_limit_and_n_times_bracket(lat):
    n = 3
    rng = np.random.default_rng(1)
    f0, g0 = (combo(graded.q_basis(n, 0, lat), rng.normal(size=n) + 1j * rng.normal(size=n)) for _ in range(2))
    x = points((n,), 2, lat, seed=2)
    odd = graded.theta_ratio_bracket(f0, g0, "odd")(x)
    assert np.max(scaled_zero(odd + graded.theta_ratio_bracket(g0, f0, "odd")(x), odd)) < 1e-10
    assert np.max(residual(odd, n * graded.bracketN(f0, g0)(x))) < 1e-9
    lam, res = graded.fit_scalar(graded.commutator_limit(f0, g0, x).values, odd)
    assert abs(lam - 1) < 1e-6 and np.max(res) < 1e-5
