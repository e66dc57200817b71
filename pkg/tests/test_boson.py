import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ellipq import boson
from ellipq.theta import multi_theta_basis, linear_combination

TAU = 0.137 + 0.05j
H2 = (((2,), (3,)), ((3, 2), (2, 2)))
H3 = (((2,), (2,)), ((3,), (2,)), ((2,), (2,)))


@pytest.fixture(scope="module")
def configs(lat):
    return {
        "scalar": boson.SiteConfig.scalar(3, 3, TAU, lat),
        "single": boson.SiteConfig.single((3, 2), (3, 3), TAU, lat),
        "single3": boson.SiteConfig.single((2, 2, 2), (2, 2, 2), TAU, lat),
        "multi2": boson.SiteConfig(H2, TAU, lat, "multi"),
        "multi3": boson.SiteConfig(H3, TAU, lat, "multi"),
        "multi3-skew": boson.SiteConfig(H3, TAU, lat, "multi", True),
    }


labels = st.sampled_from(["a", "b", "c"])
lins = st.builds(
    lambda cs, t, c: boson.Lin.of(cs, t, c),
    st.dictionaries(labels, st.integers(-3, 3), max_size=3),
    st.fractions(-3, 3, max_denominator=4),
    st.fractions(-3, 3, max_denominator=4),
)
VALS = {"a": 0.3 + 0.1j, "b": -0.2 + 0.5j, "c": 1.1 - 0.4j}


@given(lins, lins)
def test_lin_is_linear(u, v):
    assert abs((u + v).evaluate(VALS, TAU) - u.evaluate(VALS, TAU) - v.evaluate(VALS, TAU)) < 1e-12
    assert abs((u - u).evaluate(VALS, TAU)) < 1e-12


@given(lins)
def test_lin_shift_moves_tau_part(u):
    shifts = {"a": Fraction(1, 3), "b": Fraction(-2)}
    moved = u.shifted(shifts)
    extra = sum(c * shifts.get(k, 0) for k, c in u.coeffs)
    assert moved.tau == u.tau + extra and moved.coeffs == u.coeffs


def test_scalar_shifts(configs):
    cfg = configs["scalar"]
    tab = boson.shift_table((0, (1,)), cfg)
    assert tab[("y", 0, 1, 0)] == 1 and tab[("y", 0, 0, 0)] == -2 and tab[("y", 0, 2, 0)] == -2


def test_multi_shifts_are_fractions_of_d(configs):
    # generator of factor (3,2) at sites (0, 1): row 0 has left/right parts 1 and 2, row 1 has 3 and 1
    tab = boson.shift_table((1, (0, 1)), configs["multi2"])
    assert tab[("y", 0, 0, 1)] == Fraction(-3, 5) + 1
    assert tab[("y", 0, 1, 1)] == Fraction(-3, 5)
    assert tab[("y", 1, 1, 1)] == Fraction(-4, 5) + 1
    # the one-row factor (2,) to the left sees d(()) / d(2)
    assert all(tab[("y", 0, mu, 0)] == Fraction(1, 2) for mu in range(3))


@pytest.mark.parametrize("name", ["scalar", "single", "single3", "multi2", "multi3", "multi3-skew"])
def test_double_exchange_and_tau_zero(configs, name):
    cfg = configs[name]
    assert boson.double_exchange_check(cfg).passed
    assert boson.degenerate_check(cfg).passed


@pytest.mark.parametrize("name", ["scalar", "single", "multi2", "multi3-skew"])
def test_confluence(configs, name):
    assert boson.confluence_check(configs[name], words=40).passed


@pytest.mark.parametrize("name", ["single", "single3", "multi2", "multi3-skew"])
def test_flatness(configs, name):
    rep = boson.flatness_check(configs[name], 3)
    assert rep.passed
    assert rep.details["measured_rank"] == rep.details["expected_rank"]


def test_three_factor_default_shifts_are_obstructed(configs):
    """Without the skew coupling the next-nearest shifts leave the relations non-flat."""
    rep = boson.flatness_check(configs["multi3"], 3)
    assert rep.details["measured_rank"] > rep.details["expected_rank"]
    assert not boson.confluence_check(configs["multi3"], words=40).passed


def test_degenerate_class_respects_tau_zero_swaps(configs):
    cfg = configs["single3"]
    gens = cfg.generators(0)
    for ga, gb in itertools.product(gens, repeat=2):
        for lo, _ in boson._runs(ga[1], gb[1]):
            sa, sb = boson.degenerate_relation(ga, gb, lo)
            assert boson.degenerate_class((ga, gb)) == boson.degenerate_class((sa, sb))


def test_normal_order_strategies_agree_on_a_word(configs):
    cfg = configs["single"]
    rng = np.random.default_rng(0)
    word = tuple(boson.random_words(cfg, 1, rng)[0])
    vals = boson.random_values(cfg, 4, rng)
    left = boson.normal_order([boson.NCMonomial(boson.CoeffExpr.const(1), word)], cfg, "left")
    right = boson.normal_order([boson.NCMonomial(boson.CoeffExpr.const(1), word)], cfg, "right")
    assert np.max(boson.compare(boson.evaluate(left, vals, cfg), boson.evaluate(right, vals, cfg)), initial=0) < 1e-9
    assert all(not boson._reducible(w) for w in left)


def test_normal_order_guards(configs):
    cfg = configs["single"]
    word = ((0, (2, 2)), (0, (1, 0)), (0, (0, 1)))
    with pytest.raises(ValueError):
        boson.normal_order([boson.NCMonomial(boson.CoeffExpr.const(1), word)], cfg, "middle")
    with pytest.raises(boson.RewriteLimitError):
        boson.normal_order([boson.NCMonomial(boson.CoeffExpr.const(1), word)], cfg, max_rewrites=1)


@pytest.mark.parametrize("n, degree", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_homomorphism_sorted_rule(lat, n, degree):
    assert boson.homomorphism_check(n, 3, TAU, lat, degree).passed


def test_homomorphism_shifted_rule_fails(lat):
    rep = boson.homomorphism_check(2, 3, TAU, lat, 2, rule="shifted")
    assert rep.max_residual > 1e-3


def test_embedding_checks_tags(lat):
    cfg = boson.SiteConfig.single((3, 2), (2, 2), TAU, lat)
    wrong = multi_theta_basis((2, 2), lat)[0]
    with pytest.raises(ValueError):
        boson.x_embed(wrong, 0, cfg)
    assert len(boson.x_embed(multi_theta_basis((3, 2), lat)[0], 0, cfg)) == 4


@pytest.mark.parametrize("factors", [(((3, 2), (2, 2)),), H2, H3])
def test_shift_constants_match_bracket_table(lat, factors):
    skew = len(factors) == 3
    rep = boson.semiclassical_shift_check(boson.SiteConfig(factors, TAU, lat, "multi", skew))
    assert rep.passed and rep.max_residual == 0
    assert rep.details["matching_offset"] == 1


def test_one_factor_scale_is_d(lat):
    rep = boson.semiclassical_shift_check(boson.SiteConfig((((3, 2), (2, 2)),), TAU, lat, "multi"))
    assert rep.scalars["single_to_multi_scale"] == 5


@pytest.mark.parametrize("factors, a, b", [((((2,), (3,)), ((3,), (3,))), 0, 1), ((((3, 2), (2, 2)), ((2,), (2,))), 0, 0)])
def test_commutator_limit_matches_bracket(lat, factors, a, b):
    rng = np.random.default_rng(5)

    def rnd(seq):
        basis = multi_theta_basis(seq, lat)
        return linear_combination(basis, rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis)))

    cfg = boson.SiteConfig(factors, 0.1, lat, "multi")
    rep = boson.semiclassical_commutator_check(rnd(factors[a][0]), a, rnd(factors[b][0]), b, cfg)
    assert rep.passed
    assert abs(rep.scalars["scale"] - 1) < 1e-6


def test_config_validation(lat):
    with pytest.raises(ValueError):
        boson.SiteConfig((((3, 2), (2,)),), TAU, lat, "multi")
    with pytest.raises(ValueError):
        boson.SiteConfig(H2, TAU, lat, "single")
    with pytest.raises(ValueError):
        boson.SiteConfig((((3,), (2,)),), TAU, lat, "weird")
