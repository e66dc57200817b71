from fractions import Fraction

import numpy as np
import pytest

from ellipq import graded, tensor
from ellipq.report import SampleSpec, residual, scaled_zero
from ellipq.theta import linear_combination, multi_theta_basis, theta_eval, theta_logd
from ellipq.seqcomb import d


def rand_theta(seq, lat, rng):
    basis = multi_theta_basis(seq, lat)
    return linear_combination(basis, rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis)))


def gens(seqs, place, lat, seed=0):
    rng = np.random.default_rng(seed)
    return [tensor.degree_one(rand_theta(seqs[t], lat, rng), t, seqs) for t in place]


def jacobi_residual(seqs, place, lat, skew=False, seed=0):
    f, g, h = gens(seqs, place, lat, seed)

    def br(a, b):
        return tensor.tensor_bracket(a, b, skew_coupling=skew)

    terms = [br(a, br(b, c)) for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
    x = tensor.sample_tensor(terms[0].layout, lat, SampleSpec(seed=4, count=8))
    vals = [t(x) for t in terms]
    prod = tensor.tensor_product(tensor.tensor_product(f, g), h)(x)
    return float(np.max(scaled_zero(sum(vals), *vals, prod)))


@pytest.mark.parametrize(
    "pair, want_f, want_g",
    [
        (((3, 2), (2, 2)), Fraction(22, 15), Fraction(-8, 5)),
        (((2,), (3,)), Fraction(4, 3), Fraction(-7, 6)),
    ],
)
def test_z_bracket_constants(pair, want_f, want_g):
    assert tensor.z_bracket_constant(pair, (1, 0), 0) == want_f
    assert tensor.z_bracket_constant(pair, (0, 1), 0) == want_g


def test_z_bracket_is_additive_in_degree():
    pair = ((3, 2), (2, 2))
    c10, c01 = tensor.z_bracket_constant(pair, (1, 0), 0), tensor.z_bracket_constant(pair, (0, 1), 0)
    assert tensor.z_bracket_constant(pair, (2, 1), 0) == 2 * c10 + c01


@pytest.mark.parametrize("pair", [((3, 2), (2, 2)), ((2,), (3,)), ((2, 2, 2), (3,))])
def test_explicit_cross_factor_bracket(lat, pair):
    rng = np.random.default_rng(1)
    n_seq, m_seq = pair
    fe, ge = rand_theta(n_seq, lat, rng), rand_theta(m_seq, lat, rng)
    br = tensor.tensor_bracket(tensor.degree_one(fe, 0, pair), tensor.degree_one(ge, 1, pair))
    x = tensor.sample_tensor(br.layout, lat, SampleSpec(seed=2, count=10))
    p, q = len(n_seq), len(m_seq)
    xs, ys, z = x[:, :p], x[:, p : p + q], x[:, p + q]
    want = fe(xs) * sum(d(m_seq[t + 1 :]) / d(m_seq) * ge.grad(ys)[:, t] for t in range(q))
    want -= ge(ys) * sum(d(n_seq[:t]) / d(n_seq) * fe.grad(xs)[:, t] for t in range(p))
    want -= (theta_logd(ys[:, 0] - xs[:, -1] - z, lat) - np.pi * 1j) * fe(xs) * ge(ys)
    assert np.max(residual(br(x), want)) < 1e-9


@pytest.mark.parametrize("seq", [(2,), (3,), (3, 2)])
def test_one_factor_reduces_to_graded_bracket(lat, seq):
    rng = np.random.default_rng(2)
    fe, ge = rand_theta(seq, lat, rng), rand_theta(seq, lat, rng)
    br = tensor.tensor_bracket(tensor.degree_one(fe, 0, (seq,)), tensor.degree_one(ge, 0, (seq,)))
    x = tensor.sample_tensor(br.layout, lat, SampleSpec(seed=3, count=10))
    ref = graded.bracketN(graded.lift(fe), graded.lift(ge))(x.reshape(len(x), 2, len(seq)))
    assert np.max(residual(br(x), ref)) < 1e-9


def test_antisymmetry_and_product_commutativity(lat):
    seqs = ((3, 2), (2,))
    a, b, c = gens(seqs, (0, 1, 1), lat)
    f, g = tensor.tensor_product(a, b), c
    x = tensor.sample_tensor(tensor.tensor_bracket(f, g).layout, lat, SampleSpec(seed=5, count=10))
    fg, gf = tensor.tensor_bracket(f, g)(x), tensor.tensor_bracket(g, f)(x)
    assert np.max(scaled_zero(fg + gf, fg)) < 1e-10
    assert np.max(residual(tensor.tensor_product(f, g)(x), tensor.tensor_product(g, f)(x))) < 1e-12


def test_word_route_agrees_with_functional_bracket(lat):
    seqs = ((2, 2), (3,))
    rng = np.random.default_rng(6)
    a, b, c = gens(seqs, (0, 1, 0), lat, seed=6)
    m = tensor.coupling_function(seqs, lambda z: np.exp(0.7 * z.sum(axis=1)), lat)
    f, g = tensor.tensor_product(m, tensor.tensor_product(a, b)), c
    br = tensor.tensor_bracket(f, g)
    table = tensor.GeneratorBracketTable(seqs, lat)
    pt = tensor.random_label_point(seqs, br.degrees, lat, rng)
    xf = tensor.encode_X(f, pt, br.degrees, derivations=True)
    xg = tensor.encode_X(g, pt, br.degrees, derivations=True)
    wb, xb = tensor.word_bracket(xf, xg, table, pt), tensor.encode_X(br, pt, br.degrees)
    assert set(wb) | set(xb)
    assert max(residual(wb.get(w, 0), xb.get(w, 0)) for w in set(wb) | set(xb)) < 1e-9


def test_distant_factors_commute(lat):
    seqs = ((2,), (3,), (2,))
    f, g = gens(seqs, (0, 2), lat)
    br = tensor.tensor_bracket(f, g)
    x = tensor.sample_tensor(br.layout, lat, SampleSpec(seed=7, count=10))
    assert np.max(np.abs(br(x))) == 0


@pytest.mark.parametrize("seqs, place", [(((3, 2), (2,)), (0, 1, 1)), (((2,), (3,)), (0, 0, 1)), (((2,), (2,)), (0, 1, 0))])
def test_jacobi_two_factors(lat, seqs, place):
    assert jacobi_residual(seqs, place, lat) < 1e-7


@pytest.mark.parametrize("seqs, place", [(((2,), (3,), (2,)), (0, 1, 2)), (((2, 2), (2,), (3,)), (1, 0, 2))])
def test_jacobi_three_factors_with_skew_coupling(lat, seqs, place):
    assert jacobi_residual(seqs, place, lat, skew=True) < 1e-7


def test_skew_coupling_only_touches_next_nearest_pairs(lat):
    lit = tensor.GeneratorBracketTable(((2,), (3,), (2,)), lat)
    skew = tensor.GeneratorBracketTable(((2,), (3,), (2,)), lat, skew_coupling=True)
    changed = [(t, s) for t in range(3) for s in range(2) if lit.kappa_z(t, s) != skew.kappa_z(t, s)]
    assert changed == [(0, 1), (2, 0)]
    assert skew.kappa_z(0, 1) == Fraction(-1, 3) and skew.kappa_z(2, 0) == Fraction(1, 3)


@pytest.fixture(scope="module")
def parts(lat):
    return gens(((3, 2), (2,)), (0, 1, 1), lat, seed=2)


class TestConditions:
    def test_outputs_pass(self, parts):
        a, b, c = parts
        for el in (tensor.tensor_product(a, b), tensor.tensor_bracket(a, b), tensor.tensor_bracket(tensor.tensor_bracket(a, b), c)):
            assert tensor.condition3_check(el).passed
            assert tensor.condition4_check(el).passed

    def test_double_pole_fails_condition3(self, parts, lat):
        p = tensor.tensor_product(parts[0], parts[1])
        lay = p.layout

        def fn(x):
            form = x[:, lay.col(1, 0, 0)] - x[:, lay.col(0, 0, 1)] - lay.z(x)[:, 0]
            return p(x) / theta_eval(form, lat) ** 2

        assert not tensor.condition3_check(tensor.TensorElement(lay, fn, lat)).passed

    def test_missing_zero_fails_condition4(self, parts, lat):
        p3 = tensor.tensor_product(tensor.tensor_product(parts[0], parts[1]), parts[2])
        lay = p3.layout
        el = tensor.TensorElement(lay, lambda x: p3(x) / np.prod(theta_eval(tensor.cross_forms(lay, x), lat), axis=1), lat)
        assert not tensor.condition4_check(el).passed


def test_invalid_layouts_rejected():
    with pytest.raises(ValueError):
        tensor.Layout(((1,),), (1,))
    with pytest.raises(ValueError):
        tensor.Layout(((2,), (3,)), (1,))
