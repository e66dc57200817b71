import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ellipq.seqcomb import cont_frac, d, d_ratio, delta, delta_chain, dim_F, hilbert_exponents, hilbert_tensor, inverse_power

seqs = st.lists(st.integers(2, 7), min_size=1, max_size=5).map(tuple)


def tridiagonal_det(seq):
    m = np.diag(np.array(seq, dtype=float))
    for i in range(len(seq) - 1):
        m[i, i + 1] = m[i + 1, i] = -1
    return round(np.linalg.det(m))


@pytest.mark.parametrize("seq, want", [((2,), 2), ((3,), 3), ((2, 2), 3), ((3, 2), 5), ((2, 2, 2), 4), ((3, 4, 2), 19), ((), 1)])
def test_d_known_values(seq, want):
    assert d(seq) == want


@given(seqs)
def test_d_is_tridiagonal_determinant(seq):
    assert d(seq) == tridiagonal_det(seq)


@given(seqs)
def test_d_is_reversal_invariant(seq):
    assert d(seq) == d(seq[::-1])


@given(seqs, seqs)
def test_delta_merges_ends(a, b):
    merged = delta(a, b)
    assert len(merged) == len(a) + len(b) - 1
    assert merged[len(a) - 1] == a[-1] + b[0]
    # expand the merged diagonal entry: it is linear in a_p + b_1
    assert d(merged) == d(a) * d(b[1:]) + d(a[:-1]) * d(b)
    assert delta_chain([a, b]) == merged


def test_delta_rejects_empty():
    with pytest.raises(ValueError):
        delta((), (2,))


@pytest.mark.parametrize("n, k, want", [(5, 2, (3, 2)), (3, 1, (3,)), (3, 2, (2, 2)), (4, 3, (2, 2, 2)), (19, 7, (3, 4, 2))])
def test_cont_frac_known(n, k, want):
    assert cont_frac(n, k) == want


def test_cont_frac_round_trip_exhaustive():
    for n in range(2, 61):
        for k in range(1, n):
            if math.gcd(n, k) == 1:
                s = cont_frac(n, k)
                assert min(s) >= 2
                assert d(s) == n and d(s[1:]) == k


@pytest.mark.parametrize("n, k", [(4, 2), (5, 5), (5, 0), (3, 7)])
def test_cont_frac_rejects(n, k):
    with pytest.raises(ValueError):
        cont_frac(n, k)


def test_d_ratio_exact():
    from fractions import Fraction

    assert d_ratio([(3,), (2,)], (3, 2)) == Fraction(1)
    assert d_ratio([(2,)], (3, 2), extra=1) == Fraction(3, 5)


def test_dim_F_counts_symmetric_monomials():
    assert dim_F(5, 1) == 5
    assert dim_F(2, 3) == 4
    assert dim_F(3, 0) == 1
    with pytest.raises(ValueError):
        dim_F(0, 2)


def test_inverse_power_is_binomial_series():
    ser = inverse_power((1,), 3, (5,))
    assert [ser[(i,)] for i in range(6)] == [math.comb(i + 2, i) for i in range(6)]


def test_hilbert_one_factor():
    ser = hilbert_tensor(((2,),), 3)
    assert [ser[(i,)] for i in range(4)] == [1, 2, 3, 4]


def test_hilbert_two_factors_frozen():
    # sympy expansion of (1-t1)^-5 (1-t2)^-2 (1-t1 t2)^-11
    want = {(0, 0): 1, (0, 1): 2, (0, 2): 3, (1, 0): 5, (1, 1): 21, (1, 2): 37, (2, 0): 15, (2, 1): 85, (2, 2): 221}
    ser = hilbert_tensor(((3, 2), (2,)), 2)
    assert {k: ser[k] for k in want} == want
    assert hilbert_tensor(((2,), (2,)), 1)[(1, 1)] == 8


def test_hilbert_three_factors_frozen():
    want = {(0, 0, 0): 1, (0, 0, 1): 2, (0, 1, 0): 2, (0, 1, 1): 8, (1, 0, 0): 2, (1, 0, 1): 4, (1, 1, 0): 8, (1, 1, 1): 30}
    ser = hilbert_tensor(((2,), (2,), (2,)), 1)
    assert {k: ser[k] for k in want} == want


def test_hilbert_exponents_use_merged_chains():
    exps = hilbert_exponents(((3, 2), (2,)))
    assert exps[(1, 2)] == ((3, 4), 11)
    assert exps[(1, 1)] == ((3, 2), 5)


@pytest.mark.parametrize("bad", [((),), ((1, 2),), ()])
def test_hilbert_rejects(bad):
    with pytest.raises(ValueError):
        hilbert_tensor(bad, 2)
