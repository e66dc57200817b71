import numpy as np
import sympy
from sympy.matrices.normalforms import smith_normal_form as sympy_snf
from hypothesis import given
from hypothesis import strategies as st

from ellipq.smith import smith_normal_form
from ellipq.theta import tridiagonal

square = st.integers(1, 4).flatmap(lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n))


def _unimodular(m):
    return abs(round(np.linalg.det(m.astype(float)))) == 1


@given(square)
def test_decomposition(a):
    a = np.array(a, dtype=np.int64)
    diag, u, w = smith_normal_form(a)
    assert _unimodular(u) and _unimodular(w)
    assert np.array_equal(u @ a @ w, np.diag(diag))
    assert all(x >= 0 for x in diag)
    nz = [x for x in diag if x]
    assert all(b % a_ == 0 for a_, b in zip(nz, nz[1:]))


@given(square)
def test_invariants_match_sympy(a):
    want = sympy_snf(sympy.Matrix(a), domain=sympy.ZZ)
    diag, _, _ = smith_normal_form(np.array(a))
    assert [abs(int(want[i, i])) for i in range(len(a))] == diag


def test_tridiagonal_quotient_is_cyclic_of_order_d():
    diag, _, _ = smith_normal_form(tridiagonal((3, 4, 2)))
    assert diag == [1, 1, 19]
