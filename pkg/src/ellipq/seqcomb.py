"""Exact combinatorics: continuants, negative continued fractions, Delta, Hilbert series."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


def d(seq: Sequence[int]) -> int:
    """Determinant of the tridiagonal matrix with diagonal seq and off-diagonal -1.

    d(()) == 1, and d(n_1..n_p) = n_p d(n_1..n_{p-1}) - d(n_1..n_{p-2}).
    """
    prev, cur = 0, 1
    for n in seq:
        prev, cur = cur, n * cur - prev
    return cur


def d_ratio(num: Iterable[Sequence[int]], den: Sequence[int], extra: int = 0) -> Fraction:
    """(sum of d over ``num`` + extra) / d(den), exactly."""
    return Fraction(sum(d(s) for s in num) + extra, d(den))


def cont_frac(n: int, k: int) -> tuple[int, ...]:
    """Entries (all >= 2) of n/k = n_1 - 1/(n_2 - 1/(... - 1/n_p))."""
    if not (1 <= k < n) or math.gcd(n, k) != 1:
        raise ValueError(f"cont_frac needs coprime 1 <= k < n, got n={n}, k={k}")
    out = []
    while k:
        a = -(-n // k)
        out.append(a)
        n, k = k, a * k - n
    return tuple(out)


def delta(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    """(a_1..a_{p-1}, a_p + b_1, b_2..b_q)."""
    if not a or not b:
        raise ValueError("delta needs two nonempty sequences")
    return (*a[:-1], a[-1] + b[0], *b[1:])


def delta_chain(seqs: Sequence[Sequence[int]]) -> tuple[int, ...]:
    out = tuple(seqs[0])
    for s in seqs[1:]:
        out = delta(out, s)
    return out


def dim_F(n: int, alpha: int) -> int:
    """n(n+1)...(n+alpha-1)/alpha!"""
    if n < 1 or alpha < 0:
        raise ValueError("dim_F needs n >= 1 and alpha >= 0")
    return math.comb(n + alpha - 1, alpha)


@dataclass
class MultiSeries:
    """Truncated power series in h variables with integer coefficients."""

    nvars: int
    cutoff: tuple[int, ...]
    coeffs: dict[tuple[int, ...], int]

    def __getitem__(self, exps: Sequence[int]) -> int:
        return self.coeffs.get(tuple(exps), 0)

    def __mul__(self, other: "MultiSeries") -> "MultiSeries":
        out: dict[tuple[int, ...], int] = {}
        for ea, ca in self.coeffs.items():
            for eb, cb in other.coeffs.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                if all(x <= c for x, c in zip(e, self.cutoff)):
                    out[e] = out.get(e, 0) + ca * cb
        return MultiSeries(self.nvars, self.cutoff, {e: c for e, c in out.items() if c})

    @classmethod
    def one(cls, nvars: int, cutoff: Sequence[int]) -> "MultiSeries":
        return cls(nvars, tuple(cutoff), {(0,) * nvars: 1})


def inverse_power(mono: Sequence[int], exponent: int, cutoff: Sequence[int]) -> MultiSeries:
    """(1 - t^mono)^(-exponent) truncated at ``cutoff``."""
    coeffs = {}
    for j in itertools.count():
        e = tuple(j * m for m in mono)
        if any(x > c for x, c in zip(e, cutoff)):
            break
        coeffs[e] = math.comb(exponent + j - 1, j) if exponent else int(j == 0)
        if not any(mono):
            break
    return MultiSeries(len(cutoff), tuple(cutoff), coeffs)


def hilbert_exponents(seqs: Sequence[Sequence[int]]) -> dict[tuple[int, int], tuple[tuple[int, ...], int]]:
    """{(lam, nu): (N_lam Delta ... Delta N_nu, d(...))} for 1 <= lam <= nu <= h."""
    h = len(seqs)
    out = {}
    for lam in range(h):
        for nu in range(lam, h):
            s = delta_chain(seqs[lam : nu + 1])
            out[(lam + 1, nu + 1)] = (s, d(s))
    return out


def hilbert_tensor(seqs: Sequence[Sequence[int]], cutoff: int | Sequence[int]) -> MultiSeries:
    """Expand prod_{lam<=nu} (1 - t_lam...t_nu)^(-d(N_lam Delta ... Delta N_nu))."""
    h = len(seqs)
    if h == 0:
        raise ValueError("need at least one sequence")
    if any(n < 2 for s in seqs for n in s) or any(len(s) == 0 for s in seqs):
        raise ValueError("sequence entries must be >= 2")
    cut = (cutoff,) * h if isinstance(cutoff, int) else tuple(cutoff)
    if len(cut) != h or any(c <= 0 for c in cut):
        raise ValueError("cutoff must be positive")
    series = MultiSeries.one(h, cut)
    for (lam, nu), (_, e) in hilbert_exponents(seqs).items():
        mono = tuple(int(lam <= i + 1 <= nu) for i in range(h))
        series = series * inverse_power(mono, e, cut)
    return series
