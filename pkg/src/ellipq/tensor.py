"""Multigraded functions over h theta factors and their Poisson bracket.

A point is a flat complex array of shape ``(S, V)``: for each factor t the
``degrees[t]`` blocks of ``len(seqs[t])`` coordinates x_{mu,lam,t}, block-major,
followed by the h-1 coupling variables z_{t,t+1}.

The bracket is driven by a table of generator brackets: every generator e_t
acts on a coordinate by a rational constant, and pairs of generators act by
theta-function kernels.  It is evaluated two ways: ``tensor_bracket`` reads
off the coefficient function directly, ``word_bracket`` expands the encoded
sums word by word.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ellipq.graded import cauchy_grad
from ellipq.report import SampleSpec, VerifyReport, fundamental, merge, residual
from ellipq.seqcomb import d
from ellipq.theta import TWO_PI_I, LatticeParams, ThetaElement, theta_eval, theta_logd

MAX_DEGREE = 4

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Layout:
    seqs: tuple[tuple[int, ...], ...]
    degrees: tuple[int, ...]

    def __post_init__(self):
        seqs = tuple(tuple(int(n) for n in s) for s in self.seqs)
        if not seqs or any(not s or min(s) < 2 for s in seqs):
            raise ValueError("every sequence must be nonempty with entries >= 2")
        if len(self.degrees) != len(seqs) or min(self.degrees) < 0:
            raise ValueError("need one nonnegative degree per factor")
        object.__setattr__(self, "seqs", seqs)
        object.__setattr__(self, "degrees", tuple(int(a) for a in self.degrees))

    @property
    def h(self) -> int:
        return len(self.seqs)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for s, a in zip(self.seqs, self.degrees):
            out.append(pos)
            pos += len(s) * a
        out.append(pos)
        return tuple(out)

    @property
    def nx(self) -> int:
        return self.offsets[-1]

    @property
    def size(self) -> int:
        return self.nx + self.h - 1

    def col(self, t: int, lam: int, mu: int) -> int:
        return self.offsets[t] + lam * len(self.seqs[t]) + mu

    def blocks(self, x: np.ndarray, t: int) -> np.ndarray:
        """(S, degrees[t], p_t) view of factor t."""
        return x[:, self.offsets[t] : self.offsets[t + 1]].reshape(len(x), self.degrees[t], len(self.seqs[t]))

    def z(self, x: np.ndarray) -> np.ndarray:
        return x[:, self.nx :]

    def assemble(self, blocks: Sequence[np.ndarray], z: np.ndarray) -> np.ndarray:
        s = len(z)
        return np.concatenate([b.reshape(s, -1) for b in blocks] + [z], axis=1)

    def shifted(self, other: Sequence[int]) -> "Layout":
        return Layout(self.seqs, tuple(a + b for a, b in zip(self.degrees, other)))


@dataclass(frozen=True, eq=False)
class TensorElement:
    layout: Layout
    fn: Evaluator
    lattice: LatticeParams
    grad_fn: Evaluator | None = None
    label: str = field(default="")

    @property
    def seqs(self):
        return self.layout.seqs

    @property
    def degrees(self):
        return self.layout.degrees

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=complex))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if self.grad_fn is not None:
            return self.grad_fn(x)
        return cauchy_grad(self.fn, x)

    def __add__(self, other: "TensorElement") -> "TensorElement":
        _check_same(self, other)
        if self.degrees != other.degrees:
            raise ValueError("degrees differ")
        return TensorElement(self.layout, lambda x: self.fn(x) + other.fn(x), self.lattice, None, f"({self.label}+{other.label})")

    def scaled(self, w: complex) -> "TensorElement":
        g = self.grad_fn
        return TensorElement(self.layout, lambda x: w * self.fn(x), self.lattice, (lambda x: w * g(x)) if g else None, self.label)


def _check_same(f: TensorElement, g: TensorElement):
    if f.seqs != g.seqs:
        raise ValueError(f"mismatched sequences {f.seqs} vs {g.seqs}")
    if f.lattice != g.lattice:
        raise ValueError("mismatched lattice")


def _check_degree(degrees):
    if sum(degrees) > MAX_DEGREE:
        raise ValueError(f"total degree {sum(degrees)} exceeds the cap {MAX_DEGREE}")


def degree_one(f: ThetaElement, t: int, seqs: Sequence[Sequence[int]], lat: LatticeParams | None = None) -> TensorElement:
    """A theta function of Theta_{N_t} as an element of degree e_t."""
    seqs = tuple(tuple(s) for s in seqs)
    if f.tag.n_vec != seqs[t]:
        raise ValueError(f"element law {f.tag.n_vec} does not match factor {t} sequence {seqs[t]}")
    lay = Layout(seqs, tuple(int(i == t) for i in range(len(seqs))))
    lo, hi = lay.offsets[t], lay.offsets[t + 1]

    def grad(x):
        out = np.zeros(x.shape, dtype=complex)
        out[:, lo:hi] = f.grad(x[:, lo:hi])
        return out

    return TensorElement(lay, lambda x: f(x[:, lo:hi]), f.lattice if lat is None else lat, grad, f.label)


def coupling_function(seqs: Sequence[Sequence[int]], fn: Callable[[np.ndarray], np.ndarray], lat: LatticeParams, label="m") -> TensorElement:
    """An element of degree zero: a function of the z variables, ``fn(z)`` with z of shape (S, h-1)."""
    lay = Layout(tuple(tuple(s) for s in seqs), (0,) * len(seqs))
    return TensorElement(lay, lambda x: fn(lay.z(x)), lat, None, label)


def _subsets(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) followed by their complements, shape (C, n)."""
    rows = [list(c) + [i for i in range(n) if i not in c] for c in itertools.combinations(range(n), k)]
    return np.array(rows, dtype=np.intp).reshape(len(rows), n)


def _permutations(n: int, k: int) -> np.ndarray:
    rows = list(itertools.permutations(range(n)))
    return np.array(rows, dtype=np.intp).reshape(len(rows), n)


class _Splitter:
    """All ways of handing ``da[t]`` blocks of each factor to the left element."""

    def __init__(self, lay: Layout, da: Sequence[int], perms: bool = False):
        self.lay = lay
        self.da = tuple(da)
        gen = _permutations if perms else _subsets
        self.rows = [gen(n, k) for n, k in zip(lay.degrees, self.da)]
        self.combos = list(itertools.product(*(range(len(r)) for r in self.rows)))
        self.la = Layout(lay.seqs, self.da)
        self.lb = Layout(lay.seqs, tuple(n - k for n, k in zip(lay.degrees, self.da)))

    def __len__(self):
        return len(self.combos)

    def split(self, x):
        """Left and right points for every split: (S*C, Va), (S*C, Vb), C-major per sample."""
        s = len(x)
        lefts, rights = [], []
        for t in range(self.lay.h):
            b = self.lay.blocks(x, t)[:, self.rows[t]]  # (S, R_t, n, p)
            lefts.append(b[:, :, : self.da[t]])
            rights.append(b[:, :, self.da[t] :])
        z = self.lay.z(x)
        xa, xb = [], []
        for combo in self.combos:
            xa.append(self.la.assemble([lefts[t][:, c] for t, c in enumerate(combo)], z))
            xb.append(self.lb.assemble([rights[t][:, c] for t, c in enumerate(combo)], z))
        c = len(self.combos)
        return np.stack(xa, 1).reshape(s * c, -1), np.stack(xb, 1).reshape(s * c, -1)


def tensor_product(f: TensorElement, g: TensorElement) -> TensorElement:
    """Per-factor symmetrized product with 1/prod(a_t! b_t!) normalization."""
    _check_same(f, g)
    lay = f.layout.shifted(g.degrees)
    _check_degree(lay.degrees)
    sp = _Splitter(lay, f.degrees, perms=True)
    norm = 1.0 / math.prod(math.factorial(a) * math.factorial(b) for a, b in zip(f.degrees, g.degrees))

    def fn(x):
        xa, xb = sp.split(x)
        return norm * (f(xa) * g(xb)).reshape(len(x), -1).sum(axis=1)

    return TensorElement(lay, fn, f.lattice, None, f"({f.label}.{g.label})")


# ---------------------------------------------------------------------------
# Generator bracket table


class GeneratorBracketTable:
    """Brackets of the generators e_t with coordinates, couplings and each other.

    Factors and coordinates are 0-based here.

    With ``skew_coupling`` the generators also act on the coupling variable one
    factor beyond their neighbours: {e_t, z_{t+1,t+2}} = -e_t / d(N_{t+1}) and
    {e_{t+2}, z_{t,t+1}} = e_{t+2} / d(N_{t+1}). Without these the Jacobi
    identity fails on e_t, e_{t+1}, e_{t+2} by
    (L'(w_{t+1,t+2}) - L'(w_{t,t+1})) / d(N_{t+1}) times the product.
    """

    def __init__(self, seqs: Sequence[Sequence[int]], lat: LatticeParams, skew_coupling: bool = False):
        self.seqs = tuple(tuple(s) for s in seqs)
        self.lat = lat
        self.h = len(self.seqs)
        self.skew_coupling = skew_coupling

    def _d(self, t, lo, hi) -> int:
        return d(self.seqs[t][lo:hi])

    def kappa(self, t: int, s: int, mu: int) -> Fraction:
        """{e_t, x_{mu, ., s}} = kappa * e_t."""
        if not (0 <= s < self.h and 0 <= mu < len(self.seqs[s])):
            raise IndexError("no such coordinate")
        full = d(self.seqs[s])
        if s == t:
            return -Fraction(self._d(s, 0, mu) + self._d(s, mu + 1, None), full)
        if s == t + 1:
            return Fraction(self._d(s, mu + 1, None), full)
        if s == t - 1:
            return Fraction(self._d(s, 0, mu), full)
        return Fraction(0)

    def kappa_z(self, t: int, s: int) -> Fraction:
        """{e_t, z_{s,s+1}} = kappa_z * e_t."""
        if not 0 <= s < self.h - 1:
            raise IndexError("no such coupling variable")
        left, right = self.seqs[s], self.seqs[s + 1]
        if t == s:
            return Fraction(d(right[1:]), d(right)) + Fraction(d(left[:-1]) + 1, d(left))
        if t == s + 1:
            return -(Fraction(d(right[1:]) + 1, d(right)) + Fraction(d(left[:-1]), d(left)))
        if self.skew_coupling and t == s - 1:
            return -Fraction(1, d(left))
        if self.skew_coupling and t == s + 2:
            return Fraction(1, d(right))
        return Fraction(0)

    @cached_property
    def derivation_weights(self) -> list[tuple[list[np.ndarray], np.ndarray]]:
        """Per generator factor t: per-factor coordinate weights and coupling weights as floats."""
        out = []
        for t in range(self.h):
            xs = [np.array([float(self.kappa(t, s, mu)) for mu in range(len(self.seqs[s]))]) for s in range(self.h)]
            zs = np.array([float(self.kappa_z(t, s)) for s in range(self.h - 1)])
            out.append((xs, zs))
        return out

    def same_kernel(self, u, v):
        """Coefficient of e_t(u) e_t(v) in {e_t(u), e_t(v)}."""
        lat = self.lat
        return theta_logd(v[..., 0] - u[..., 0], lat) + theta_logd(v[..., -1] - u[..., -1], lat) - TWO_PI_I

    def swap_kernel(self, u, v, a: int):
        """theta'(0) theta(v_a + v_{a+1} - u_a - u_{a+1}) / (theta(v_a - u_a) theta(v_{a+1} - u_{a+1}))."""
        lat = self.lat
        num = theta_eval(v[..., a] + v[..., a + 1] - u[..., a] - u[..., a + 1], lat)
        den = theta_eval(v[..., a] - u[..., a], lat) * theta_eval(v[..., a + 1] - u[..., a + 1], lat)
        return lat.theta_prime0 * num / den

    def cross_kernel(self, t: int, u, s: int, v, z):
        """Coefficient of e_t(u) e_s(v) in {e_t(u), e_s(v)} for t != s."""
        if s == t + 1:
            return theta_logd(u[..., -1] - v[..., 0] + z[..., t], self.lat) - np.pi * 1j
        if t == s + 1:
            return -(theta_logd(v[..., -1] - u[..., 0] + z[..., s], self.lat) - np.pi * 1j)
        return np.zeros(np.shape(u)[:-1], dtype=complex)

    def derivation(self, t: int, lay: Layout, grad: np.ndarray) -> np.ndarray:
        """sum_v kappa(t, v) d/dv applied to a gradient laid out by ``lay``."""
        xs, zs = self.derivation_weights[t]
        out = np.zeros(len(grad), dtype=complex)
        for s in range(lay.h):
            if lay.degrees[s]:
                out += (lay.blocks(grad, s) * xs[s]).sum(axis=(1, 2))
        if lay.h > 1:
            out += lay.z(grad) @ zs
        return out


def z_bracket_constant(seqs: Sequence[Sequence[int]], degrees: Sequence[int], s: int, skew_coupling: bool = False) -> Fraction:
    """{f, z_{s,s+1}} = c f for f of the given degrees, exactly."""
    table = GeneratorBracketTable(seqs, LatticeParams(), skew_coupling)
    return sum((a * table.kappa_z(t, s) for t, a in enumerate(degrees)), Fraction(0))


def bracket_with_z(f: TensorElement, s: int, skew_coupling: bool = False) -> TensorElement:
    c = complex(z_bracket_constant(f.seqs, f.degrees, s, skew_coupling))
    return f.scaled(c)


# ---------------------------------------------------------------------------
# The bracket, read off coefficient by coefficient


def tensor_bracket(f: TensorElement, g: TensorElement, skew_coupling: bool = False) -> TensorElement:
    """{f, g} as a function of degree deg f + deg g.

    For a target point the coefficient collects, over every split of the blocks
    between f and g: the pair kernels times f g, the derivation terms
    f (sum_t a_t D_t g) - g (sum_t b_t D_t f), and the tail-exchange terms of
    same-factor pairs.
    """
    _check_same(f, g)
    lay = f.layout.shifted(g.degrees)
    _check_degree(lay.degrees)
    table = GeneratorBracketTable(f.seqs, f.lattice, skew_coupling)
    sp = _Splitter(lay, f.degrees)
    la, lb = sp.la, sp.lb
    da, db = f.degrees, g.degrees

    def fn(x):
        s = len(x)
        xa, xb = sp.split(x)
        fa, gb = f(xa), g(xb)
        need_fg = any(da) and any(db)
        if any(da) or any(db):
            ga, gg = f.grad(xa), g.grad(xb)
        out = np.zeros(len(xa), dtype=complex)
        for t in range(lay.h):
            if da[t]:
                out += da[t] * fa * table.derivation(t, lb, gg)
            if db[t]:
                out -= db[t] * gb * table.derivation(t, la, ga)
        if need_fg:
            za = la.z(xa)
            kern = np.zeros(len(xa), dtype=complex)
            for t, s2 in itertools.product(range(lay.h), repeat=2):
                if not (da[t] and db[s2]) or abs(t - s2) > 1:
                    continue
                u = la.blocks(xa, t)[:, :, None]
                v = lb.blocks(xb, s2)[:, None, :]
                if t == s2:
                    kern += table.same_kernel(u, v).sum(axis=(1, 2))
                else:
                    zz = za[:, None, None, :]
                    kern += table.cross_kernel(t, u, s2, v, zz).sum(axis=(1, 2))
            out += kern * fa * gb
            out += _exchange_terms(f, g, table, xa, xb, la, lb)
        return out.reshape(s, -1).sum(axis=1)

    return TensorElement(lay, fn, f.lattice, None, f"{{{f.label},{g.label}}}")


def _exchange_terms(f, g, table, xa, xb, la, lb):
    out = np.zeros(len(xa), dtype=complex)
    for t in range(la.h):
        p = len(la.seqs[t])
        if p < 2 or not (la.degrees[t] and lb.degrees[t]):
            continue
        ba, bb = la.blocks(xa, t), lb.blocks(xb, t)
        for i, j, a in itertools.product(range(la.degrees[t]), range(lb.degrees[t]), range(p - 1)):
            u, v = ba[:, i], bb[:, j]
            nu, nv = u.copy(), v.copy()
            nu[:, : a + 1] = v[:, : a + 1]
            nv[:, : a + 1] = u[:, : a + 1]
            ya, yb = xa.copy(), xb.copy()
            ya[:, la.col(t, i, 0) : la.col(t, i, 0) + p] = nu
            yb[:, lb.col(t, j, 0) : lb.col(t, j, 0) + p] = nv
            out += table.swap_kernel(nu, nv, a) * f(ya) * g(yb)
    return out


# ---------------------------------------------------------------------------
# Encoded sums over generator words


Block = tuple[int, tuple[int, ...]]  # (factor, label per coordinate)
Word = tuple[Block, ...]


@dataclass
class LabelPoint:
    """Numeric values for labels: ``values[t][mu, gamma]`` plus the couplings ``z`` (h-1,)."""

    values: list[np.ndarray]
    z: np.ndarray

    def block(self, blk: Block) -> np.ndarray:
        t, labels = blk
        return self.values[t][np.arange(len(labels)), list(labels)]

    def flat(self, word: Word, lay: Layout) -> np.ndarray:
        per = [[self.block(b) for b in word if b[0] == t] for t in range(lay.h)]
        blocks = [np.array(p, dtype=complex).reshape(1, len(p), len(lay.seqs[t])) for t, p in enumerate(per)]
        return lay.assemble(blocks, self.z.reshape(1, -1))


def word_is_zero(word: Word) -> bool:
    """Two generators of one factor sharing a label in some coordinate annihilate."""
    for (t1, l1), (t2, l2) in itertools.combinations(word, 2):
        if t1 == t2 and any(a == b for a, b in zip(l1, l2)):
            return True
    return False


def normal_word(blocks) -> Word:
    return tuple(sorted(blocks))


def enumerate_words(seqs, degrees, labels: Sequence[int]) -> list[Word]:
    """All nonzero words with degrees[t] generators of factor t and labels[t] labels per coordinate."""
    per_factor = []
    for t, (s, a) in enumerate(zip(seqs, degrees)):
        tuples = list(itertools.product(range(labels[t]), repeat=len(s)))
        opts = []
        for combo in itertools.combinations(tuples, a):
            if not any(any(x == y for x, y in zip(c1, c2)) for c1, c2 in itertools.combinations(combo, 2)):
                opts.append([(t, c) for c in combo])
        per_factor.append(opts)
    return [normal_word(sum(choice, [])) for choice in itertools.product(*per_factor)]


def encode_X(
    f: TensorElement,
    pt: LabelPoint,
    labels: Sequence[int] | None = None,
    derivations: bool = False,
    skew_coupling: bool = False,
) -> dict:
    """Coefficients of X_f on every nonzero word over the given label sets.

    With ``derivations`` each value is (c, [D_t c for each factor t]).
    """
    _check_degree(f.degrees)
    labels = tuple(pt.values[t].shape[1] for t in range(f.layout.h)) if labels is None else tuple(labels)
    words = enumerate_words(f.seqs, f.degrees, labels)
    if not words:
        return {}
    x = np.concatenate([pt.flat(w, f.layout) for w in words])
    vals = f(x)
    if not derivations:
        return dict(zip(words, vals))
    table = GeneratorBracketTable(f.seqs, f.lattice, skew_coupling)
    gr = f.grad(x)
    ders = np.stack([table.derivation(t, f.layout, gr) for t in range(f.layout.h)], axis=1)
    return {w: (v, dv) for w, v, dv in zip(words, vals, ders)}


def word_product(xf: dict, xg: dict) -> dict:
    out: dict = {}
    for w1, c1 in xf.items():
        for w2, c2 in xg.items():
            w = normal_word(w1 + w2)
            if not word_is_zero(w):
                out[w] = out.get(w, 0) + c1 * c2
    return out


def _generator_bracket(table: GeneratorBracketTable, pt: LabelPoint, e1: Block, e2: Block):
    """{e1, e2} as a list of (coefficient, replacement blocks)."""
    (t, l1), (s, l2) = e1, e2
    u, v = pt.block(e1), pt.block(e2)
    if t == s:
        if any(a == b for a, b in zip(l1, l2)):
            return []
        terms = [(complex(table.same_kernel(u, v)), (e1, e2))]
        for a in range(len(l1) - 1):
            n1 = (t, l2[: a + 1] + l1[a + 1 :])
            n2 = (t, l1[: a + 1] + l2[a + 1 :])
            terms.append((complex(table.swap_kernel(u, v, a)), (n1, n2)))
        return terms
    if abs(t - s) == 1:
        return [(complex(table.cross_kernel(t, u, s, v, pt.z)), (e1, e2))]
    return []


def word_bracket(xf: dict, xg: dict, table: GeneratorBracketTable, pt: LabelPoint) -> dict:
    """{X_f, X_g} by the biderivation rule on words; inputs carry derivations (see encode_X)."""
    out: dict = {}

    def add(blocks, c):
        w = normal_word(blocks)
        if not word_is_zero(w):
            out[w] = out.get(w, 0) + c

    for w1, (c1, d1) in xf.items():
        for w2, (c2, d2) in xg.items():
            # generators of one word against the coefficient of the other
            lin = c1 * sum(d2[t] for t, _ in w1) - c2 * sum(d1[t] for t, _ in w2)
            if lin != 0:
                add(w1 + w2, lin)
            for i, e1 in enumerate(w1):
                for j, e2 in enumerate(w2):
                    rest = w1[:i] + w1[i + 1 :] + w2[:j] + w2[j + 1 :]
                    if word_is_zero(normal_word(rest)):
                        continue
                    for k, (n1, n2) in _generator_bracket(table, pt, e1, e2):
                        add(rest + (n1, n2), c1 * c2 * k)
    return out


def random_label_point(seqs, labels: Sequence[int], lat: LatticeParams, rng: np.random.Generator) -> LabelPoint:
    vals = [fundamental(rng, (len(s), n), lat) for s, n in zip(seqs, labels)]
    return LabelPoint(vals, fundamental(rng, (len(seqs) - 1,), lat))


# ---------------------------------------------------------------------------
# Sampling and the pole conditions


def cross_forms(lay: Layout, x: np.ndarray) -> np.ndarray:
    """x_{1,mu,t+1} - x_{p_t,mu',t} - z_{t,t+1} for all adjacent pairs, shape (S, K)."""
    cols = []
    for t in range(lay.h - 1):
        a = lay.blocks(x, t)[:, :, -1]
        b = lay.blocks(x, t + 1)[:, :, 0]
        w = b[:, :, None] - a[:, None, :] - lay.z(x)[:, t, None, None]
        cols.append(w.reshape(len(x), -1))
    return np.concatenate(cols, axis=1) if cols else np.zeros((len(x), 0), dtype=complex)


def same_forms(lay: Layout, x: np.ndarray) -> np.ndarray:
    """Same-coordinate differences between blocks of one factor, shape (S, K)."""
    cols = []
    for t in range(lay.h):
        b = lay.blocks(x, t)
        i, j = np.triu_indices(lay.degrees[t], 1)
        cols.append((b[:, i] - b[:, j]).reshape(len(x), -1))
    return np.concatenate(cols, axis=1) if cols else np.zeros((len(x), 0), dtype=complex)


def tensor_poles(lay: Layout):
    return lambda x: np.concatenate([cross_forms(lay, x), same_forms(lay, x)], axis=1)


def sample_tensor(lay: Layout, lat: LatticeParams, spec: SampleSpec, rng=None) -> np.ndarray:
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    poles = tensor_poles(lay)
    out = fundamental(rng, (spec.count, lay.size), lat)
    for _ in range(1000):
        bad = np.any(lat.reduce_distance(poles(out)) < spec.guard, axis=1) if lay.size else np.zeros(len(out), bool)
        if not bad.any():
            return out
        out[bad] = fundamental(rng, (int(bad.sum()), lay.size), lat)
    raise RuntimeError("could not draw points away from the pole loci")


def cleared(f: TensorElement) -> Callable[[np.ndarray], np.ndarray]:
    """f-hat: f times theta of every cross divisor form."""
    lay = f.layout
    return lambda x: f(x) * np.prod(theta_eval(cross_forms(lay, x), f.lattice), axis=1)


RAY_STEPS = (1e-2, 1e-3, 1e-4, 1e-5)


def _slope(dists, mags) -> float:
    return float(np.polyfit(np.log(dists), np.log(np.maximum(mags, 1e-300)), 1)[0])


def _approach(lay: Layout, x: np.ndarray, col: int, target: np.ndarray, direction: complex, steps) -> list[np.ndarray]:
    out = []
    for dlt in steps:
        y = x.copy()
        y[:, col] = target + dlt * direction
        out.append(y)
    return out


def condition3_check(f: TensorElement, spec: SampleSpec = SampleSpec(count=5), steps=RAY_STEPS, floor: float = -0.1) -> VerifyReport:
    """Pole orders of f-hat along rays into each cross divisor and each same-coordinate diagonal.

    The log-log slope of |f-hat| against the distance is about -k for a pole of
    order k left in f-hat; it must stay above ``floor``.  The reported residual
    is max(0, floor - slope), so the tolerance is zero.
    """
    lay = f.layout
    rng = np.random.default_rng(spec.seed)
    fh = cleared(f)
    slopes, names = [], []
    x0 = sample_tensor(lay, f.lattice, spec, rng)
    direction = np.exp(TWO_PI_I * rng.random())
    probes = []
    for t in range(lay.h - 1):
        for mu, nu in itertools.product(range(lay.degrees[t + 1]), range(lay.degrees[t])):
            col = lay.col(t + 1, mu, 0)
            target = x0[:, lay.col(t, nu, len(lay.seqs[t]) - 1)] + lay.z(x0)[:, t]
            probes.append((f"cross{t}:{mu},{nu}", col, target))
    for t in range(lay.h):
        for i, j in itertools.combinations(range(lay.degrees[t]), 2):
            for m in range(len(lay.seqs[t])):
                probes.append((f"diag{t}:{i},{j},{m}", lay.col(t, j, m), x0[:, lay.col(t, i, m)]))
    for name, col, target in probes:
        mags = np.array([np.abs(fh(y)) for y in _approach(lay, x0, col, target, direction, steps)])  # (steps, S)
        sl = min(_slope(np.array(steps), mags[:, k]) for k in range(mags.shape[1]))
        slopes.append(sl)
        names.append(name)
    res = [max(0.0, floor - s) for s in slopes] or [0.0]
    rep = VerifyReport.from_residuals("condition3", res, 0.0, spec.seed)
    rep.details.update({f"slope/{n}": s for n, s in zip(names, slopes)})
    return rep


def condition4_check(f: TensorElement, spec: SampleSpec = SampleSpec(count=5), tol: float = 1e-8, radius: float = 1e-2, nodes: int = 12) -> VerifyReport:
    """f-hat on the codimension-two loci where two cross divisors meet at a shared block.

    The two coordinates that are pinned to the locus are moved on a torus of
    circles around it and f-hat is averaged there; for holomorphic f-hat the
    average is its value on the locus, and no sample touches a divisor.  The
    second circle is rotated by half a node so the torus also misses the
    diagonal between the two coordinates.  Residuals are relative to the
    largest |f-hat| on the torus.
    """
    lay = f.layout
    rng = np.random.default_rng(spec.seed)
    fh = cleared(f)
    x0 = sample_tensor(lay, f.lattice, spec, rng)
    ang = TWO_PI_I * np.arange(nodes) / nodes
    c1 = radius * np.exp(ang)
    c2 = radius * np.exp(ang + np.pi * 1j / nodes)
    d1, d2 = (a.ravel() for a in np.meshgrid(c1, c2, indexing="ij"))
    res = []
    for t in range(lay.h - 1):
        p_t = len(lay.seqs[t])
        z = lay.z(x0)[:, t]
        a_t, a_n = lay.degrees[t], lay.degrees[t + 1]
        loci = []
        # two blocks of factor t+1 meet one block of factor t
        for m1, m2 in itertools.combinations(range(a_n), 2):
            for nu in range(a_t):
                loci.append(([lay.col(t + 1, m1, 0), lay.col(t + 1, m2, 0)], x0[:, lay.col(t, nu, p_t - 1)] + z))
        # one block of factor t+1 meets two blocks of factor t
        for mu in range(a_n):
            for n1, n2 in itertools.combinations(range(a_t), 2):
                w = x0[:, lay.col(t + 1, mu, 0)] - z
                loci.append(([lay.col(t, n1, p_t - 1), lay.col(t, n2, p_t - 1)], w))
        for cols, target in loci:
            y = np.repeat(x0[:, None], len(d1), axis=1)
            y[:, :, cols[0]] = target[:, None] + d1
            y[:, :, cols[1]] = target[:, None] + d2
            vals = fh(y.reshape(-1, lay.size)).reshape(len(x0), len(d1))
            res.append(np.abs(vals.mean(axis=1)) / np.maximum(np.abs(vals).max(axis=1), 1e-300))
    if not res:
        return VerifyReport.from_residuals("condition4", [0.0], tol, spec.seed, details={"vacuous": 1.0})
    return VerifyReport.from_residuals("condition4", np.concatenate(res), tol, spec.seed)


def tensor_membership_check(f: TensorElement, spec: SampleSpec = SampleSpec(), tol: float = 1e-8) -> VerifyReport:
    """Block symmetry within each factor, +1 periodicity and the eta law in every coordinate."""
    lay = f.layout
    x = sample_tensor(lay, f.lattice, spec)
    base = f(x)
    eta = f.lattice.eta
    sym, per, qp = [], [], []
    for t in range(lay.h):
        p = len(lay.seqs[t])
        for perm in itertools.permutations(range(lay.degrees[t])):
            y = x.copy()
            y[:, lay.offsets[t] : lay.offsets[t + 1]] = lay.blocks(x, t)[:, list(perm)].reshape(len(x), -1)
            sym.append(residual(f(y), base))
        for lam, mu in itertools.product(range(lay.degrees[t]), range(p)):
            c = lay.col(t, lam, mu)
            y = x.copy()
            y[:, c] += 1
            per.append(residual(f(y), base))
            expo = lay.seqs[t][mu] * x[:, c]
            if mu > 0:
                expo = expo - x[:, c - 1]
            if mu < p - 1:
                expo = expo - x[:, c + 1]
            y = x.copy()
            y[:, c] += eta
            qp.append(residual(f(y) * np.exp(TWO_PI_I * expo), base))
    parts = [
        VerifyReport.from_residuals("symmetry", np.concatenate(sym), tol),
        VerifyReport.from_residuals("periodicity", np.concatenate(per) if per else [0.0], tol),
        VerifyReport.from_residuals("quasi-periodicity", np.concatenate(qp) if qp else [0.0], tol),
    ]
    return merge("tensor-membership", parts, spec.seed)
