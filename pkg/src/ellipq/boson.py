"""Bosonized algebras: generators e with function coefficients, exchange rules, normal ordering.

Three relation families share one engine:

* ``scalar``: generators e_a (a site index) over variables z_a, scalar exchange rule;
* ``single``: generators e_{a_1..a_p} of one factor with integer shift constants and
  exchange coefficients in n tau (n = d(seq));
* ``multi``: several factors, shift constants given as d-ratios, exchange
  coefficients in tau, and a cross-factor rule between neighbouring factors.

A generator is ``(factor, (a_1, ..., a_p))`` with 0-based indices.  Variables are
``("y", row, site, factor)`` and ``("z", s)`` for the coupling of factors s, s+1.
Every coefficient is kept as a sum of products of factors whose arguments are
linear forms with an exact rational multiple of tau, so moving a coefficient
past a generator is an exact substitution.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ellipq.report import VerifyReport, fundamental, merge, residual
from ellipq.seqcomb import d
from ellipq.theta import TWO_PI_I, LatticeParams, ThetaElement, theta_eval

Label = tuple
Gen = tuple[int, tuple[int, ...]]
Word = tuple[Gen, ...]

MAX_REWRITES = 10**6


# ---------------------------------------------------------------------------
# Coefficient expressions


@dataclass(frozen=True)
class Lin:
    """sum c_v v + tau_coeff * tau + const."""

    coeffs: tuple[tuple[Label, int], ...] = ()
    tau: Fraction = Fraction(0)
    const: Fraction = Fraction(0)

    @staticmethod
    def var(label: Label) -> "Lin":
        return Lin(((label, 1),))

    @staticmethod
    def of(terms: dict, tau=0, const=0) -> "Lin":
        clean = tuple(sorted((k, v) for k, v in terms.items() if v))
        return Lin(clean, Fraction(tau), Fraction(const))

    def __add__(self, other: "Lin") -> "Lin":
        acc = dict(self.coeffs)
        for k, v in other.coeffs:
            acc[k] = acc.get(k, 0) + v
        return Lin.of(acc, self.tau + other.tau, self.const + other.const)

    def __neg__(self) -> "Lin":
        return Lin(tuple((k, -v) for k, v in self.coeffs), -self.tau, -self.const)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + (-other)

    def plus_tau(self, c) -> "Lin":
        return Lin(self.coeffs, self.tau + Fraction(c), self.const)

    def shifted(self, shifts: dict[Label, Fraction]) -> "Lin":
        extra = sum((v * shifts.get(k, 0) for k, v in self.coeffs), Fraction(0))
        return Lin(self.coeffs, self.tau + extra, self.const) if extra else self

    def labels(self) -> set:
        return {k for k, _ in self.coeffs}

    def evaluate(self, vals: dict, tau: complex) -> np.ndarray:
        out = complex(self.const) + complex(self.tau) * tau
        for k, v in self.coeffs:
            out = out + v * vals[k]
        return out


@dataclass(frozen=True)
class Factor:
    """theta(arg)^power, exp(2 pi i arg), or fn(args)."""

    kind: str
    args: tuple[Lin, ...]
    power: int = 1
    fn: Callable | None = field(default=None, compare=False, hash=False)
    key: str = ""

    def shifted(self, shifts) -> "Factor":
        return Factor(self.kind, tuple(a.shifted(shifts) for a in self.args), self.power, self.fn, self.key)


def theta_factor(arg: Lin, power: int = 1) -> Factor:
    return Factor("theta", (arg,), power)


def exp_factor(arg: Lin) -> Factor:
    return Factor("exp", (arg,))


def func_factor(fn: Callable, args: Sequence[Lin], key: str = "") -> Factor:
    """fn receives an array of shape (S, len(args))."""
    return Factor("func", tuple(args), 1, fn, key or f"f{id(fn)}")


@dataclass(frozen=True)
class Term:
    scalar: complex
    factors: tuple[Factor, ...] = ()

    def __mul__(self, other: "Term") -> "Term":
        return Term(self.scalar * other.scalar, self.factors + other.factors)

    def shifted(self, shifts) -> "Term":
        return Term(self.scalar, tuple(f.shifted(shifts) for f in self.factors))


@dataclass(frozen=True)
class CoeffExpr:
    """A sum of products of factors."""

    terms: tuple[Term, ...] = ()

    @staticmethod
    def const(c: complex) -> "CoeffExpr":
        return CoeffExpr((Term(complex(c)),))

    @staticmethod
    def product(factors: Iterable[Factor], scalar: complex = 1.0) -> "CoeffExpr":
        return CoeffExpr((Term(complex(scalar), tuple(factors)),))

    def __add__(self, other: "CoeffExpr") -> "CoeffExpr":
        return CoeffExpr(self.terms + other.terms)

    def __mul__(self, other) -> "CoeffExpr":
        if not isinstance(other, CoeffExpr):
            return CoeffExpr(tuple(Term(t.scalar * other, t.factors) for t in self.terms))
        return CoeffExpr(tuple(a * b for a in self.terms for b in other.terms))

    __rmul__ = __mul__

    def __neg__(self) -> "CoeffExpr":
        return self * -1

    def shifted(self, shifts: dict[Label, Fraction]) -> "CoeffExpr":
        if not shifts:
            return self
        return CoeffExpr(tuple(t.shifted(shifts) for t in self.terms))

    def labels(self) -> set:
        return {lab for t in self.terms for f in t.factors for a in f.args for lab in a.labels()}

    def evaluate(self, vals: dict, tau: complex, lat: LatticeParams, cache: dict | None = None) -> np.ndarray:
        cache = {} if cache is None else cache
        total = 0.0
        for t in self.terms:
            acc = t.scalar
            for f in t.factors:
                acc = acc * _factor_value(f, vals, tau, lat, cache)
            total = total + acc
        return total


def _factor_value(f: Factor, vals, tau, lat, cache):
    ck = (f.kind, f.key, f.args)
    if ck not in cache:
        if f.kind == "theta":
            cache[ck] = theta_eval(f.args[0].evaluate(vals, tau), lat)
        elif f.kind == "exp":
            cache[ck] = np.exp(TWO_PI_I * f.args[0].evaluate(vals, tau))
        else:
            a = np.stack([np.broadcast_to(x.evaluate(vals, tau), _shape(vals)) for x in f.args], axis=-1)
            cache[ck] = f.fn(a)
    v = cache[ck]
    return v**f.power if f.power != 1 else v


def _shape(vals) -> tuple:
    for v in vals.values():
        return np.shape(v)
    return ()


# ---------------------------------------------------------------------------
# Configurations and shift tables


MODES = ("scalar", "single", "multi")


@dataclass(frozen=True)
class SiteConfig:
    """factors: one (seq, sites) per tensor factor; sites[row] is the number of site values.

    ``skew_coupling`` adds shifts of z_{g+1,g+2} by -tau/d(seq_{g+1}) and of
    z_{g-2,g-1} by tau/d(seq_{g-1}) when moving past a generator of factor g.
    Without them reordering three consecutive factors depends on the path.
    """

    factors: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    tau: complex
    lattice: LatticeParams
    mode: str = "multi"
    skew_coupling: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        fs = tuple((tuple(int(n) for n in s), tuple(int(m) for m in sites)) for s, sites in self.factors)
        object.__setattr__(self, "factors", fs)
        for seq, sites in fs:
            if not seq or min(seq) < 2:
                raise ValueError("sequence entries must be >= 2")
            if len(sites) != len(seq) or min(sites) < 1:
                raise ValueError("need one site count >= 1 per coordinate")
        if self.mode != "multi" and len(fs) != 1:
            raise ValueError(f"mode {self.mode!r} has a single factor")
        if self.mode == "scalar" and len(fs[0][0]) != 1:
            raise ValueError("scalar mode has one coordinate")

    @classmethod
    def scalar(cls, n: int, sites: int, tau: complex, lat: LatticeParams) -> "SiteConfig":
        return cls((((n,), (sites,)),), tau, lat, "scalar")

    @classmethod
    def single(cls, seq: Sequence[int], sites: Sequence[int], tau: complex, lat: LatticeParams) -> "SiteConfig":
        return cls(((tuple(seq), tuple(sites)),), tau, lat, "single")

    def with_tau(self, tau: complex) -> "SiteConfig":
        return SiteConfig(self.factors, tau, self.lattice, self.mode, self.skew_coupling)

    @property
    def h(self) -> int:
        return len(self.factors)

    def seq(self, g: int) -> tuple[int, ...]:
        return self.factors[g][0]

    def generators(self, g: int) -> list[Gen]:
        return [(g, idx) for idx in itertools.product(*(range(m) for m in self.factors[g][1]))]

    def variables(self) -> list[Label]:
        out = [("y", lam, mu, g) for g, (seq, sites) in enumerate(self.factors) for lam in range(len(seq)) for mu in range(sites[lam])]
        return out + [("z", s) for s in range(self.h - 1)]

    def y(self, lam: int, mu: int, g: int) -> Lin:
        return Lin.var(("y", lam, mu, g))

    def z(self, s: int) -> Lin:
        return Lin.var(("z", s))

    def step(self) -> int:
        """The multiple of tau inside exchange coefficients."""
        return d(self.seq(0)) if self.mode in ("scalar", "single") else 1


def _dsplit(seq, lam) -> tuple[int, int, int]:
    return d(seq[:lam]), d(seq[lam + 1 :]), d(seq)


def shift_table(gen: Gen, cfg: SiteConfig) -> dict[Label, Fraction]:
    """Exact shifts (in units of tau) of every variable moved left past ``gen``: e phi(v) = phi(v + s tau) e."""
    g, idx = gen
    out: dict[Label, Fraction] = {}
    if cfg.mode in ("scalar", "single"):
        seq, sites = cfg.factors[0]
        for lam in range(len(seq)):
            left, right, full = _dsplit(seq, lam)
            for mu in range(sites[lam]):
                if cfg.mode == "scalar":
                    s = full - 2 if mu == idx[lam] else -2
                else:
                    s = full - left - right if mu == idx[lam] else -(left + right)
                out[("y", lam, mu, 0)] = Fraction(s)
        return out
    for g2, (seq, sites) in enumerate(cfg.factors):
        full = d(seq)
        for lam in range(len(seq)):
            left, right, _ = _dsplit(seq, lam)
            for mu in range(sites[lam]):
                if g2 == g:
                    s = Fraction(-(left + right), full) + (1 if mu == idx[lam] else 0)
                elif g2 == g + 1:
                    s = Fraction(right, full)
                elif g2 == g - 1:
                    s = Fraction(left, full)
                else:
                    s = Fraction(0)
                out[("y", lam, mu, g2)] = s
    for s in range(cfg.h - 1):
        lseq, rseq = cfg.seq(s), cfg.seq(s + 1)
        if g == s:
            v = Fraction(d(rseq[1:]), d(rseq)) + Fraction(d(lseq[:-1]) + 1, d(lseq))
        elif g == s + 1:
            v = -(Fraction(d(rseq[1:]) + 1, d(rseq)) + Fraction(d(lseq[:-1]), d(lseq)))
        elif cfg.skew_coupling and g == s - 1:
            v = -Fraction(1, d(lseq))
        elif cfg.skew_coupling and g == s + 2:
            v = Fraction(1, d(rseq))
        else:
            v = Fraction(0)
        out[("z", s)] = v
    return out


def _check_labels(expr: CoeffExpr, cfg: SiteConfig):
    known = set(cfg.variables())
    bad = expr.labels() - known
    if bad:
        raise KeyError(f"undeclared variables {sorted(bad)}")


def shift_past(gen: Gen, expr: CoeffExpr, cfg: SiteConfig) -> CoeffExpr:
    """The coefficient E' with gen * E = E' * gen."""
    _check_labels(expr, cfg)
    return expr.shifted(_nonzero(shift_table(gen, cfg)))


def _nonzero(tab: dict) -> dict:
    return {k: v for k, v in tab.items() if v}


# ---------------------------------------------------------------------------
# Exchange rules


def _runs(a: tuple[int, ...], b: tuple[int, ...]) -> list[tuple[int, int]]:
    """Maximal runs [i, j] of positions where a and b differ."""
    out, start = [], None
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y and start is None:
            start = i
        if x == y and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(a) - 1))
    return out


def _swap(a, b, lo, hi):
    a2 = a[:lo] + b[lo : hi + 1] + a[hi + 1 :]
    b2 = b[:lo] + a[lo : hi + 1] + b[hi + 1 :]
    return a2, b2


def _pick_run(a, b, lo: int | None) -> tuple[int, int]:
    """The run starting at ``lo``; by default the first run out of order, else the first run."""
    runs = _runs(a, b)
    if lo is None:
        bad = [r for r in runs if a[r[0]] > b[r[0]]]
        return (bad or runs)[0]
    for r in runs:
        if r[0] == lo:
            return r
    raise ValueError(f"no run of differing indices starts at position {lo}")


def out_of_order(ga: Gen, gb: Gen) -> bool:
    """Whether the pair is rewritten by normal ordering.

    Generators of different factors are ordered by factor.  Within a factor
    every run of differing indices must start with the smaller index on the
    left; for one- and two-row factors this is lexicographic order.
    """
    if ga[0] != gb[0]:
        return ga[0] > gb[0]
    a, b = ga[1], gb[1]
    return any(a[lo] > b[lo] for lo, _ in _runs(a, b))


def same_factor_terms(ga: Gen, gb: Gen, cfg: SiteConfig, lo: int | None = None) -> list[tuple[CoeffExpr, Gen, Gen]]:
    """Right side of e_a e_b for generators of one factor, a != b.

    One run of differing positions (the one starting at ``lo``, see _pick_run)
    is exchanged; positions outside it stay with their word.  Boundary factors
    use the first and last rows of the run.
    """
    g, a = ga
    _, b = gb
    if a == b:
        raise ValueError("equal generators need no exchange")
    lo, hi = _pick_run(a, b, lo)
    if cfg.mode == "scalar":
        za, zb = cfg.y(0, a[0], 0), cfg.y(0, b[0], 0)
        n = cfg.step()
        c = CoeffExpr.product(
            [exp_factor(zb - za), theta_factor((za - zb).plus_tau(-n)), theta_factor((zb - za).plus_tau(-n), -1)],
            -1.0,
        )
        return [(c, (g, b), (g, a))]
    s = cfg.step()
    diff = [cfg.y(r, b[r], g) - cfg.y(r, a[r], g) for r in range(len(a))]
    first, last = diff[lo], diff[hi]
    lead = [exp_factor(Lin(tau=Fraction(-s))), theta_factor(first), theta_factor(first.plus_tau(-s), -1)]
    main = CoeffExpr.product(lead + [theta_factor(last.plus_tau(s)), theta_factor(last, -1)])
    a2, b2 = _swap(a, b, lo, hi)
    out = [(main, (g, a2), (g, b2))]
    for t in range(lo, hi):
        coef = CoeffExpr.product(
            lead
            + [
                theta_factor(Lin(tau=Fraction(s))),
                theta_factor(diff[t] + diff[t + 1]),
                theta_factor(diff[t], -1),
                theta_factor(diff[t + 1], -1),
            ]
        )
        m1, m2 = _swap(a, b, lo, t)
        out.append((coef, (g, m1), (g, m2)))
    return out


def cross_factor_coefficient(lower: Gen, upper: Gen, cfg: SiteConfig) -> CoeffExpr:
    """K with e^(g)_A e^(g+1)_B = K e^(g+1)_B e^(g)_A."""
    g, a = lower
    _, b = upper
    w = cfg.y(len(a) - 1, a[-1], g) - cfg.y(0, b[0], g + 1) + cfg.z(g)
    return CoeffExpr.product([exp_factor(-w), theta_factor(w.plus_tau(Fraction(1, 2))), theta_factor((-w).plus_tau(Fraction(1, 2)), -1)], -1.0)


def exchange_terms(ga: Gen, gb: Gen, cfg: SiteConfig, lo: int | None = None) -> list[tuple[CoeffExpr, Gen, Gen]]:
    """The relation e_a e_b = sum_k c_k e_{a_k} e_{b_k} for any pair of distinct generators."""
    if ga[0] == gb[0]:
        return same_factor_terms(ga, gb, cfg, lo)
    if abs(ga[0] - gb[0]) > 1:
        return [(CoeffExpr.const(1.0), gb, ga)]
    if ga[0] < gb[0]:
        return [(cross_factor_coefficient(ga, gb, cfg), gb, ga)]
    k = cross_factor_coefficient(gb, ga, cfg)
    (t,) = k.terms
    inv = Term(1 / t.scalar, tuple(Factor(f.kind, f.args, -f.power) if f.kind == "theta" else Factor(f.kind, (-f.args[0],)) for f in t.factors))
    return [(CoeffExpr((inv,)), gb, ga)]


@dataclass(frozen=True)
class NCMonomial:
    coeff: CoeffExpr
    word: Word


NCSum = dict  # Word -> CoeffExpr


def _prefix_shift(word: Word, cfg: SiteConfig) -> dict[Label, Fraction]:
    acc: dict[Label, Fraction] = defaultdict(Fraction)
    for gen in word:
        for k, v in shift_table(gen, cfg).items():
            acc[k] += v
    return _nonzero(acc)


def exchange(m: NCMonomial, pos: int, cfg: SiteConfig, lo: int | None = None) -> list[NCMonomial]:
    """Rewrite the generator pair at pos, pos + 1 by its relation (``lo`` picks the run, see _pick_run)."""
    w = m.word
    if not 0 <= pos < len(w) - 1:
        raise IndexError("no adjacent pair at this position")
    if w[pos] == w[pos + 1]:
        raise ValueError("equal generators need no exchange")
    pre = _prefix_shift(w[:pos], cfg)
    out = []
    for c, a, b in exchange_terms(w[pos], w[pos + 1], cfg, lo):
        out.append(NCMonomial(m.coeff * c.shifted(pre), w[:pos] + (a, b) + w[pos + 2 :]))
    return out


def _reducible(word: Word) -> list[int]:
    return [i for i in range(len(word) - 1) if out_of_order(word[i], word[i + 1])]


class RewriteLimitError(RuntimeError):
    pass


def normal_order(monomials: Iterable[NCMonomial] | NCSum, cfg: SiteConfig, strategy: str = "left", max_rewrites: int = MAX_REWRITES) -> NCSum:
    """Rewrite every word until no adjacent pair is out of order (see out_of_order).

    Each rewrite lowers the per-row inversion counts of the word in
    lexicographic order of rows, so the process terminates.
    """
    if strategy not in ("left", "right"):
        raise ValueError("strategy must be 'left' or 'right'")
    if isinstance(monomials, dict):
        monomials = [NCMonomial(c, w) for w, c in monomials.items()]
    todo = list(monomials)
    done: dict[Word, CoeffExpr] = {}
    count = 0
    while todo:
        m = todo.pop()
        red = _reducible(m.word)
        if not red:
            done[m.word] = done[m.word] + m.coeff if m.word in done else m.coeff
            continue
        count += 1
        if count > max_rewrites:
            raise RewriteLimitError(f"more than {max_rewrites} rewrites; stuck on {m.word}")
        todo.extend(exchange(m, red[0] if strategy == "left" else red[-1], cfg))
    return done


def multiply(x: NCSum, y: NCSum, cfg: SiteConfig) -> NCSum:
    out: dict[Word, CoeffExpr] = {}
    for w1, c1 in x.items():
        pre = _prefix_shift(w1, cfg)
        for w2, c2 in y.items():
            w = w1 + w2
            c = c1 * c2.shifted(pre)
            out[w] = out[w] + c if w in out else c
    return out


def combine(*parts: tuple[complex, NCSum]) -> NCSum:
    out: dict[Word, CoeffExpr] = {}
    for s, x in parts:
        for w, c in x.items():
            out[w] = out[w] + c * s if w in out else c * s
    return out


def evaluate(x: NCSum, vals: dict, cfg: SiteConfig) -> dict[Word, np.ndarray]:
    cache: dict = {}
    return {w: c.evaluate(vals, cfg.tau, cfg.lattice, cache) for w, c in x.items()}


def random_values(cfg: SiteConfig, count: int, rng: np.random.Generator) -> dict[Label, np.ndarray]:
    return {lab: fundamental(rng, (count,), cfg.lattice) for lab in cfg.variables()}


def compare(x: dict, y: dict) -> np.ndarray:
    """Coefficientwise residuals of two evaluated sums (missing words count as zero)."""
    res = [np.zeros(1)]
    for w in set(x) | set(y):
        a, b = x.get(w, 0), y.get(w, 0)
        res.append(np.atleast_1d(residual(a, b)))
    return np.concatenate(res)


# ---------------------------------------------------------------------------
# Embeddings


def x_embed(f: ThetaElement, factor: int, cfg: SiteConfig, check_tag: bool = True) -> NCSum:
    """sum over site tuples of f(y at those sites) e_(tuple)."""
    seq = cfg.seq(factor)
    if check_tag:
        if cfg.mode == "scalar":
            want_m, want_c = seq[0], -seq[0] * cfg.tau
            if f.tag.n_vec is not None or f.tag.m != want_m or abs(f.tag.c - want_c) > 1e-12:
                raise ValueError(f"scalar embedding needs Theta_{{{want_m}, {want_c}}}")
        elif f.tag.n_vec is None or tuple(f.tag.n_vec) != seq:
            if not (len(seq) == 1 and f.tag.n_vec is None and f.tag.m == seq[0]):
                raise ValueError(f"element tag does not match factor sequence {seq}")
    out = {}
    for gen in cfg.generators(factor):
        args = [cfg.y(lam, mu, factor) for lam, mu in enumerate(gen[1])]
        out[(gen,)] = CoeffExpr.product([func_factor(f, args, key=f"f{id(f)}")])
    return out


def extend_sorted(hfn: Callable[[np.ndarray], np.ndarray], m: int, cfg: SiteConfig, key: str = "") -> NCSum:
    """Image of a grade-m element of the scalar algebra, written on sorted words.

    The coefficient of e_{a_1}...e_{a_m} (a_1 <= ... <= a_m) is
    h(u) prod_{i<j} theta(u_i - u_j) / theta(u_i - u_j - n tau), where
    u_j = z_{a_j} + (number of earlier equal indices) n tau.
    ``hfn`` takes arrays of shape (S, m).
    """
    if cfg.mode != "scalar":
        raise ValueError("the sorted extension is defined for the scalar algebra")
    n = cfg.step()
    out = {}
    for idx in itertools.combinations_with_replacement(range(cfg.factors[0][1][0]), m):
        u = [cfg.y(0, a, 0).plus_tau(n * idx[:j].count(a)) for j, a in enumerate(idx)]
        facs = [func_factor(hfn, u, key=key or f"h{id(hfn)}")]
        for i, j in itertools.combinations(range(m), 2):
            facs += [theta_factor(u[i] - u[j]), theta_factor((u[i] - u[j]).plus_tau(-n), -1)]
        out[tuple((0, (a,)) for a in idx)] = CoeffExpr.product(facs)
    return out


def extend_shifted(hfn: Callable[[np.ndarray], np.ndarray], m: int, cfg: SiteConfig, key: str = "") -> NCSum:
    """sum over all index tuples of h(z_{a_1}, z_{a_2} - 2 tau, ..., z_{a_m} - 2(m-1) tau) e_{a_1}...e_{a_m}."""
    if cfg.mode != "scalar":
        raise ValueError("the shifted extension is defined for the scalar algebra")
    out = {}
    for idx in itertools.product(range(cfg.factors[0][1][0]), repeat=m):
        u = [cfg.y(0, a, 0).plus_tau(-2 * j) for j, a in enumerate(idx)]
        out[tuple((0, (a,)) for a in idx)] = CoeffExpr.product([func_factor(hfn, u, key=key or f"h{id(hfn)}")])
    return out


# ---------------------------------------------------------------------------
# tau = 0 and the rational parametrization


def degenerate_relation(ga: Gen, gb: Gen, lo: int | None = None) -> tuple[Gen, Gen]:
    """At tau = 0 the chosen run is exchanged with coefficient one."""
    (g, a), (_, b) = ga, gb
    lo, hi = _pick_run(a, b, lo)
    a2, b2 = _swap(a, b, lo, hi)
    return (g, a2), (g, b2)


def rational_point(word_values: dict, idx: tuple[int, ...]):
    """e_{a_1..a_p} = prod_t E^{(t,t+1)}_{a_t, a_{t+1}} for independent values E."""
    out = 1.0
    for t in range(len(idx) - 1):
        out = out * word_values[(t, idx[t], idx[t + 1])]
    return out


def degenerate_check(cfg: SiteConfig, count: int = 10, seed: int = 0, tol: float = 1e-12) -> VerifyReport:
    """At tau = 0 every same-factor exchange is the run swap with coefficient one,
    and the rational parametrization satisfies the swapped relations."""
    c0 = cfg.with_tau(0)
    rng = np.random.default_rng(seed)
    vals = random_values(c0, count, rng)
    coef, param = [], []
    for g in range(c0.h):
        gens = c0.generators(g)
        sites = c0.factors[g][1]
        ev = {
            (t, a, b): rng.normal(size=count) + 1j * rng.normal(size=count)
            for t in range(len(sites) - 1)
            for a in range(sites[t])
            for b in range(sites[t + 1])
        }
        for ga, gb in itertools.permutations(gens, 2):
            for lo, _ in _runs(ga[1], gb[1]):
                want = degenerate_relation(ga, gb, lo)
                got: dict = {}
                for c, a, b in exchange_terms(ga, gb, c0, lo):
                    got[(a, b)] = got.get((a, b), 0) + c.evaluate(vals, 0, c0.lattice)
                if want not in got:
                    coef.append(np.ones(1))
                    continue
                coef += [residual(got.pop(want), 1.0)] + [residual(v, 0) for v in got.values()]
                lhs = rational_point(ev, ga[1]) * rational_point(ev, gb[1])
                rhs = rational_point(ev, want[0][1]) * rational_point(ev, want[1][1])
                param.append(np.atleast_1d(residual(lhs, rhs)))
    parts = [VerifyReport.from_residuals("degenerate-relations", np.concatenate(coef or [np.zeros(1)]), tol, seed)]
    parts.append(VerifyReport.from_residuals("rational-parametrization", np.concatenate(param or [np.zeros(1)]), tol, seed))
    return merge("tau-zero", parts, seed)


def double_exchange_check(cfg: SiteConfig, count: int = 5, seed: int = 0, tol: float = 1e-10) -> VerifyReport:
    """Exchanging an ordered pair of distinct generators twice, by the relation
    of the same run, gives back the pair; every pair and every run is tried."""
    rng = np.random.default_rng(seed)
    vals = random_values(cfg, count, rng)
    gens = [g for k in range(cfg.h) for g in cfg.generators(k)]
    res = []
    for ga, gb in itertools.permutations(gens, 2):
        starts = [lo for lo, _ in _runs(ga[1], gb[1])] if ga[0] == gb[0] else [None]
        for lo in starts:
            back: dict = {}
            for t in exchange(NCMonomial(CoeffExpr.const(1.0), (ga, gb)), 0, cfg, lo):
                step = [t] if t.word[0] == t.word[1] else exchange(t, 0, cfg, lo)
                for u in step:
                    back[u.word] = back[u.word] + u.coeff if u.word in back else u.coeff
            res.append(compare(evaluate(back, vals, cfg), {(ga, gb): np.ones(count)}))
    return VerifyReport.from_residuals(f"double-exchange[{cfg.mode}]", np.concatenate(res), tol, seed)


def random_words(cfg: SiteConfig, n: int, rng: np.random.Generator, max_len: int = 4) -> list[Word]:
    gens = [g for k in range(cfg.h) for g in cfg.generators(k)]
    out = []
    for _ in range(n):
        length = int(rng.integers(2, max_len + 1))
        out.append(tuple(gens[i] for i in rng.integers(0, len(gens), length)))
    return out


def confluence_check(cfg: SiteConfig, words: int = 50, count: int = 5, seed: int = 0, tol: float = 1e-9) -> VerifyReport:
    """Leftmost-first and rightmost-first normal ordering of random words agree."""
    rng = np.random.default_rng(seed)
    vals = random_values(cfg, count, rng)
    res = []
    worst, worst_word = -1.0, None
    for w in random_words(cfg, words, rng):
        m = [NCMonomial(CoeffExpr.const(1.0), w)]
        r = compare(evaluate(normal_order(m, cfg, "left"), vals, cfg), evaluate(normal_order(m, cfg, "right"), vals, cfg))
        res.append(r)
        if r.max() > worst:
            worst, worst_word = float(r.max()), w
    rep = VerifyReport.from_residuals(f"confluence[{cfg.mode}:h={cfg.h}]", np.concatenate(res), tol, seed)
    rep.details["words"] = float(words)
    if not rep.passed:
        rep.details["worst_word"] = str(worst_word)
    return rep


def degenerate_class(word: Word) -> tuple:
    """Label of the tau = 0 monomial of a word under the rational parametrization.

    Per factor: the sorted list of (row, a_row, a_row+1) edges of its generators
    (the sorted indices for one-row factors).  Two words are equal at tau = 0
    exactly when their labels agree.
    """
    out = []
    for g in sorted({gen[0] for gen in word}):
        idx = [a for k, a in word if k == g]
        if len(idx[0]) == 1:
            out.append((g, tuple(sorted(idx))))
        else:
            out.append((g, tuple(sorted((t, a[t], a[t + 1]) for a in idx for t in range(len(a) - 1)))))
    return tuple(out)


def relation_rank(cfg: SiteConfig, degree: int, count: int = 1, seed: int = 0) -> tuple[int, int, np.ndarray]:
    """Numerical rank of all degree-``degree`` consequences u (e_a e_b - rhs) v of the relations.

    Returns (number of words, expected rank, singular values).  The expected
    rank is words minus tau = 0 classes: the relations cut the free algebra
    down to a flat deformation of the tau = 0 algebra exactly when the
    measured rank equals it.
    """
    gens = [g for k in range(cfg.h) for g in cfg.generators(k)]
    words = list(itertools.product(gens, repeat=degree))
    col = {w: i for i, w in enumerate(words)}
    classes = len({degenerate_class(w) for w in words})
    rng = np.random.default_rng(seed)
    vals = random_values(cfg, count, rng)
    rows = []
    for i in range(degree - 1):
        for w in words:
            a, b = w[i], w[i + 1]
            if a == b:
                continue
            starts = [lo for lo, _ in _runs(a[1], b[1])] if a[0] == b[0] else [None]
            for lo in starts:
                row = np.zeros((len(words), count), dtype=complex)
                row[col[w]] = 1.0
                for m in exchange(NCMonomial(CoeffExpr.const(1.0), w), i, cfg, lo):
                    row[col[m.word]] -= m.coeff.evaluate(vals, cfg.tau, cfg.lattice)
                rows.append(row)
    mat = np.stack(rows)  # (relations, words, points)
    mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
    sv = np.linalg.svd(np.moveaxis(mat, 2, 0), compute_uv=False)  # (points, min)
    return len(words), len(words) - classes, sv


def flatness_check(cfg: SiteConfig, degree: int = 3, count: int = 1, seed: int = 0, gap: float = 1e-8) -> VerifyReport:
    """The relations have exactly the rank of their tau = 0 limit in the given degree.

    Residual: the largest singular value beyond the expected rank relative to
    the smallest one within it (zero when no extra relation appears).  A
    rank deficit is reported as residual 1.
    """
    n, want, sv = relation_rank(cfg, degree, count, seed)
    res = []
    for s in sv:
        if want > len(s) or s[want - 1] <= gap * s[0]:
            res.append(1.0)
        else:
            extra = s[want] if want < len(s) else 0.0
            res.append(extra / s[want - 1])
    rep = VerifyReport.from_residuals(f"flatness[{cfg.mode}:h={cfg.h},deg={degree}]", res, gap, seed)
    rep.details.update({"words": float(n), "expected_rank": float(want), "measured_rank": float(np.sum(sv[0] > gap * sv[0][0]))})
    return rep


def homomorphism_check(n: int, sites: int, tau: complex, lat: LatticeParams, degree: int = 2, count: int = 5, seed: int = 0, tol: float = 1e-8, rule: str = "sorted") -> VerifyReport:
    """normal_order(x(f_1)...x(f_m)) against the extension of f_1 * ... * f_m.

    ``rule`` picks the extension of x to higher grades: "sorted" (see
    extend_sorted) or "shifted" (extend_shifted).
    """
    from ellipq.graded import lift, star_product
    from ellipq.theta import linear_combination, theta_basis

    ext = {"sorted": extend_sorted, "shifted": extend_shifted}[rule]
    cfg = SiteConfig.scalar(n, sites, tau, lat)
    rng = np.random.default_rng(seed)
    basis = theta_basis(n, -n * tau, lat)
    fs = [linear_combination(basis, rng.normal(size=n) + 1j * rng.normal(size=n), f"f{i}") for i in range(degree)]
    words = x_embed(fs[0], 0, cfg)
    star = lift(fs[0], -n * tau)
    for f in fs[1:]:
        words = normal_order(multiply(words, x_embed(f, 0, cfg), cfg), cfg)
        star = star_product(star, lift(f, -n * tau), tau)
    image = normal_order(ext(lambda a: star(a[:, :, None]), degree, cfg), cfg)
    vals = random_values(cfg, count, rng)
    res = compare(evaluate(words, vals, cfg), evaluate(image, vals, cfg))
    return VerifyReport.from_residuals(f"homomorphism[n={n},m={degree},{rule}]", res, tol, seed)


# ---------------------------------------------------------------------------
# Semiclassical comparisons


def semiclassical_shift_check(cfg: SiteConfig) -> VerifyReport:
    """Exact comparison of the multi-factor shift constants with the generator bracket table.

    Same-factor matching sites are compared after removing their offset of one;
    the offset itself is recorded.  For a one-factor configuration the
    single-factor table is also compared and its ratio to the multi-factor table
    (expected d(seq) everywhere) is reported.
    """
    from ellipq.tensor import GeneratorBracketTable

    multi = SiteConfig(cfg.factors, cfg.tau, cfg.lattice, "multi", cfg.skew_coupling)
    table = GeneratorBracketTable([s for s, _ in multi.factors], cfg.lattice, skew_coupling=cfg.skew_coupling)
    diffs: list[Fraction] = []
    offsets = set()
    for g in range(multi.h):
        gen = multi.generators(g)[0]
        tab = shift_table(gen, multi)
        for (kind, *rest), v in tab.items():
            if kind == "y":
                lam, mu, g2 = rest
                want = table.kappa(g, g2, lam)
                if g2 == g and mu == gen[1][lam]:
                    offsets.add(v - want)
                    continue
            else:
                want = table.kappa_z(g, rest[0])
            diffs.append(abs(v - want))
    details = {"matching_offset": float(offsets.pop()) if len(offsets) == 1 else float("nan")}
    res = [float(x) for x in diffs]
    if len(offsets) > 0:
        res.append(1.0)
    scalars = {}
    if multi.h == 1:
        single = SiteConfig(cfg.factors, cfg.tau, cfg.lattice, "single")
        ratios = set()
        for gen in single.generators(0):
            a, b = shift_table(gen, single), shift_table(gen, multi)
            ratios |= {a[k] / b[k] for k in a if b[k]}
            res += [float(abs(a[k])) for k in a if not b[k]]
        if len(ratios) == 1:
            scalars["single_to_multi_scale"] = complex(ratios.pop())
        else:
            res.append(1.0)
    rep = VerifyReport.from_residuals("semiclassical-shifts", res, 0.0, None, scalars=scalars)
    rep.details.update(details)
    return rep


def _labels_distinct(word: Word) -> bool:
    if len(word) == 2 and word[0][0] == word[1][0]:
        return all(x != y for x, y in zip(word[0][1], word[1][1]))
    return True


def commutator_words(f: ThetaElement, gf: int, g: ThetaElement, gg: int, cfg: SiteConfig) -> NCSum:
    xf, xg = x_embed(f, gf, cfg), x_embed(g, gg, cfg)
    return combine((1.0, multiply(xf, xg, cfg)), (-1.0, multiply(xg, xf, cfg)))


def semiclassical_commutator_check(
    f: ThetaElement,
    gf: int,
    g: ThetaElement,
    gg: int,
    cfg: SiteConfig,
    taus=(1e-3, -1e-3, 5e-4, -5e-4, 2.5e-4, -2.5e-4),
    count: int = 10,
    seed: int = 0,
    tol: float = 1e-5,
) -> VerifyReport:
    """lim (x(f)x(g) - x(g)x(f))/tau against the tensor bracket of the degree-one elements.

    Only words whose two generators carry different site values in every row
    are compared; the others have no counterpart in the function realization.
    """
    from ellipq.graded import fit_scalar, richardson
    from ellipq.tensor import degree_one, tensor_bracket

    seqs = [s for s, _ in cfg.factors]
    br = tensor_bracket(degree_one(f, gf, seqs), degree_one(g, gg, seqs))
    lay = br.layout
    rng = np.random.default_rng(seed)
    vals = random_values(cfg, count, rng)
    words = None

    def est(tau):
        nonlocal words
        c = cfg.with_tau(tau)
        ev = evaluate(normal_order(commutator_words(f, gf, g, gg, c), c), vals, c)
        if words is None:
            words = sorted(w for w in ev if _labels_distinct(w))
        return np.stack([np.broadcast_to(ev.get(w, 0), (count,)) for w in words]) / tau

    lim = richardson(est, taus, tol)
    model = np.stack([br(_layout_point(lay, w, vals, cfg)) for w in words])
    lam, res = fit_scalar(lim.values, model)
    rep = VerifyReport.from_residuals("semiclassical-commutator", res, tol, seed, scalars={"scale": lam})
    rep.details.update({"spread": lim.spread, "unstable": float(lim.unstable), "words": float(len(words))})
    if lim.unstable:
        rep.max_residual = max(rep.max_residual, lim.spread)
    return rep


def _layout_point(lay, word: Word, vals: dict, cfg: SiteConfig) -> np.ndarray:
    count = len(next(iter(vals.values())))
    x = np.zeros((count, lay.size), dtype=complex)
    used = defaultdict(int)
    for g, idx in word:
        lam_block = used[g]
        used[g] += 1
        for row, mu in enumerate(idx):
            x[:, lay.col(g, lam_block, row)] = vals[("y", row, mu, g)]
    for s in range(lay.h - 1):
        x[:, lay.nx + s] = vals[("z", s)]
    return x
