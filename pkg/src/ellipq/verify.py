"""Named verification suites.

A suite is a list of independent parts; each part is a function of its
tolerance that returns a VerifyReport.  run_suite evaluates the parts (on a
thread pool when asked, keeping their order) and merges them, so the suite
passes exactly when every part passes at its own tolerance.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ellipq import boson, graded, tensor
from ellipq.report import SampleSpec, VerifyReport, fundamental, merge, residual, scaled_zero
from ellipq.seqcomb import cont_frac, d, delta_chain, hilbert_tensor
from ellipq.theta import (
    TWO_PI_I,
    LatticeParams,
    ThetaElement,
    cosets,
    gram_rank,
    linear_combination,
    multi_theta_basis,
    theta_eval,
    theta_logd,
)

Part = tuple[Callable[[float], VerifyReport], float]

DEFAULT_ETA = 0.3 + 0.8j
DEFAULT_TAU = 0.137 + 0.05j


class UnknownSuiteError(KeyError):
    pass


def random_theta(n_vec: Sequence[int], lat: LatticeParams, rng: np.random.Generator, label: str = "r") -> ThetaElement:
    basis = multi_theta_basis(n_vec, lat)
    w = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return linear_combination(basis, w, label)


def _expect_fail(name: str, rep: VerifyReport, tol: float) -> VerifyReport:
    """Negative control: residual 0 when the check rejects its input, 1 when it accepts it."""
    out = VerifyReport.from_residuals(name, [0.0 if not rep.passed else 1.0], tol)
    out.details["control_max_residual"] = rep.max_residual
    return out


def _tag(name: str, factors) -> str:
    return name + "[" + " ".join("x".join(map(str, seq)) for seq, _ in factors) + "]"


def _retol(rep: VerifyReport, tol: float) -> VerifyReport:
    rep.tol = tol
    return rep


# ---------------------------------------------------------------------------
# theta-identities


def theta_parts(lat: LatticeParams, seed: int, etas=(1j, DEFAULT_ETA), count: int = 100, **_) -> list[Part]:
    lats = [LatticeParams(e, lat.radius if lat.eta == complex(e) else None, lat.tol) for e in etas]

    def zero(tol):
        res = []
        for lt in lats:
            res.append(abs(theta_eval(0.0, lt)))
            wide = LatticeParams(lt.eta, lt.radius + 10, lt.tol)
            z = 0.3 + 0.1j
            res.append(abs(theta_eval(z, lt) - theta_eval(z, wide)))
        return VerifyReport.from_residuals("theta-zero-and-truncation", res, tol, seed)

    def identities(tol):
        rng = np.random.default_rng(seed)
        res = []
        for lt in lats:
            z = fundamental(rng, (count,), lt)
            th = theta_eval(z, lt)
            mult = -np.exp(-TWO_PI_I * z)
            res += [
                residual(theta_eval(z + 1, lt), th),
                residual(theta_eval(z + lt.eta, lt), mult * th),
                residual(theta_eval(-z, lt), mult * th),
                residual(theta_logd(-z, lt) + theta_logd(z, lt), TWO_PI_I),
            ]
        return VerifyReport.from_residuals("theta-periodicity-reflection", np.concatenate(res), tol, seed)

    return [(zero, 1e-12), (identities, 1e-10)]


# ---------------------------------------------------------------------------
# dimension-rank


DIM_CASES = ((2,), (3,), (2, 2), (3, 2), (2, 2, 2))


def dimension_parts(lat: LatticeParams, seed: int, n_vecs=DIM_CASES, cutoff: float = 1e-8, **_) -> list[Part]:
    def check(tol):
        rng = np.random.default_rng(seed)
        res, details = [], {}
        for nv in n_vecs:
            nv = tuple(nv)
            basis = multi_theta_basis(nv, lat)
            z = fundamental(rng, (max(3 * len(basis), 20), len(nv)), lat)
            rank, sv = gram_rank(basis, z, cutoff)
            res += [abs(rank - d(nv)), abs(len(cosets(nv).labels) - d(nv))]
            details[f"rank{nv}"] = float(rank)
            details[f"gap{nv}"] = float(sv[-1] / sv[0])
        rep = VerifyReport.from_residuals("gram-rank", res, tol, seed)
        rep.details.update(details)
        return rep

    return [(check, 0.0)]


# ---------------------------------------------------------------------------
# poisson-axioms


POISSON_CASES = ((2,), (3,), (2, 2), (3, 2))


def poisson_parts(lat: LatticeParams, seed: int, n_vec=None, count: int = 20, **_) -> list[Part]:
    cases = POISSON_CASES if n_vec is None else (tuple(n_vec),)
    parts: list[Part] = []
    for k, nv in enumerate(cases):
        rng = np.random.default_rng([seed, k])
        f, g, h = (graded.random_degree_one(nv, lat, rng) for _ in range(3))
        x2 = graded.sample_blocks(nv, 2, lat, SampleSpec(seed=seed + 3, count=count))
        x3 = graded.sample_blocks(nv, 3, lat, SampleSpec(seed=seed + 4, count=count))
        fg = graded.bracketN(f, g)

        def anti(tol, nv=nv, f=f, g=g, fg=fg, x2=x2):
            a, b = fg(x2), graded.bracketN(g, f)(x2)
            return VerifyReport.from_residuals(f"antisymmetry{nv}", scaled_zero(a + b, a, graded.magnitude([f, g], x2)), tol, seed)

        def leibniz(tol, nv=nv, f=f, g=g, h=h, fg=fg, x3=x3):
            lhs = graded.bracketN(f, graded.sym_product(g, h))(x3)
            rhs = graded.sym_product(fg, h)(x3) + graded.sym_product(g, graded.bracketN(f, h))(x3)
            scale = graded.magnitude([f, g, h], x3)
            return VerifyReport.from_residuals(f"leibniz{nv}", scaled_zero(lhs - rhs, lhs, rhs, scale), tol, seed)

        def jacobi(tol, nv=nv, f=f, g=g, h=h, x3=x3):
            terms = [graded.bracketN(a, graded.bracketN(b, c))(x3) for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
            scale = graded.magnitude([f, g, h], x3)
            return VerifyReport.from_residuals(f"jacobi{nv}", scaled_zero(sum(terms), *terms, scale), tol, seed)

        def closure(tol, nv=nv, fg=fg):
            rep = graded.membership_check(fg, tol=tol, spec=SampleSpec(seed=seed + 5))
            rep.suite = f"closure{nv}"
            return rep

        parts += [(anti, 1e-10), (leibniz, 1e-8), (jacobi, 1e-7), (closure, 1e-8)]
    return parts


# ---------------------------------------------------------------------------
# star-associativity


def star_parts(lat: LatticeParams, seed: int, n=(2, 3), tau: complex = 0.013 + 0.021j, count: int = 20, **_) -> list[Part]:
    parts: list[Part] = []
    for k, m in enumerate((n,) if isinstance(n, int) else n):
        rng = np.random.default_rng([seed, k])
        ws = [rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(3)]

        def comb(basis, w):
            return sum((b.scaled(c) for b, c in zip(basis[1:], w[1:])), basis[0].scaled(w[0]))

        bt, b0 = graded.q_basis(m, tau, lat), graded.q_basis(m, 0, lat)
        f, g, h = (comb(bt, w) for w in ws)
        f0, g0 = comb(b0, ws[0]), comb(b0, ws[1])
        x2 = graded.sample_blocks((m,), 2, lat, SampleSpec(seed=seed + 5, count=count))
        x3 = graded.sample_blocks((m,), 3, lat, SampleSpec(seed=seed + 6, count=count))

        def at_zero(tol, m=m, f0=f0, g0=g0, x2=x2):
            return VerifyReport.from_residuals(f"star-tau0[n={m}]", residual(graded.star_product(f0, g0, 0)(x2), graded.sym_product(f0, g0)(x2)), tol, seed)

        def assoc(tol, m=m, f=f, g=g, h=h, x3=x3):
            lhs = graded.star_product(graded.star_product(f, g, tau), h, tau)(x3)
            rhs = graded.star_product(f, graded.star_product(g, h, tau), tau)(x3)
            return VerifyReport.from_residuals(f"star-associativity[n={m}]", residual(lhs, rhs), tol, seed)

        def closure(tol, m=m, f=f, g=g):
            rep = graded.membership_check(graded.star_product(f, g, tau), tol=tol, spec=SampleSpec(seed=seed + 7))
            rep.suite = f"star-closure[n={m}]"
            return rep

        parts += [(at_zero, 1e-10), (assoc, 1e-8), (closure, 1e-8)]
    return parts


# ---------------------------------------------------------------------------
# semiclassical


def semiclassical_parts(lat: LatticeParams, seed: int, n=(2, 3), count: int = 50, **_) -> list[Part]:
    parts: list[Part] = []
    for k, m in enumerate((n,) if isinstance(n, int) else n):

        def check(tol, m=m, k=k):
            rng = np.random.default_rng([seed, k])
            basis = graded.q_basis(m, 0, lat)
            f0, g0 = (
                sum((b.scaled(c) for b, c in zip(basis[1:], w[1:])), basis[0].scaled(w[0]))
                for w in (rng.normal(size=m) + 1j * rng.normal(size=m) for _ in range(2))
            )
            x = graded.sample_blocks((m,), 2, lat, SampleSpec(seed=seed + 7, count=count))
            est = graded.commutator_limit(f0, g0, x, tol=tol)
            lam, res = graded.fit_scalar(est.values, graded.bracketN(f0, g0)(x))
            rep = VerifyReport.from_residuals(f"semiclassical[n={m}]", res, tol, seed, scalars={f"lambda_{m}": lam})
            rep.details.update({"spread": est.spread, "unstable": float(est.unstable)})
            if est.unstable:
                rep.max_residual = max(rep.max_residual, est.spread)
            return rep

        parts.append((check, 1e-5))
    return parts


# ---------------------------------------------------------------------------
# boson-consistency, boson-homomorphism, boson-semiclassical


def boson_configs(lat: LatticeParams, tau: complex, skew_coupling: bool = False) -> list[boson.SiteConfig]:
    return [
        boson.SiteConfig.scalar(3, 3, tau, lat),
        boson.SiteConfig.single((3, 2), (3, 3), tau, lat),
        boson.SiteConfig.single((2, 2, 2), (2, 2, 2), tau, lat),
        boson.SiteConfig((((2,), (3,)), ((3, 2), (2, 2))), tau, lat, "multi", skew_coupling),
        boson.SiteConfig((((2,), (2,)), ((3,), (2,)), ((2,), (2,))), tau, lat, "multi", skew_coupling),
    ]


def unique_normal_form(cfg: boson.SiteConfig) -> bool:
    """Ordered words are a basis only when no factor has three or more rows."""
    return all(len(seq) <= 2 for seq, _ in cfg.factors)


def boson_parts(
    lat: LatticeParams,
    seed: int,
    tau: complex = DEFAULT_TAU,
    words: int = 200,
    skew_coupling: bool = False,
    factors=None,
    mode: str = "multi",
    **_,
) -> list[Part]:
    """All standard configurations, or the single one given by ``factors`` and ``mode``."""
    if factors is None:
        configs = boson_configs(lat, tau, skew_coupling)
    else:
        facs = tuple((tuple(seq), tuple(sites)) for seq, sites in factors)
        configs = [boson.SiteConfig(facs, tau, lat, mode, skew_coupling)]
    parts: list[Part] = []
    for k, cfg in enumerate(configs):
        s = seed + 101 * k
        checks = [
            ("double-exchange", lambda tol, cfg=cfg, s=s: boson.double_exchange_check(cfg, seed=s, tol=tol), 1e-10),
            ("tau-zero", lambda tol, cfg=cfg, s=s: boson.degenerate_check(cfg, seed=s, tol=tol), 1e-12),
            ("flatness", lambda tol, cfg=cfg, s=s: boson.flatness_check(cfg, 3, seed=s, gap=tol), 1e-8),
        ]
        if unique_normal_form(cfg):
            checks.append(("confluence", lambda tol, cfg=cfg, s=s: boson.confluence_check(cfg, words=words, seed=s, tol=tol), 1e-9))
        for name, fn, default in checks:
            parts.append((_renamed(fn, _tag(f"{name}[{cfg.mode}]", cfg.factors)), default))
    return parts


def _renamed(fn: Callable[[float], VerifyReport], name: str) -> Callable[[float], VerifyReport]:
    def run(tol):
        rep = fn(tol)
        rep.suite = name
        return rep

    return run


def homomorphism_parts(lat: LatticeParams, seed: int, tau: complex = DEFAULT_TAU, n=(2, 3), sites: int = 3, degrees=(2, 3), rule: str = "sorted", **_) -> list[Part]:
    parts: list[Part] = []
    for m, deg in itertools.product((n,) if isinstance(n, int) else n, degrees):
        parts.append((lambda tol, m=m, deg=deg: boson.homomorphism_check(m, sites, tau, lat, deg, seed=seed, tol=tol, rule=rule), 1e-8))
    return parts


SHIFT_CONFIGS = ((((3, 2), (2, 2)),), (((3, 2), (2, 2)), ((2,), (3,))), (((2,), (2,)), ((3,), (2,)), ((2,), (2,))))


def boson_semiclassical_parts(lat: LatticeParams, seed: int, skew_coupling: bool = False, **_) -> list[Part]:
    parts: list[Part] = []
    for facs in SHIFT_CONFIGS:

        def shifts(tol, facs=facs):
            cfg = boson.SiteConfig(facs, DEFAULT_TAU, lat, "multi", skew_coupling)
            rep = _retol(boson.semiclassical_shift_check(cfg), tol)
            rep.suite = _tag("shifts", facs)
            rep.scalars = {f"{k}[{rep.suite}]": v for k, v in rep.scalars.items()}
            return rep

        parts.append((shifts, 0.0))
    cases = [
        ((((2,), (3,)), ((3,), (3,))), 0, 1),
        ((((3, 2), (2, 2)), ((2,), (2,))), 0, 1),
        ((((3, 2), (2, 2)), ((2,), (2,))), 0, 0),
        ((((2,), (2,)), ((2,), (2,)), ((2,), (2,))), 0, 2),
    ]
    for k, (facs, a, b) in enumerate(cases):

        def check(tol, facs=facs, a=a, b=b, k=k):
            rng = np.random.default_rng([seed, k])
            cfg = boson.SiteConfig(facs, 0.1, lat, "multi", skew_coupling)
            f, g = random_theta(facs[a][0], lat, rng, "f"), random_theta(facs[b][0], lat, rng, "g")
            rep = boson.semiclassical_commutator_check(f, a, g, b, cfg, seed=seed, tol=tol)
            rep.suite = _tag(f"commutator[{a},{b}]", facs)
            rep.scalars = {f"scale[{rep.suite}]": rep.scalars["scale"]}
            return rep

        parts.append((check, 1e-5))
    return parts


# ---------------------------------------------------------------------------
# tensor-axioms


DISPLAY_PAIRS = (((3, 2), (2, 2)), ((2,), (3,)), ((2, 2, 2), (3,)), ((4,), (2, 3)))

JACOBI_CASES = (
    (((3, 2), (2,)), (0, 1, 1)),
    (((2,), (3,)), (0, 0, 1)),
    (((2,), (2,)), (0, 1, 0)),
    (((2,), (3,), (2,)), (0, 1, 2)),
    (((2, 2), (2,), (3,)), (1, 0, 2)),
)


def _element(seqs, degrees, lat, rng) -> tensor.TensorElement:
    out = None
    for t, a in enumerate(degrees):
        for _ in range(a):
            e = tensor.degree_one(random_theta(seqs[t], lat, rng), t, seqs)
            out = e if out is None else tensor.tensor_product(out, e)
    return out


def tensor_parts(lat: LatticeParams, seed: int, seqs=((3, 2), (2, 2)), count: int = 20, skew_coupling: bool = False, **_) -> list[Part]:
    seqs = tuple(tuple(s) for s in seqs)
    parts: list[Part] = []

    def display(tol):
        rng = np.random.default_rng(seed)
        res = []
        for n_seq, m_seq in DISPLAY_PAIRS:
            pair = (n_seq, m_seq)
            fe, ge = random_theta(n_seq, lat, rng, "f"), random_theta(m_seq, lat, rng, "g")
            br = tensor.tensor_bracket(tensor.degree_one(fe, 0, pair), tensor.degree_one(ge, 1, pair))
            x = tensor.sample_tensor(br.layout, lat, SampleSpec(seed=seed + 1, count=count))
            p, q = len(n_seq), len(m_seq)
            xs, ys, z = x[:, :p], x[:, p : p + q], x[:, p + q]
            fx, gy = fe(xs), ge(ys)
            gd, fd = ge.grad(ys), fe.grad(xs)
            want = fx * sum(d(m_seq[t + 1 :]) / d(m_seq) * gd[:, t] for t in range(q))
            want = want - gy * sum(d(n_seq[:t]) / d(n_seq) * fd[:, t] for t in range(p))
            want = want - (theta_logd(ys[:, 0] - xs[:, -1] - z, lat) - np.pi * 1j) * fx * gy
            res.append(residual(br(x), want))
        return VerifyReport.from_residuals("explicit-bracket", np.concatenate(res), tol, seed)

    def z_constants(tol):
        res = []
        for n_seq, m_seq in DISPLAY_PAIRS:
            pair = (n_seq, m_seq)
            want_f = Fraction(d(m_seq[1:]), d(m_seq)) + Fraction(d(n_seq[:-1]) + 1, d(n_seq))
            want_g = -(Fraction(1 + d(m_seq[1:]), d(m_seq)) + Fraction(d(n_seq[:-1]), d(n_seq)))
            got_f = tensor.z_bracket_constant(pair, (1, 0), 0)
            got_g = tensor.z_bracket_constant(pair, (0, 1), 0)
            res += [float(abs(got_f - want_f)), float(abs(got_g - want_g))]
        return VerifyReport.from_residuals("z-bracket-constants", res, tol, seed)

    def one_factor(tol):
        rng = np.random.default_rng(seed + 2)
        res = []
        for nv in ((2,), (3,), (3, 2)):
            fe, ge = random_theta(nv, lat, rng), random_theta(nv, lat, rng)
            br = tensor.tensor_bracket(tensor.degree_one(fe, 0, (nv,)), tensor.degree_one(ge, 0, (nv,)))
            x = tensor.sample_tensor(br.layout, lat, SampleSpec(seed=seed + 3, count=count))
            ref = graded.bracketN(graded.lift(fe), graded.lift(ge))(x.reshape(len(x), 2, len(nv)))
            res.append(residual(br(x), ref))
        return VerifyReport.from_residuals("one-factor-reduction", np.concatenate(res), tol, seed)

    def word_route(tol):
        rng = np.random.default_rng(seed + 4)
        res = []
        cases = [((1, 0), (0, 1)), ((1, 1), (1, 0)), ((1, 0), (1, 1))]
        for dfa, dga in cases:
            f, g = _element(seqs[:2], dfa, lat, rng), _element(seqs[:2], dga, lat, rng)
            m = tensor.coupling_function(seqs[:2], lambda z: np.exp(0.7 * z.sum(axis=1)) + np.cos(z.sum(axis=1)), lat)
            f = tensor.tensor_product(m, f)
            br = tensor.tensor_bracket(f, g)
            table = tensor.GeneratorBracketTable(seqs[:2], lat)
            for _ in range(3):
                pt = tensor.random_label_point(seqs[:2], br.degrees, lat, rng)
                xf = tensor.encode_X(f, pt, br.degrees, derivations=True)
                xg = tensor.encode_X(g, pt, br.degrees, derivations=True)
                wb, xb = tensor.word_bracket(xf, xg, table, pt), tensor.encode_X(br, pt, br.degrees)
                res += [residual(wb.get(w, 0), xb.get(w, 0)) for w in set(wb) | set(xb)]
                pr = tensor.word_product(tensor.encode_X(f, pt, br.degrees), tensor.encode_X(g, pt, br.degrees))
                ep = tensor.encode_X(tensor.tensor_product(f, g), pt, br.degrees)
                res += [residual(pr.get(w, 0), ep.get(w, 0)) for w in set(pr) | set(ep)]
        return VerifyReport.from_residuals("word-route", np.ravel(res), tol, seed)

    def antisymmetry(tol):
        rng = np.random.default_rng(seed + 5)
        f, g = _element(seqs[:2], (1, 0), lat, rng), _element(seqs[:2], (1, 1), lat, rng)
        fg = tensor.tensor_bracket(f, g)
        x = tensor.sample_tensor(fg.layout, lat, SampleSpec(seed=seed + 6, count=count))
        return VerifyReport.from_residuals("tensor-antisymmetry", residual(fg(x), -tensor.tensor_bracket(g, f)(x)), tol, seed)

    def locality(tol):
        rng = np.random.default_rng(seed + 7)
        s3 = ((2,), (3,), (2,))
        f, g = _element(s3, (1, 0, 0), lat, rng), _element(s3, (0, 0, 1), lat, rng)
        fg = tensor.tensor_bracket(f, g, skew_coupling=skew_coupling)
        x = tensor.sample_tensor(fg.layout, lat, SampleSpec(seed=seed + 8, count=count))
        prod = tensor.tensor_product(f, g)(x)
        return VerifyReport.from_residuals("locality", scaled_zero(fg(x), prod), tol, seed)

    parts += [(display, 1e-9), (z_constants, 0.0), (one_factor, 1e-9), (word_route, 1e-9), (antisymmetry, 1e-10), (locality, 1e-12)]

    for k, (sq, place) in enumerate(JACOBI_CASES):

        def jacobi(tol, sq=sq, place=place, k=k):
            rng = np.random.default_rng([seed, 50 + k])
            f, g, h = (tensor.degree_one(random_theta(sq[t], lat, rng), t, sq) for t in place)
            br = lambda a, b: tensor.tensor_bracket(a, b, skew_coupling=skew_coupling)  # noqa: E731
            terms = [br(a, br(b, c)) for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
            x = tensor.sample_tensor(terms[0].layout, lat, SampleSpec(seed=seed + 9, count=10))
            vals = [t(x) for t in terms]
            prod = tensor.tensor_product(tensor.tensor_product(f, g), h)(x)
            rep = VerifyReport.from_residuals(f"jacobi[h={len(sq)} {sq} {place}]", scaled_zero(sum(vals), *vals, prod), tol, seed)
            return rep

        parts.append((jacobi, 1e-7))

    def conditions(tol):
        rng = np.random.default_rng(seed + 10)
        sq = ((3, 2), (2,))
        a, b, c = (tensor.degree_one(random_theta(sq[t], lat, rng), t, sq) for t in (0, 1, 1))
        outputs = {
            "product": tensor.tensor_product(a, b),
            "bracket": tensor.tensor_bracket(a, b),
            "bracket2": tensor.tensor_bracket(tensor.tensor_bracket(a, b), c),
            "product3": tensor.tensor_product(tensor.tensor_product(a, b), c),
        }
        reps = []
        for name, el in outputs.items():
            r3 = tensor.condition3_check(el)
            r3.suite = f"condition3[{name}]"
            r4 = tensor.condition4_check(el, tol=tol)
            r4.suite = f"condition4[{name}]"
            reps += [r3, r4]
        return merge("conditions", reps, seed)

    def controls(tol):
        rng = np.random.default_rng(seed + 11)
        sq = ((3, 2), (2,))
        a, b, c = (tensor.degree_one(random_theta(sq[t], lat, rng), t, sq) for t in (0, 1, 1))
        p = tensor.tensor_product(a, b)
        lay = p.layout

        def form(x):
            return x[:, lay.col(1, 0, 0)] - x[:, lay.col(0, 0, 1)] - lay.z(x)[:, 0]

        double = tensor.TensorElement(lay, lambda x: p(x) / theta_eval(form(x), lat) ** 2, lat, None, "double-pole")
        p3 = tensor.tensor_product(p, c)
        l3 = p3.layout
        loose = tensor.TensorElement(
            l3, lambda x: p3(x) / np.prod(theta_eval(tensor.cross_forms(l3, x), lat), axis=1), lat, None, "nonvanishing"
        )
        return merge(
            "negative-controls",
            [
                _expect_fail("condition3[double pole]", tensor.condition3_check(double), tol),
                _expect_fail("condition4[nonvanishing]", tensor.condition4_check(loose), tol),
            ],
            seed,
        )

    parts += [(conditions, 1e-8), (controls, 0.0)]
    return parts


# ---------------------------------------------------------------------------
# hilbert-crosscheck


def _two_factor_series(a: int, b: int, c: int, i: int, j: int) -> int:
    """Coefficient of t1^i t2^j in (1-t1)^-a (1-t2)^-b (1-t1 t2)^-c."""
    return sum(math.comb(a + i - k - 1, i - k) * math.comb(b + j - k - 1, j - k) * math.comb(c + k - 1, k) for k in range(min(i, j) + 1))


def hilbert_parts(lat: LatticeParams, seed: int, cutoff: int = 6, max_n: int = 60, **_) -> list[Part]:
    def fractions(tol):
        bad = 0
        for n in range(2, max_n + 1):
            for k in range(1, n):
                if math.gcd(n, k) == 1:
                    s = cont_frac(n, k)
                    bad += int(d(s) != n or d(s[1:]) != k or min(s) < 2)
        return VerifyReport.from_residuals("continued-fractions", [bad], tol, seed)

    def two_factor(tol):
        bad = 0
        for n_seq, m_seq in (((2,), (2,)), ((3, 2), (2,)), ((2, 2), (3, 2)), ((5,), (2, 2, 2))):
            ser = hilbert_tensor((n_seq, m_seq), cutoff)
            a, b, c = d(n_seq), d(m_seq), d(delta_chain((n_seq, m_seq)))
            for i, j in itertools.product(range(cutoff), repeat=2):
                bad += int(ser[(i, j)] != _two_factor_series(a, b, c, i, j))
        bad += int(hilbert_tensor(((2,), (2,)), 3)[(1, 1)] != 8)
        return VerifyReport.from_residuals("two-factor-series", [bad], tol, seed)

    def one_factor(tol):
        bad = 0
        for seq in ((2,), (3,), (3, 2), (2, 2, 2)):
            n = d(seq)
            ser = hilbert_tensor((seq,), cutoff)
            bad += sum(int(ser[(i,)] != math.comb(n + i - 1, i)) for i in range(cutoff))
        return VerifyReport.from_residuals("one-factor-series", [bad], tol, seed)

    return [(fractions, 0.0), (two_factor, 0.0), (one_factor, 0.0)]


# ---------------------------------------------------------------------------


SUITES: dict[str, Callable[..., list[Part]]] = {
    "theta-identities": theta_parts,
    "dimension-rank": dimension_parts,
    "poisson-axioms": poisson_parts,
    "star-associativity": star_parts,
    "semiclassical": semiclassical_parts,
    "boson-consistency": boson_parts,
    "boson-homomorphism": homomorphism_parts,
    "boson-semiclassical": boson_semiclassical_parts,
    "tensor-axioms": tensor_parts,
    "hilbert-crosscheck": hilbert_parts,
}


def run_suite(
    name: str,
    params: dict | None = None,
    seed: int = 0,
    tol: float | None = None,
    lattice: LatticeParams | None = None,
    threads: int = 1,
) -> VerifyReport:
    """Run a named suite; ``tol`` replaces every part's default tolerance."""
    if name not in SUITES:
        raise UnknownSuiteError(name)
    lat = LatticeParams(DEFAULT_ETA) if lattice is None else lattice
    parts = SUITES[name](lat, seed, **(params or {}))

    def run(part: Part) -> VerifyReport:
        fn, default = part
        return fn(default if tol is None else tol)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            reports = list(pool.map(run, parts))
    else:
        reports = [run(p) for p in parts]
    return merge(name, reports, seed)
