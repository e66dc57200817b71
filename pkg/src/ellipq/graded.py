"""Graded components as symmetric quasi-periodic functions.

An element of grade ``alpha`` over the sequence ``n_vec = (n_1..n_p)`` is a
function of ``alpha`` blocks of ``p`` complex variables.  Evaluators take an
array of shape ``(S, alpha, p)`` (S sample points) and return shape ``(S,)``.
Everything is composed lazily; nothing is expanded into series.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ellipq.report import SampleSpec, VerifyReport, merge, residual, row_differences, sample
from ellipq.seqcomb import d, d_ratio
from ellipq.theta import (
    TWO_PI_I,
    LatticeParams,
    ThetaElement,
    linear_combination,
    multi_theta_basis,
    theta_basis,
    theta_eval,
    theta_logd,
)

MAX_GRADE = 5

Evaluator = Callable[[np.ndarray], np.ndarray]


def cauchy_grad(fn: Evaluator, x: np.ndarray, radius: float = 4e-3, nodes: int = 8) -> np.ndarray:
    """All partial derivatives of a holomorphic ``fn`` by the trapezoid rule on small circles.

    The error is of order radius**nodes times the (nodes+1)-th derivative, so
    it sits near rounding level for the theta-type functions used here.
    """
    x = np.asarray(x, dtype=complex)
    s, vshape = x.shape[0], x.shape[1:]
    nv = int(np.prod(vshape))
    roots = np.exp(TWO_PI_I * np.arange(nodes) / nodes)
    eye = np.eye(nv).reshape(nv, *vshape)
    step = (radius * roots).reshape(nodes, 1, 1, *([1] * len(vshape)))
    pert = x[None, None] + step * eye[None, :, None]
    vals = fn(pert.reshape(nodes * nv * s, *vshape)).reshape(nodes, nv, s)
    der = np.tensordot(roots.conj(), vals, axes=(0, 0)) / (nodes * radius)
    return der.T.reshape(s, *vshape)


@dataclass(frozen=True, eq=False)
class SymElement:
    """A grade-``alpha`` element: symmetric function of ``alpha`` blocks of ``p`` variables.

    ``tau_tag`` is the shift c in the claimed law f(z + eta) = exp(-2 pi i (n z + c)) f
    for single-variable blocks (Q_n elements of grade alpha carry -alpha n tau).
    """

    n_vec: tuple[int, ...]
    alpha: int
    fn: Evaluator
    lattice: LatticeParams
    tau_tag: complex = 0.0
    grad_fn: Evaluator | None = None
    label: str = field(default="")

    @property
    def p(self) -> int:
        return len(self.n_vec)

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=complex))

    def grad(self, x) -> np.ndarray:
        """Partial derivatives, shape (S, alpha, p)."""
        x = np.asarray(x, dtype=complex)
        if self.grad_fn is not None:
            return self.grad_fn(x)
        return cauchy_grad(self.fn, x)

    def __add__(self, other: "SymElement") -> "SymElement":
        _check_compatible(self, other, same_grade=True)
        ga, gb = self.grad_fn, other.grad_fn
        grad = (lambda x: ga(x) + gb(x)) if ga and gb else None
        return replace(self, fn=lambda x: self.fn(x) + other.fn(x), grad_fn=grad, label=f"({self.label}+{other.label})")

    def __sub__(self, other: "SymElement") -> "SymElement":
        return self + other.scaled(-1)

    def scaled(self, w: complex) -> "SymElement":
        g = self.grad_fn
        return replace(self, fn=lambda x: w * self.fn(x), grad_fn=(lambda x: w * g(x)) if g else None)


def _check_compatible(f: SymElement, g: SymElement, same_grade=False):
    if f.n_vec != g.n_vec:
        raise ValueError(f"mismatched n_vec {f.n_vec} vs {g.n_vec}")
    if f.lattice != g.lattice:
        raise ValueError("mismatched lattice")
    if same_grade and f.alpha != g.alpha:
        raise ValueError("grades differ")


def _check_grade(total: int):
    if total > MAX_GRADE:
        raise ValueError(f"total grade {total} exceeds the cap {MAX_GRADE}")


def lift(f: ThetaElement, tau_tag: complex = 0.0) -> SymElement:
    """A theta function as a grade-one element."""
    n_vec = f.tag.n_vec if f.tag.n_vec is not None else (f.tag.m,)
    return SymElement(
        tuple(n_vec),
        1,
        lambda x: f(x[:, 0, :]),
        f.lattice,
        tau_tag,
        lambda x: f.grad(x[:, 0, :])[:, None, :],
        f.label,
    )


def degree_one_basis(n_vec: Sequence[int], lat: LatticeParams) -> list[SymElement]:
    return [lift(b) for b in multi_theta_basis(n_vec, lat)]


def random_degree_one(n_vec: Sequence[int], lat: LatticeParams, rng: np.random.Generator) -> SymElement:
    """A generic element: random complex combination of the basis."""
    basis = multi_theta_basis(n_vec, lat)
    w = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return lift(linear_combination(basis, w, "rand"))


def _perms(a: int, b: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(a + b))), dtype=np.intp).reshape(-1, a + b)


def _split(x: np.ndarray, perms: np.ndarray, a: int):
    """Blocks chosen by every permutation: (S*P, a, p) and (S*P, b, p)."""
    s, _, p = x.shape
    xp = x[:, perms]  # (S, P, a+b, p)
    return xp[:, :, :a].reshape(-1, a, p), xp[:, :, a:].reshape(-1, perms.shape[1] - a, p)


def sym_product(f: SymElement, g: SymElement) -> SymElement:
    """(1/(a! b!)) sum over S_{a+b} of f(first a blocks) g(remaining blocks)."""
    _check_compatible(f, g)
    a, b = f.alpha, g.alpha
    _check_grade(a + b)
    perms = _perms(a, b)
    norm = 1.0 / (math.factorial(a) * math.factorial(b))
    inv = np.argsort(perms, axis=1)

    def fn(x):
        s = x.shape[0]
        if a == 0 or b == 0:
            return f(x[:, :a]) * g(x[:, a:])
        xa, xb = _split(x, perms, a)
        return norm * (f(xa) * g(xb)).reshape(s, -1).sum(axis=1)

    def grad(x):
        s, _, p = x.shape
        xa, xb = _split(x, perms, a)
        fa, gb = f(xa), g(xb)
        da = f.grad(xa) * gb[:, None, None]
        db = g.grad(xb) * fa[:, None, None]
        both = np.concatenate([da, db], axis=1).reshape(s, len(perms), a + b, p)
        # un-permute: slot j of permutation sigma is block sigma[j]
        out = np.take_along_axis(both, inv[None, :, :, None], axis=2)
        return norm * out.sum(axis=1)

    return SymElement(f.n_vec, a + b, fn, f.lattice, f.tau_tag + g.tau_tag, grad, f"({f.label}.{g.label})")


# ---------------------------------------------------------------------------
# Q_n: the star product and its first-order term


def q_basis(n: int, tau: complex, lat: LatticeParams) -> list[SymElement]:
    """Basis of F_1 = Theta_{n, -n tau} as grade-one elements."""
    return [lift(b, -n * tau) for b in theta_basis(n, -n * tau, lat)]


def q_family(f0: SymElement, tau: complex) -> SymElement:
    """The deformation f_tau(z) = f0(z - alpha tau) of a classical element into F_alpha."""
    if f0.p != 1:
        raise ValueError("Q_n elements have single-variable blocks")
    n, a = f0.n_vec[0], f0.alpha
    shift = a * tau
    g = f0.grad_fn
    return replace(
        f0,
        fn=lambda x: f0.fn(x - shift),
        grad_fn=(lambda x: g(x - shift)) if g else None,
        tau_tag=f0.tau_tag - a * n * tau,
    )


def star_product(f: SymElement, g: SymElement, tau: complex) -> SymElement:
    """f*g = (1/(a!b!)) sum_sigma f(z_sigma..) g(z_sigma.. - 2 a tau) prod theta(z_p - z_q - n tau)/theta(z_p - z_q)."""
    _check_compatible(f, g)
    if f.p != 1:
        raise ValueError("the star product is defined for single-variable blocks only")
    n = f.n_vec[0]
    a, b = f.alpha, g.alpha
    _check_grade(a + b)
    perms = _perms(a, b)
    norm = 1.0 / (math.factorial(a) * math.factorial(b))
    lat = f.lattice

    def fn(x):
        s = x.shape[0]
        xa, xb = _split(x, perms, a)
        w = xa[:, :, None, 0] - xb[:, None, :, 0]
        if np.any(np.abs(theta_eval(w, lat)) < 1e-10):
            raise ValueError("star product evaluated on the diagonal")
        kern = np.prod(theta_eval(w - n * tau, lat) / theta_eval(w, lat), axis=(1, 2))
        vals = f(xa) * g(xb - 2 * a * tau) * kern
        return norm * vals.reshape(s, -1).sum(axis=1)

    return SymElement(f.n_vec, a + b, fn, lat, f.tau_tag + g.tau_tag, None, f"({f.label}*{g.label})")


def theta_ratio_bracket(f: SymElement, g: SymElement, kernel_mode: str = "odd") -> SymElement:
    """The first-order bracket of the star product written with theta'/theta kernels.

    ``raw`` uses theta'/theta(z_p - z_q) unchanged; ``odd`` subtracts pi i,
    leaving the part of the kernel that is odd under z -> -z.
    """
    _check_compatible(f, g)
    if f.p != 1:
        raise ValueError("theta_ratio_bracket needs single-variable blocks")
    if kernel_mode not in ("raw", "odd"):
        raise ValueError("kernel_mode must be 'raw' or 'odd'")
    n = f.n_vec[0]
    a, b = f.alpha, g.alpha
    _check_grade(a + b)
    perms = _perms(a, b)
    norm = 1.0 / (math.factorial(a) * math.factorial(b))
    shift = np.pi * 1j if kernel_mode == "odd" else 0.0
    lat = f.lattice

    def fn(x):
        s = x.shape[0]
        xa, xb = _split(x, perms, a)
        fa, gb = f(xa), g(xb)
        kern = (theta_logd(xa[:, :, None, 0] - xb[:, None, :, 0], lat) - shift).sum(axis=(1, 2))
        val = -2 * n * fa * gb * kern + 2 * b * gb * f.grad(xa).sum(axis=(1, 2)) - 2 * a * fa * g.grad(xb).sum(axis=(1, 2))
        return norm * val.reshape(s, -1).sum(axis=1)

    return SymElement(f.n_vec, a + b, fn, lat, 0.0, None, f"{{{f.label},{g.label}}}_{kernel_mode}")


# ---------------------------------------------------------------------------
# The Poisson bracket on S^*(Theta_{(n_1..n_p)})


def coordinate_weights(n_vec: Sequence[int]) -> np.ndarray:
    """(d(n_1..n_{psi-1}) + d(n_{psi+1}..n_p)) / d(n_1..n_p) for psi = 1..p."""
    n_vec = tuple(n_vec)
    return np.array([float(d_ratio([n_vec[:i], n_vec[i + 1 :]], n_vec)) for i in range(len(n_vec))])


def _swap_kernel(u, v, psi, lat):
    """theta(u_psi + v_{psi+1} - v_psi - u_{psi+1}) / (theta(u_psi - v_psi) theta(v_{psi+1} - u_{psi+1})); psi 0-based."""
    num = theta_eval(u[..., psi] + v[..., psi + 1] - v[..., psi] - u[..., psi + 1], lat)
    den = theta_eval(u[..., psi] - v[..., psi], lat) * theta_eval(v[..., psi + 1] - u[..., psi + 1], lat)
    return num / den


def bracket2(f: SymElement, g: SymElement) -> SymElement:
    """The bracket of two grade-one elements, term by term as for {f,g}(x; y)."""
    _check_compatible(f, g)
    if f.alpha != 1 or g.alpha != 1:
        raise ValueError("bracket2 takes grade-one elements")
    p = f.p
    w = coordinate_weights(f.n_vec)
    lat = f.lattice
    t0 = lat.theta_prime0

    def fn(xy):
        x, y = xy[:, 0], xy[:, 1]
        X, Y = xy[:, :1], xy[:, 1:]
        fx, fy, gx, gy = f(X), f(Y), g(X), g(Y)
        dfx, dfy, dgx, dgy = (h.grad(z)[:, 0] for h, z in ((f, X), (f, Y), (g, X), (g, Y)))
        out = ((gx[:, None] * dfy + gy[:, None] * dfx - fx[:, None] * dgy - fy[:, None] * dgx) * w).sum(axis=1)
        kern = theta_logd(y[:, 0] - x[:, 0], lat) + theta_logd(y[:, p - 1] - x[:, p - 1], lat) - TWO_PI_I
        out = out + kern * (fx * gy - gx * fy)
        for a in range(p - 1):
            u = np.concatenate([y[:, : a + 1], x[:, a + 1 :]], axis=1)[:, None]  # (y_1..y_a, x_{a+1}..x_p)
            v = np.concatenate([x[:, : a + 1], y[:, a + 1 :]], axis=1)[:, None]
            out = out + t0 * _swap_kernel(x, y, a, lat) * (f(u) * g(v) - g(u) * f(v))
        return out

    return SymElement(f.n_vec, 2, fn, lat, 0.0, None, f"{{{f.label},{g.label}}}")


def bracketN(f: SymElement, g: SymElement) -> SymElement:
    """The bracket of grade-a and grade-b elements as a grade a+b symmetric function."""
    _check_compatible(f, g)
    a, b = f.alpha, g.alpha
    if a < 1 or b < 1:
        raise ValueError("bracketN needs positive grades")
    _check_grade(a + b)
    p = f.p
    w = coordinate_weights(f.n_vec)
    perms = _perms(a, b)
    norm = 1.0 / (math.factorial(a) * math.factorial(b))
    lat = f.lattice
    t0 = lat.theta_prime0
    mus = list(itertools.product(range(a), range(b)))

    def fn(x):
        s = x.shape[0]
        xa, xb = _split(x, perms, a)  # (N, a, p), (N, b, p)
        fa, gb = f(xa), g(xb)
        out = b * gb * (f.grad(xa) * w).sum(axis=(1, 2)) - a * fa * (g.grad(xb) * w).sum(axis=(1, 2))
        da = xb[:, None, :, :] - xa[:, :, None, :]  # x_{., mu'} - x_{., mu}
        kern = theta_logd(da[..., 0], lat).sum(axis=(1, 2)) + theta_logd(da[..., p - 1], lat).sum(axis=(1, 2))
        out = out + (kern - TWO_PI_I * a * b) * fa * gb
        if p > 1:
            us, vs, ks = [], [], []
            for (mu, nu), psi in itertools.product(mus, range(p - 1)):
                ua, vb = xa.copy(), xb.copy()
                ua[:, mu, : psi + 1] = xb[:, nu, : psi + 1]
                vb[:, nu, : psi + 1] = xa[:, mu, : psi + 1]
                us.append(ua)
                vs.append(vb)
                ks.append(_swap_kernel(xa[:, mu], xb[:, nu], psi, lat))
            m = len(us)
            fu = f(np.concatenate(us)).reshape(m, -1)
            gv = g(np.concatenate(vs)).reshape(m, -1)
            out = out + t0 * (np.array(ks) * fu * gv).sum(axis=0)
        return norm * out.reshape(s, -1).sum(axis=1)

    return SymElement(f.n_vec, a + b, fn, lat, 0.0, None, f"{{{f.label},{g.label}}}")


# ---------------------------------------------------------------------------
# Semiclassical limit of the star product


@dataclass
class LimitEstimate:
    values: np.ndarray
    spread: float
    unstable: bool


def richardson(estimator: Callable[[complex], np.ndarray], taus: Sequence[complex], tol: float = 1e-5) -> LimitEstimate:
    """Extrapolate D(tau) to tau -> 0 from symmetric pairs +-h.

    D(tau) = D0 + c1 tau + c2 tau^2 + ...; averaging +-h removes odd orders and
    a Richardson step on consecutive step sizes removes the h^2 term.  With
    three or more sizes the spread is the disagreement of the last two
    extrapolants; with two it is the size of the correction itself.
    """
    hs = sorted({abs(complex(t)) for t in taus}, reverse=True)
    if len(hs) < 2 or hs[-1] == 0:
        raise ValueError("need two nonzero step sizes")
    sym = [0.5 * (estimator(h) + estimator(-h)) for h in hs]
    ext = [(h1**2 * s2 - h2**2 * s1) / (h1**2 - h2**2) for h1, h2, s1, s2 in zip(hs, hs[1:], sym, sym[1:])]
    best = ext[-1]
    prev = ext[-2] if len(ext) > 1 else sym[-1]
    spread = float(np.max(np.abs(best - prev) / (1 + np.abs(best))))
    return LimitEstimate(best, spread, spread > 10 * tol)


LIMIT_STEPS = (1e-3, -1e-3, 5e-4, -5e-4, 2.5e-4, -2.5e-4)


def commutator_limit(f0: SymElement, g0: SymElement, x: np.ndarray, taus=LIMIT_STEPS, tol: float = 1e-5) -> LimitEstimate:
    """lim (f*g - g*f)/tau at the points x, with f, g deformed by q_family."""

    def est(tau):
        f, g = q_family(f0, tau), q_family(g0, tau)
        return (star_product(f, g, tau)(x) - star_product(g, f, tau)(x)) / tau

    return richardson(est, taus, tol)


def fit_scalar(target: np.ndarray, model: np.ndarray, floor: float = 1e-8) -> tuple[complex, np.ndarray]:
    """Least-squares lam with target ~ lam * model; returns lam and pointwise residuals.

    When the model vanishes (norm below ``floor`` times the number of points)
    the scalar is undetermined: lam is nan and the residuals measure target
    against zero.
    """
    target, model = np.ravel(target), np.ravel(model)
    nm = float(np.vdot(model, model).real)
    if nm <= (floor * model.size) ** 2:
        return complex("nan"), residual(target, 0)
    lam = complex(np.vdot(model, target) / nm)
    return lam, residual(target, lam * model)


def magnitude(elements: Sequence[SymElement], x: np.ndarray) -> np.ndarray:
    """Symmetrized product of |f_i|: the natural size of multilinear expressions in the f_i."""
    absd = [replace(f, fn=(lambda y, f=f: np.abs(f(y))), grad_fn=None) for f in elements]
    out = absd[0]
    for f in absd[1:]:
        out = sym_product(out, f)
    return np.abs(out(x))


# ---------------------------------------------------------------------------
# Membership


def bracket_poles(x: np.ndarray) -> np.ndarray:
    """Same-row differences between blocks: the kernel denominators."""
    return row_differences(x)


def sample_blocks(n_vec: Sequence[int], alpha: int, lat: LatticeParams, spec: SampleSpec, rng=None) -> np.ndarray:
    return sample(spec, (alpha, len(n_vec)), lat, bracket_poles, rng)


def membership_check(
    f: SymElement,
    n_vec: Sequence[int] | None = None,
    x: np.ndarray | None = None,
    tol: float = 1e-8,
    spec: SampleSpec = SampleSpec(),
) -> VerifyReport:
    """Block symmetry, +1 periodicity and the eta law in every variable.

    ``n_vec`` overrides the law checked (defaults to the element's own).
    """
    n_vec = tuple(f.n_vec if n_vec is None else n_vec)
    if len(n_vec) != f.p:
        raise ValueError("law and element have different block sizes")
    if x is None:
        x = sample_blocks(n_vec, f.alpha, f.lattice, spec)
    eta = f.lattice.eta
    base = f(x)
    parts = []
    sym = [residual(f(x[:, list(pm)]), base) for pm in itertools.permutations(range(f.alpha))]
    parts.append(VerifyReport.from_residuals("symmetry", np.concatenate(sym), tol))
    per, qp = [], []
    c = f.tau_tag if f.p == 1 else 0.0
    for lam, mu in itertools.product(range(f.alpha), range(f.p)):
        e = np.zeros(x.shape[1:])
        e[lam, mu] = 1
        per.append(residual(f(x + e), base))
        expo = n_vec[mu] * x[:, lam, mu] + c
        if mu > 0:
            expo = expo - x[:, lam, mu - 1]
        if mu < f.p - 1:
            expo = expo - x[:, lam, mu + 1]
        # undo the multiplier on the shifted value so rounding noise is not amplified by it
        qp.append(residual(f(x + eta * e) * np.exp(TWO_PI_I * expo), base))
    parts.append(VerifyReport.from_residuals("periodicity", np.concatenate(per), tol))
    parts.append(VerifyReport.from_residuals("quasi-periodicity", np.concatenate(qp), tol))
    return merge("membership", parts, spec.seed)
