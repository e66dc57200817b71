"""Theta functions of the lattice Z + eta*Z and Fourier-orbit bases of theta spaces.

All series are evaluated as finite sums of exponentials ``exp(2*pi*i*(...))``.
Evaluation is vectorized: point arguments are complex numpy arrays of any
shape, and the trailing axis carries the variables of multi-variable
functions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ellipq.seqcomb import d
from ellipq.smith import smith_normal_form

TWO_PI_I = 2j * np.pi


class PoleProximityError(ValueError):
    """Raised when a kernel is evaluated too close to one of its poles."""


def radius_for(eta: complex, tol: float) -> int:
    """Smallest R with exp(-2*pi*Im(eta)*R**2/4) < tol."""
    b = complex(eta).imag
    r = 1
    while math.exp(-2 * math.pi * b * r * r / 4) >= tol:
        r += 1
    return r


@dataclass(frozen=True)
class LatticeParams:
    """Elliptic curve C/(Z + eta Z) plus the series truncation policy.

    ``radius=None`` picks the radius from ``tol``.
    """

    eta: complex = 1j
    radius: int | None = None
    tol: float = 1e-17

    def __post_init__(self):
        eta = complex(self.eta)
        if not np.isfinite(eta) or eta.imag <= 0:
            raise ValueError(f"Im(eta) must be > 0, got eta={eta}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "eta", eta)
        if self.radius is None:
            object.__setattr__(self, "radius", radius_for(eta, self.tol))
        elif int(self.radius) < 1:
            raise ValueError("radius must be >= 1")

    @cached_property
    def theta_prime0(self) -> complex:
        return complex(theta_deriv(0.0, self))

    def reduce_distance(self, w) -> np.ndarray:
        """Distance from w to the nearest lattice point (approximate, via rounding)."""
        w = np.asarray(w, dtype=complex)
        b = w.imag / self.eta.imag
        w = w - np.round(b) * self.eta
        w = w - np.round(w.real)
        best = np.abs(w)
        for da, db in itertools.product((-1, 0, 1), repeat=2):
            best = np.minimum(best, np.abs(w + da + db * self.eta))
        return best


def _check_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite argument")
    return z


def _theta_terms(z: np.ndarray, lat: LatticeParams):
    # window of summation indices centred on the dominant term for each z
    b = lat.eta.imag
    centre = np.round(0.5 - z.imag / b)
    offs = np.arange(-lat.radius, lat.radius + 1)
    a = centre[..., None] + offs
    sign = 1 - 2 * (np.abs(a) % 2)
    phase = np.exp(TWO_PI_I * (a * z[..., None] + a * (a - 1) / 2 * lat.eta))
    return a, sign * phase


def theta_eval(z, lat: LatticeParams):
    """theta(z) = sum_a (-1)^a exp(2 pi i (a z + a(a-1)/2 eta))."""
    z = _check_points(z)
    _, terms = _theta_terms(z, lat)
    return terms.sum(axis=-1)


def theta_deriv(z, lat: LatticeParams):
    """Term-wise derivative of the truncated theta series."""
    z = _check_points(z)
    a, terms = _theta_terms(z, lat)
    return (TWO_PI_I * a * terms).sum(axis=-1)


def theta_deriv2(z, lat: LatticeParams):
    z = _check_points(z)
    a, terms = _theta_terms(z, lat)
    return ((TWO_PI_I * a) ** 2 * terms).sum(axis=-1)


def theta_logd(z, lat: LatticeParams, floor: float = 1e-10):
    """theta'(z)/theta(z); raises PoleProximityError near lattice points."""
    z = _check_points(z)
    a, terms = _theta_terms(z, lat)
    val = terms.sum(axis=-1)
    der = (TWO_PI_I * a * terms).sum(axis=-1)
    scale = np.abs(terms).max(axis=-1)
    if np.any(np.abs(val) < floor * scale):
        raise PoleProximityError("theta_logd evaluated at a zero of theta")
    return der / val


# ---------------------------------------------------------------------------
# Theta spaces


@dataclass(frozen=True)
class ThetaTag:
    """Quasi-periodicity law: scalar (order m, shift c) or multi (n_1..n_p)."""

    m: int | None = None
    c: complex = 0.0
    n_vec: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.m is None) == (self.n_vec is None):
            raise ValueError("ThetaTag needs exactly one of m or n_vec")
        if self.m is not None and self.m < 1:
            raise ValueError("scalar tag needs m >= 1")
        if self.n_vec is not None:
            object.__setattr__(self, "n_vec", tuple(int(n) for n in self.n_vec))
            if any(n < 2 for n in self.n_vec):
                raise ValueError("multi tag needs every n_i >= 2")

    @classmethod
    def scalar(cls, m: int, c: complex = 0.0) -> "ThetaTag":
        return cls(m=m, c=complex(c))

    @classmethod
    def multi(cls, n_vec: Sequence[int]) -> "ThetaTag":
        return cls(n_vec=tuple(n_vec))

    @property
    def nvars(self) -> int:
        return 1 if self.m is not None else len(self.n_vec)

    def multiplier(self, z: np.ndarray, var: int) -> np.ndarray:
        """exp(-2 pi i (...)) picked up by f when z[..., var] += eta."""
        if self.m is not None:
            return np.exp(-TWO_PI_I * (self.m * z[..., 0] + self.c))
        n = self.n_vec
        expo = n[var] * z[..., var]
        if var > 0:
            expo = expo - z[..., var - 1]
        if var < len(n) - 1:
            expo = expo - z[..., var + 1]
        return np.exp(-TWO_PI_I * expo)


@dataclass(frozen=True, eq=False)
class ThetaElement:
    """f(z) = sum_k c_k exp(2 pi i k.z), coefficients stored as exponents.

    ``exponents[j]`` is log c_{k_j}; only finite sums are stored, pruned of
    negligible terms at construction.
    """

    tag: ThetaTag
    ks: np.ndarray  # (T, p) integer frequency vectors
    exponents: np.ndarray  # (T,) complex
    lattice: LatticeParams
    weight: complex = 1.0
    label: str = field(default="")

    @property
    def nvars(self) -> int:
        return self.ks.shape[1]

    @property
    def terms(self) -> dict[tuple[int, ...], complex]:
        vals = self.weight * np.exp(self.exponents)
        return {tuple(int(x) for x in k): complex(v) for k, v in zip(self.ks, vals) if v != 0}

    def _phases(self, z):
        z = np.asarray(z, dtype=complex)
        if self.nvars == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        return z, np.exp(TWO_PI_I * (z @ self.ks.T) + self.exponents)

    def __call__(self, z):
        """Evaluate at points z of shape (..., p) (or (...) when p == 1)."""
        _, ph = self._phases(z)
        return self.weight * ph.sum(axis=-1)

    def grad(self, z):
        """All partial derivatives, shape (..., p)."""
        _, ph = self._phases(z)
        return self.weight * TWO_PI_I * (ph @ self.ks)

    def scaled(self, w: complex) -> "ThetaElement":
        return ThetaElement(self.tag, self.ks, self.exponents, self.lattice, self.weight * w, self.label)


# evaluation band for Im of every variable, in units of Im(eta): the fundamental
# domain plus room for one eta-shift and small perturbations
BAND = (-0.5, 2.5)


def _pruned(tag, ks, expo, lat, label, margin: float = 60.0):
    """Drop terms below exp(-margin) times the dominant term everywhere in the band."""
    ks = np.asarray(ks, dtype=float)
    b = lat.eta.imag
    grid = np.array(list(itertools.product(np.linspace(BAND[0] * b, BAND[1] * b, 7), repeat=ks.shape[1])))
    logmag = expo.real[None, :] - 2 * np.pi * (grid @ ks.T)
    keep = (logmag >= logmag.max(axis=1, keepdims=True) - margin).any(axis=0)
    return ThetaElement(tag, ks[keep], expo[keep], lat, 1.0, label)


def linear_combination(elements: Sequence[ThetaElement], weights: Sequence[complex], label: str = "") -> ThetaElement:
    """sum_j w_j f_j as one element; all inputs must share tag and lattice."""
    first = elements[0]
    if any(e.tag != first.tag or e.lattice != first.lattice for e in elements):
        raise ValueError("linear_combination needs a common tag and lattice")
    expo = np.concatenate([e.exponents + np.log(complex(w * e.weight)) for e, w in zip(elements, weights) if w != 0])
    ks = np.concatenate([e.ks for e, w in zip(elements, weights) if w != 0])
    return ThetaElement(first.tag, ks, expo, first.lattice, 1.0, label)


def theta_basis(m: int, c: complex, lat: LatticeParams) -> list[ThetaElement]:
    """Basis of Theta_{m,c}: one orbit element per residue class of k mod m.

    Coefficients satisfy c_{k+m} = exp(2 pi i (k eta + c)) c_k with c_r = 1
    for the representative 0 <= r < m.
    """
    if m < 1:
        raise ValueError("theta_basis needs m >= 1")
    c = complex(c)
    span = lat.radius + 3
    out = []
    for r in range(m):
        ks, expo = [], []
        for j in range(-span, span + 1):
            # sum_{i=0}^{j-1} (r + i m) eta + j c, valid for negative j as well
            s = j * r + m * j * (j - 1) // 2
            ks.append([r + j * m])
            expo.append(TWO_PI_I * (s * lat.eta + j * c))
        out.append(_pruned(ThetaTag.scalar(m, c), np.array(ks), np.array(expo), lat, f"theta[{m},{r}]"))
    return out


def tridiagonal(n_vec: Sequence[int]) -> np.ndarray:
    p = len(n_vec)
    v = np.diag(np.asarray(n_vec, dtype=np.int64))
    for i in range(p - 1):
        v[i, i + 1] = v[i + 1, i] = -1
    return v


def accumulate_exponent(start: np.ndarray, steps: np.ndarray, v: np.ndarray, order: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Walk from ``start`` by steps[:, a] copies of row v[a], axes in ``order``.

    Returns the end points and the integer S with c_end = exp(2 pi i eta S) c_start,
    accumulated segment by segment from c_{k+v_a} = exp(2 pi i k_a eta) c_k.
    """
    k = np.broadcast_to(np.asarray(start, dtype=np.int64), steps.shape).copy()
    s = np.zeros(steps.shape[0], dtype=np.int64)
    for a in order:
        m = steps[:, a]
        s += m * k[:, a] + v[a, a] * m * (m - 1) // 2
        k += m[:, None] * v[a][None, :]
    return k, s


@dataclass(frozen=True)
class CosetData:
    diag: tuple[int, ...]
    labels: list[tuple[int, ...]]
    reps: np.ndarray  # (d, p)


def cosets(n_vec: Sequence[int]) -> CosetData:
    """Representatives of Z^p / V Z^p via Smith normal form U V W = D."""
    v = tridiagonal(n_vec)
    dg, u, _ = smith_normal_form(v)
    uinv = np.rint(np.linalg.inv(u)).astype(np.int64)
    vinv = np.linalg.inv(v.astype(float))
    labels, reps = [], []
    for x in itertools.product(*(range(s) for s in dg)):
        r = uinv @ np.array(x, dtype=np.int64)
        # shorten the representative: subtract the nearest lattice vector V m
        r = r - v @ np.rint(vinv @ r).astype(np.int64)
        labels.append(tuple(x))
        reps.append(r)
    return CosetData(tuple(int(s) for s in dg), labels, np.array(reps, dtype=np.int64).reshape(len(labels), len(n_vec)))


def multi_theta_basis(n_vec: Sequence[int], lat: LatticeParams, radius: int | None = None) -> list[ThetaElement]:
    """Basis of Theta_{(n_1..n_p)}, one element per coset of V Z^p."""
    n_vec = tuple(int(n) for n in n_vec)
    if not n_vec or any(n < 2 for n in n_vec):
        raise ValueError("multi_theta_basis needs a nonempty sequence with every n_i >= 2")
    p = len(n_vec)
    v = tridiagonal(n_vec)
    cs = cosets(n_vec)
    if len(cs.labels) != d(n_vec):
        raise AssertionError("coset count disagrees with d(n_vec)")
    rad = (lat.radius + 2) if radius is None else radius
    grid = np.array(list(itertools.product(range(-rad, rad + 1), repeat=p)), dtype=np.int64)
    tag = ThetaTag.multi(n_vec)
    out = []
    for lab, r in zip(cs.labels, cs.reps):
        ks, s = accumulate_exponent(r, grid, v, range(p))
        out.append(_pruned(tag, ks, TWO_PI_I * lat.eta * s, lat, f"theta{n_vec}{lab}"))
    return out


def quasi_periodicity_residual(f: ThetaElement, z: np.ndarray) -> float:
    """Max residual of the +1 and +eta laws over all variables, relative to |f|."""
    z = np.asarray(z, dtype=complex)
    if f.nvars == 1 and (z.ndim == 1):
        z = z[:, None]
    base = f(z)
    scale = 1 + np.abs(base)
    worst = 0.0
    for var in range(f.nvars):
        e = np.zeros(f.nvars)
        e[var] = 1
        worst = max(worst, float(np.max(np.abs(f(z + e) - base) / scale)))
        lhs = f(z + f.lattice.eta * e)
        rhs = f.tag.multiplier(z, var) * base
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / (1 + np.maximum(np.abs(lhs), np.abs(rhs))))))
    return worst


def gram_rank(elements: Sequence[ThetaElement], z: np.ndarray, cutoff: float = 1e-8) -> tuple[int, np.ndarray]:
    """Numerical rank of the Gram matrix of the elements sampled at the points z.

    The sample matrix is equilibrated (rows and columns scaled to unit norm a
    few times) first; that leaves the rank alone but removes the spread in
    magnitude that theta functions pick up across the fundamental domain.
    Returns the rank at the relative cutoff and the Gram singular values.
    """
    z = np.asarray(z, dtype=complex)
    m = np.stack([f(z) for f in elements], axis=1)
    for _ in range(3):
        m = m / np.linalg.norm(m, axis=1, keepdims=True)
        m = m / np.linalg.norm(m, axis=0, keepdims=True)
    sv = np.linalg.svd(m.conj().T @ m, compute_uv=False)
    return int(np.sum(sv > cutoff * sv[0])), sv
