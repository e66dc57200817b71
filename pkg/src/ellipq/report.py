"""Residual bookkeeping and seeded pole-avoiding samplers shared by every check."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ellipq.theta import LatticeParams


def residual(lhs, rhs) -> np.ndarray:
    """|lhs - rhs| / (1 + max(|lhs|, |rhs|)), elementwise."""
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    return np.abs(lhs - rhs) / (1 + np.maximum(np.abs(lhs), np.abs(rhs)))


def scaled_zero(value, *scales) -> np.ndarray:
    """Residual of an expression that should vanish, relative to its parts."""
    ref = np.zeros(np.shape(value))
    for s in scales:
        ref = np.maximum(ref, np.abs(s))
    return np.abs(value) / (1 + ref)


def _finite(v):
    """JSON has no nan/inf; they become null."""
    if isinstance(v, float) and not np.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _finite(x) for k, x in v.items()}
    return v


def _cplx(z):
    z = complex(z)
    return {"re": _finite(z.real), "im": _finite(z.imag)}


@dataclass
class VerifyReport:
    suite: str
    count: int
    max_residual: float
    mean_residual: float
    tol: float
    seed: int | None = None
    scalars: dict[str, complex] = field(default_factory=dict)
    details: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tol)

    @classmethod
    def from_residuals(cls, suite: str, res, tol: float, seed=None, **kw) -> "VerifyReport":
        res = np.atleast_1d(np.asarray(res, dtype=float))
        if np.any(~np.isfinite(res)):
            mx = mean = float("inf")
        else:
            mx, mean = float(res.max()), float(res.mean())
        return cls(suite, int(res.size), mx, mean, tol, seed, **kw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = self.passed
        out["scalars"] = {k: _cplx(v) for k, v in self.scalars.items()}
        return _finite(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = "".join(f" {k}={complex(v):.6g}" for k, v in self.scalars.items())
        return f"[{flag}] {self.suite}: max={self.max_residual:.3e} mean={self.mean_residual:.3e} tol={self.tol:.1e} n={self.count}{extra}"


def _ratio(res: float, tol: float) -> float:
    if tol > 0:
        return res / tol
    return 0.0 if res == 0 else float("inf")


def merge(suite: str, reports: list[VerifyReport], seed=None) -> VerifyReport:
    """Combine sub-reports with different tolerances.

    The composite residual is the worst ratio residual/tol over the parts and
    the composite tolerance is 1, so it passes exactly when every part does.
    An exact part (tol 0) contributes 0 or inf.  Raw per-part maxima and
    tolerances are kept in ``details``.
    """
    ratios = [_ratio(r.max_residual, r.tol) for r in reports]
    means = [_ratio(r.mean_residual, r.tol) for r in reports]
    out = VerifyReport(suite, sum(r.count for r in reports), max(ratios), float(np.mean(means)), 1.0, seed)
    for r in reports:
        out.scalars.update(r.scalars)
        out.details[r.suite] = r.max_residual
        out.details[f"{r.suite}/tol"] = r.tol
        out.details.update({f"{r.suite}/{k}": v for k, v in r.details.items()})
    return out


@dataclass(frozen=True)
class SampleSpec:
    seed: int = 0
    count: int = 20
    guard: float = 0.05

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.guard <= 0:
            raise ValueError("guard must be positive")


def fundamental(rng: np.random.Generator, shape, lat: LatticeParams) -> np.ndarray:
    """Points a + b*eta with a, b uniform in (0, 1)."""
    return rng.random(shape) + rng.random(shape) * lat.eta


def sample(
    spec: SampleSpec,
    shape: tuple[int, ...],
    lat: LatticeParams,
    poles: Callable[[np.ndarray], np.ndarray] | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw ``spec.count`` points of the given per-sample shape.

    ``poles(points)`` returns, per sample, an array (count, K) of linear-form
    values that must stay at least ``guard`` away from the lattice; offending
    samples are redrawn.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    out = fundamental(rng, (spec.count, *shape), lat)
    if poles is None:
        return out
    for _ in range(1000):
        vals = poles(out)
        if vals.size == 0:
            return out
        bad = np.any(lat.reduce_distance(vals.reshape(len(out), -1)) < spec.guard, axis=1)
        if not bad.any():
            return out
        out[bad] = fundamental(rng, (int(bad.sum()), *shape), lat)
    raise RuntimeError("could not draw points away from the pole loci")


def row_differences(x: np.ndarray) -> np.ndarray:
    """All differences x[:, i, r] - x[:, j, r] for i < j (blocks on axis 1)."""
    s, a = x.shape[:2]
    if a < 2:
        return np.zeros((s, 0), dtype=complex)
    i, j = np.triu_indices(a, 1)
    return (x[:, i] - x[:, j]).reshape(s, -1)


def failing_parts(rep: VerifyReport) -> list[str]:
    """Names of the merged parts that missed their own tolerance."""
    d = rep.details
    return [k for k in d if "/" not in k and f"{k}/tol" in d and not d[k] <= d[f"{k}/tol"]]
