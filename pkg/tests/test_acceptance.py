"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line (visible in the pytest output and
when this file is run as a script) and then asserts the criterion at its own
tolerance.
"""
import sys
import time

import pytest

from ellipq.report import failing_parts
from ellipq.verify import run_suite

# (number, title, suite, params, runtime budget in seconds or None)
CRITERIA = [
    (1, "theta identities", "theta-identities", {}, 1.0),
    (2, "theta space dimensions", "dimension-rank", {}, 10.0),
    (3, "continued fractions and Hilbert series", "hilbert-crosscheck", {}, None),
    (4, "star product", "star-associativity", {"n": [2, 3]}, None),
    (5, "Poisson axioms", "poisson-axioms", {}, None),
    (6, "semiclassical limit", "semiclassical", {"n": [2, 3]}, None),
    (7, "bosonization consistency", "boson-consistency", {"words": 200}, None),
    (8, "bosonization homomorphism", "boson-homomorphism", {"n": [2, 3], "sites": 3}, None),
    (9, "tensor structures", "tensor-axioms", {}, None),
    (10, "shift constants and adjacent commutators", "boson-semiclassical", {}, None),
]


def evaluate(number, title, suite, params, budget):
    start = time.perf_counter()
    rep = run_suite(suite, params)
    elapsed = time.perf_counter() - start
    ok = rep.passed and (budget is None or elapsed < budget)
    failing = failing_parts(rep)
    extra = "".join(f" {k}={complex(v):.6g}" for k, v in rep.scalars.items())
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: worst/tol={rep.max_residual:.3e} time={elapsed:.2f}s{extra}"
    if failing:
        line += " failing: " + ", ".join(failing)
    return ok, line, rep


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(criterion, capsys):
    ok, line, rep = evaluate(*criterion)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, line, _ in results:
        print(line)
    sys.exit(0 if all(ok for ok, _, _ in results) else 1)
