"""Smith normal form of small integer matrices."""
from __future__ import annotations

import numpy as np


def smith_normal_form(a) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Return (diag, U, W) with U @ a @ W == diag(diag), U and W unimodular.

    Diagonal entries are nonnegative and each divides the next.  Works on
    Python ints internally, so entries never overflow.
    """
    m = [[int(x) for x in row] for row in np.asarray(a)]
    rows, cols = len(m), len(m[0]) if m else 0
    u = [[int(i == j) for j in range(rows)] for i in range(rows)]
    w = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_rows(x, i, j):
        x[i], x[j] = x[j], x[i]

    def swap_cols(x, i, j):
        for row in x:
            row[i], row[j] = row[j], row[i]

    def add_row(x, src, dst, q):  # row dst -= q * row src
        x[dst] = [b - q * a for a, b in zip(x[src], x[dst])]

    def add_col(x, src, dst, q):
        for row in x:
            row[dst] -= q * row[src]

    for s in range(min(rows, cols)):
        while True:
            nz = [(abs(m[i][j]), i, j) for i in range(s, rows) for j in range(s, cols) if m[i][j]]
            if not nz:
                return [m[i][i] for i in range(min(rows, cols))], np.array(u, dtype=np.int64), np.array(w, dtype=np.int64)
            _, pi, pj = min(nz)
            swap_rows(m, s, pi)
            swap_rows(u, s, pi)
            swap_cols(m, s, pj)
            swap_cols(w, s, pj)
            piv = m[s][s]
            clean = True
            for i in range(s + 1, rows):
                q = m[i][s] // piv
                add_row(m, s, i, q)
                add_row(u, s, i, q)
                clean &= m[i][s] == 0
            for j in range(s + 1, cols):
                q = m[s][j] // piv
                add_col(m, s, j, q)
                add_col(w, s, j, q)
                clean &= m[s][j] == 0
            if not clean:
                continue
            # divisibility: fold any offending row into row s and redo
            bad = next(((i, j) for i in range(s + 1, rows) for j in range(s + 1, cols) if m[i][j] % piv), None)
            if bad is None:
                break
            add_row(m, bad[0], s, -1)
            add_row(u, bad[0], s, -1)
        if m[s][s] < 0:
            m[s] = [-x for x in m[s]]
            u[s] = [-x for x in u[s]]
    return [m[i][i] for i in range(min(rows, cols))], np.array(u, dtype=np.int64), np.array(w, dtype=np.int64)
