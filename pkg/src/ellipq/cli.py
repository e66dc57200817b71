"""Command-line entry point: ellipq {dims,hilbert,verify,bracket-eval,theta-eval}."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from ellipq import graded, tensor, verify
from ellipq.report import SampleSpec, fundamental
from ellipq.seqcomb import d, hilbert_exponents, hilbert_tensor
from ellipq.theta import LatticeParams, cosets, gram_rank, multi_theta_basis, theta_deriv, theta_eval

EXIT_PASS, EXIT_FAIL, EXIT_UNKNOWN = 0, 1, 2
EXIT_USAGE = 2  # same code argparse uses for bad arguments


class UsageError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """Accepts "a+bi", "a+bj", "bi" or a plain real."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_seq(text: str) -> tuple[int, ...]:
    try:
        seq = tuple(int(v) for v in text.replace("(", "").replace(")", "").split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a sequence of integers: {text!r}") from None
    if not seq or min(seq) < 2:
        raise argparse.ArgumentTypeError(f"sequence entries must be integers >= 2: {text!r}")
    return seq


def cplx_json(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def lattice_from(args) -> LatticeParams:
    if args.eta.imag <= 0:
        raise UsageError("eta must have positive imaginary part")
    return LatticeParams(args.eta, args.radius)


def thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("ELLIPQ_THREADS")
    return max(1, int(env)) if env else 1


def parallel_rows(fn, x: np.ndarray, threads: int) -> np.ndarray:
    """Evaluate fn on row chunks of x; results are concatenated in input order."""
    if threads <= 1 or len(x) < 2:
        return fn(x)
    chunks = np.array_split(x, min(threads, len(x)))
    with ThreadPoolExecutor(threads) as pool:
        return np.concatenate(list(pool.map(fn, chunks)))


# ---------------------------------------------------------------------------
# points files


def write_points_csv(stream, names: Sequence[str], values: np.ndarray):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([f"{n}.{part}" for n in names for part in ("re", "im")])
    for row in values:
        w.writerow([repr(float(v)) for z in row for v in (z.real, z.imag)])


def read_points_csv(path: str, names: Sequence[str]) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty points file")
    header = [h.strip() for h in rows[0]]
    try:
        cols = [(header.index(f"{n}.re"), header.index(f"{n}.im")) for n in names]
    except ValueError:
        want = ", ".join(f"{n}.re/{n}.im" for n in names)
        raise UsageError(f"{path}: header must contain {want}") from None
    out = np.empty((len(rows) - 1, len(names)), dtype=complex)
    for i, row in enumerate(rows[1:], start=2):
        try:
            out[i - 2] = [complex(float(row[a]), float(row[b])) for a, b in cols]
        except (ValueError, IndexError):
            raise UsageError(f"{path}: malformed row {i}") from None
    if len(out) == 0:
        raise UsageError(f"{path}: no points")
    return out


def graded_names(n_vec: Sequence[int], alpha: int) -> list[str]:
    return [f"x_{{{a + 1},{i + 1}}}" for a in range(alpha) for i in range(len(n_vec))]


def tensor_names(lay: tensor.Layout) -> list[str]:
    names = [""] * lay.size
    for t, (seq, deg) in enumerate(zip(lay.seqs, lay.degrees)):
        for a in range(deg):
            for i in range(len(seq)):
                names[lay.col(t, a, i)] = f"x_{{{a + 1},{i + 1},{t + 1}}}"
    for t in range(lay.h - 1):
        names[lay.nx + t] = f"z_{{{t + 1},{t + 2}}}"
    return names


# ---------------------------------------------------------------------------
# subcommands


def cmd_dims(args, out) -> int:
    lat = lattice_from(args)
    rows = []
    rng = np.random.default_rng(args.seed)
    for n_vec in args.n_vec:
        basis = multi_theta_basis(n_vec, lat)
        z = fundamental(rng, (max(3 * len(basis), 20), len(n_vec)), lat)
        rank, _ = gram_rank(basis, z)
        rows.append({"n_vec": list(n_vec), "d": d(n_vec), "cosets": len(cosets(n_vec).labels), "rank": rank})
    if args.json:
        print(json.dumps(rows), file=out)
    else:
        print(f"{'n_vec':<16}{'d':>6}{'cosets':>8}{'rank':>6}", file=out)
        for r in rows:
            print(f"{','.join(map(str, r['n_vec'])):<16}{r['d']:>6}{r['cosets']:>8}{r['rank']:>6}", file=out)
    return EXIT_PASS


def cmd_hilbert(args, out) -> int:
    if args.cutoff <= 0:
        raise UsageError("cutoff must be positive")
    seqs = args.seqs
    ser = hilbert_tensor(seqs, args.cutoff)
    exps = hilbert_exponents(seqs)
    coeffs = sorted(ser.coeffs.items())
    if args.json:
        payload = {
            "seqs": [list(s) for s in seqs],
            "cutoff": args.cutoff,
            "factors": [{"range": [lam, nu], "seq": list(sq), "exponent": e} for (lam, nu), (sq, e) in sorted(exps.items())],
            "coefficients": [{"exponents": list(k), "value": v} for k, v in coeffs],
        }
        print(json.dumps(payload), file=out)
        return EXIT_PASS
    if args.csv:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"t{i + 1}" for i in range(len(seqs))] + ["coefficient"])
        for k, v in coeffs:
            w.writerow([*k, v])
        return EXIT_PASS
    for (lam, nu), (sq, e) in sorted(exps.items()):
        print(f"(1 - t{lam}..t{nu})^-{e}  from seq {','.join(map(str, sq))}", file=out)
    print("", file=out)
    for k, v in coeffs:
        print(f"{' '.join(f'{e:>3}' for e in k)}  {v}", file=out)
    return EXIT_PASS


def parse_params(items: Sequence[str]) -> dict:
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param needs key=value, got {item!r}")
        try:
            params[key.replace("-", "_")] = json.loads(value)
        except json.JSONDecodeError:
            params[key.replace("-", "_")] = value
    return params


def cmd_verify(args, out) -> int:
    if args.suite not in verify.SUITES:
        print(f"unknown suite {args.suite!r}; known: {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_UNKNOWN
    params = parse_params(args.param)
    if args.tau is not None:
        params.setdefault("tau", args.tau)
    rep = verify.run_suite(args.suite, params, seed=args.seed, tol=args.tol, lattice=lattice_from(args), threads=thread_count(args))
    if args.json:
        print(rep.to_json(), file=out)
    else:
        print(rep.line(), file=out)
        for k, v in rep.details.items():
            if "/" not in k:
                print(f"  {k}: {v:.3e}", file=out)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _pair(text: str) -> tuple[str, str]:
    a, sep, b = text.partition(":")
    if not sep:
        raise UsageError(f"element pair must look like a:b, got {text!r}")
    return a, b


def cmd_bracket_eval(args, out) -> int:
    lat = lattice_from(args)
    threads = thread_count(args)
    pairs = [_pair(p) for p in args.pairs]
    if args.n_vec is not None:
        n_vec = args.n_vec
        basis = graded.degree_one_basis(n_vec, lat)
        try:
            els = {k: basis[int(k)] for p in pairs for k in p}
        except (ValueError, IndexError):
            raise UsageError(f"element indices must lie in 0..{len(basis) - 1}") from None
        names = graded_names(n_vec, 2)
        if args.points:
            x = read_points_csv(args.points, names)
        else:
            x = graded.sample_blocks(n_vec, 2, lat, SampleSpec(seed=args.seed, count=args.count)).reshape(args.count, -1)
        shape = (2, len(n_vec))
        cols = [graded.bracketN(els[a], els[b]) for a, b in pairs]
        values = [parallel_rows(lambda y, c=c: c(y.reshape(len(y), *shape)), x, threads) for c in cols]
    else:
        seqs = args.seqs
        bases = [multi_theta_basis(s, lat) for s in seqs]

        def element(key: str) -> tensor.TensorElement:
            t, sep, i = key.partition("/")
            try:
                return tensor.degree_one(bases[int(t)][int(i)], int(t), seqs)
            except (ValueError, IndexError):
                raise UsageError(f"tensor element must be factor/index, got {key!r}") from None

        cols = [tensor.tensor_bracket(element(a), element(b)) for a, b in pairs]
        lays = {c.layout for c in cols}
        if len(lays) != 1:
            raise UsageError("all pairs must produce brackets on the same factor degrees")
        lay = lays.pop()
        names = tensor_names(lay)
        if args.points:
            x = read_points_csv(args.points, names)
        else:
            x = tensor.sample_tensor(lay, lat, SampleSpec(seed=args.seed, count=args.count))
        values = [parallel_rows(c, x, threads) for c in cols]
    labels = [f"{{{a},{b}}}" for a, b in pairs]
    table = np.concatenate([x, np.stack(values, axis=1)], axis=1)
    if args.json:
        rows = [{n: cplx_json(v) for n, v in zip(names + labels, row)} for row in table]
        print(json.dumps(rows), file=out)
    else:
        write_points_csv(out, names + labels, table)
    return EXIT_PASS


def cmd_theta_eval(args, out) -> int:
    lat = lattice_from(args)
    if args.points:
        z = read_points_csv(args.points, ["z"])[:, 0]
    elif args.z:
        z = np.array(args.z, dtype=complex)
    else:
        z = fundamental(np.random.default_rng(args.seed), (args.count,), lat)
    th = parallel_rows(lambda v: theta_eval(v, lat), z, thread_count(args))
    cols = {"z": z, "theta": th}
    if args.deriv:
        cols["theta_prime"] = theta_deriv(z, lat)
    if args.json:
        print(json.dumps([{k: cplx_json(v[i]) for k, v in cols.items()} for i in range(len(z))]), file=out)
    else:
        write_points_csv(out, list(cols), np.stack(list(cols.values()), axis=1))
    return EXIT_PASS


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eta", type=parse_complex, default=verify.DEFAULT_ETA, help='lattice parameter, e.g. "0.3+0.8i"')
    common.add_argument("--tau", type=parse_complex, default=None, help="deformation parameter for quantum suites")
    common.add_argument("--radius", type=int, default=None, help="theta series truncation radius")
    common.add_argument("--tol", type=float, default=None, help="override every verification tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (fallback: ELLIPQ_THREADS)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", metavar="FILE", help="write output to FILE instead of stdout")

    p = argparse.ArgumentParser(prog="ellipq", description="Elliptic Poisson algebras and their quantizations, numerically.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dims", parents=[common], help="dimension, coset count and Gram rank of theta spaces")
    s.add_argument("n_vec", type=parse_seq, nargs="+", help="comma-separated sequences, e.g. 3,4,2")
    s.set_defaults(func=cmd_dims)

    s = sub.add_parser("hilbert", parents=[common], help="Hilbert series coefficients of a tensor product")
    s.add_argument("seqs", type=parse_seq, nargs="+", help="one comma-separated sequence per factor")
    s.add_argument("--cutoff", type=int, default=4, help="largest exponent per variable")
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=cmd_hilbert)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("suite", help=", ".join(verify.SUITES))
    s.add_argument("--param", action="append", metavar="KEY=VALUE", help="suite parameter, VALUE parsed as JSON")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bracket-eval", parents=[common], help="evaluate brackets of basis elements at points")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--n-vec", type=parse_seq, help="single-factor mode: elements are basis indices")
    mode.add_argument("--seqs", type=parse_seq, nargs="+", help="tensor mode: elements are factor/index")
    s.add_argument("--pairs", nargs="+", required=True, metavar="A:B")
    s.add_argument("--points", metavar="CSV", help="points file; sampled from --seed when absent")
    s.add_argument("--count", type=int, default=10)
    s.set_defaults(func=cmd_bracket_eval)

    s = sub.add_parser("theta-eval", parents=[common], help="evaluate the odd theta function")
    s.add_argument("z", type=parse_complex, nargs="*")
    s.add_argument("--points", metavar="CSV", help="points file with columns z.re,z.im")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--deriv", action="store_true", help="also emit the derivative")
    s.set_defaults(func=cmd_theta_eval)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except (UsageError, ValueError) as exc:
        print(f"ellipq {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
