"""Command-line front end: ``xcomp {build,apply,verify,bench}``.

Exit codes: 0 success, 2 usage or invalid input, 3 numeric failure,
4 node digest mismatch, 5 tolerance exceeded, 6 I/O failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import registry
from .compressor import PRESETS
from .errors import (
    FormatError,
    IntegrityError,
    InvalidArgumentError,
    InvalidStateError,
    NumericFailureError,
)
from .oracle import error_report
from .persistence import OperatorFile, export_csv, load_operator, save_operator

EXIT_USAGE, EXIT_NUMERIC, EXIT_INTEGRITY, EXIT_TOLERANCE, EXIT_IO = 2, 3, 4, 5, 6


class _Tolerance(Exception):
    pass


def _emit(pairs, out=None):
    out = out or sys.stdout
    for k, v in pairs.items():
        if isinstance(v, float):
            v = repr(float(v))
        print(f"{k}={v}", file=out)


def read_vector(path):
    """One sample per line, ``re im`` or ``re``; blank lines and ``#`` comments skipped."""
    vals = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) > 2:
                    raise InvalidArgumentError(f"{path}:{lineno}: expected 're [im]'")
                try:
                    vals.append(complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0))
                except ValueError:
                    raise InvalidArgumentError(f"{path}:{lineno}: not a number: {line!r}") from None
    except OSError as exc:
        raise OSError(f"cannot read vector {path}: {exc}") from exc
    return np.array(vals, dtype=np.complex128)


def write_vector(path, x):
    x = np.asarray(x, dtype=np.complex128)
    try:
        with open(path, "w") as fh:
            for v in x:
                fh.write(f"{float(v.real)!r} {float(v.imag)!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write vector {path}: {exc}") from exc


def _descriptor(args):
    if args.preset:
        cfg = PRESETS[args.preset]
        eps1, eps2, policy, bw = cfg.eps1, cfg.eps2, cfg.band_policy, cfg.bw
    else:
        eps1, eps2, policy, bw = args.eps1, args.eps2, args.band_policy, args.bw
    d = {
        "transform": args.transform, "n": args.n, "m": args.m or args.n, "nodes": args.nodes,
        "eps1": eps1, "eps2": eps2, "band_policy": policy, "bw": bw,
        "fast": bool(getattr(args, "fast_precompute", False)),
        "eta": args.eta, "t_max": args.t_max, "period": args.period,
        "direction": getattr(args, "direction", None) or "backward",
    }
    family, _ = registry.parse_transform(d["transform"])
    if family == "laguerre-spectral":
        d["direction"] = "forward"
    registry.config_of(d)
    if d["n"] < 1 or d["m"] < 1:
        raise InvalidArgumentError("--n and --m must be positive")
    return d


def cmd_build(args):
    d = _descriptor(args)
    t0 = time.perf_counter()
    obj = registry.build(d, threads=args.threads)
    seconds = time.perf_counter() - t0
    save_operator(obj, args.out, descriptor=d, nodes=registry.nodes_of(d))
    st = registry.stats(obj, d)
    _emit({"transform": d["transform"], "n": d["n"], "m": d["m"],
           "config": registry.config_of(d).describe(), "build_seconds": seconds, **st,
           "out": args.out})
    return 0


def _direction(args, f):
    dirs = registry.directions(f.descriptor)
    direction = args.direction or dirs[0]
    if direction not in dirs:
        raise InvalidArgumentError(
            f"operator supports {'/'.join(dirs)}, not {direction}")
    return direction


def cmd_apply(args):
    f = load_operator(args.op)
    if args.nodes:
        f.check_nodes(registry.nodes_of(f.descriptor, args.nodes))
    direction = _direction(args, f)
    x = read_vector(getattr(args, "in"))
    want = registry.input_length(f.descriptor, direction)
    if x.size != want:
        raise InvalidArgumentError(f"input has {x.size} samples, operator expects {want}")
    write_vector(args.out, registry.apply(f.operator, x, direction))
    return 0


def cmd_verify(args):
    f = load_operator(args.op)
    d = f.descriptor
    direction = _direction(args, f)
    f.check_nodes(registry.nodes_of(d))
    a = registry.dense_matrix(d)
    rng = np.random.default_rng(args.seed)
    n_in = registry.input_length(d, direction)
    worst = None
    for _ in range(args.trials):
        x = rng.random(n_in)
        rep = error_report(registry.apply(f.operator, x, direction),
                           registry.reference(a, x, direction))
        worst = rep if worst is None else worst.worst(rep)
    ok = worst.max_rel_inf <= args.tol
    _emit({"transform": d["transform"], "n": d["n"], "direction": direction,
           "trials": args.trials, "max_rel_inf": worst.max_rel_inf, "rel_l2": worst.rel_l2,
           "tol": args.tol, "pass": int(ok)})
    if not ok:
        raise _Tolerance()
    return 0


def parse_sizes(text):
    """``2^10..2^16`` (powers of two), ``a..b`` (powers of two between) or ``a,b,c``."""
    def one(tok):
        tok = tok.strip()
        if "^" in tok:
            base, exp = tok.split("^")
            return int(base) ** int(exp)
        return int(tok)

    try:
        if ".." in text:
            lo, hi = (one(t) for t in text.split(".."))
            out, k = [], 1
            while k <= hi:
                if k >= lo:
                    out.append(k)
                k *= 2
            return out
        return [one(t) for t in text.split(",")]
    except ValueError:
        raise InvalidArgumentError(f"cannot parse sizes {text!r}") from None


def _time_apply(fn, reps):
    fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_records(args, log=None):
    """Benchmark rows for every size; see :func:`cmd_bench`."""
    records = []
    family, p = registry.parse_transform(args.transform)
    rng = np.random.default_rng(args.seed)
    for n in parse_sizes(args.sizes):
        args.n, args.m = n, n
        d = _descriptor(args)
        cfg = registry.config_of(d).describe()
        direction = registry.directions(d)[0]

        def row(stage, seconds, err=float("nan"), sparsity=float("nan")):
            rec = {"n": n, "transform": d["transform"], "config": cfg, "stage": stage,
                   "seconds": seconds, "max_rel_err": err, "sparsity": sparsity}
            records.append(rec)
            if log:
                print(",".join(str(rec[k]) for k in rec), file=log, flush=True)

        t0 = time.perf_counter()
        obj = registry.build(d, threads=args.threads, fast=False)
        row("precompute-dense", time.perf_counter() - t0,
            sparsity=registry.stats(obj, d)["sparsity"])
        if family in ("trig", "laguerre-spectral") and p.get("p", 1) == 1:
            t0 = time.perf_counter()
            fobj = registry.build(d, threads=args.threads, fast=True)
            row("precompute-fast", time.perf_counter() - t0,
                sparsity=registry.stats(fobj, d)["sparsity"])
        x = rng.random(registry.input_length(d, direction))
        got = registry.apply(obj, x, direction)
        err = float("nan")
        a = None
        if n <= args.max_direct_n:
            a = registry.dense_matrix(d)
            err = error_report(got, registry.reference(a, x, direction)).max_rel_inf
        row("apply-compressed", _time_apply(lambda: registry.apply(obj, x, direction), args.reps),
            err, registry.stats(obj, d)["sparsity"])
        if a is not None:
            at = a.T.copy() if direction == "forward" else a
            row("apply-direct", _time_apply(lambda: at @ x, args.reps), 0.0, 1.0)
            del a, at
    return records


def cmd_bench(args):
    records = bench_records(args, log=sys.stderr if args.verbose else None)
    export_csv(records, args.csv)
    _emit({"rows": len(records), "csv": args.csv})
    return 0


def _add_transform_flags(p, need_out):
    p.add_argument("--transform", required=True,
                   help="cos | cos-power:p | sin | exp | chebyshev | jacobi:a,b | legendre | "
                        "laguerre-spectral | laguerre-time")
    p.add_argument("--n", type=int, help="number of nodes (rows of the matrix)")
    p.add_argument("--m", type=int, help="number of coefficients (default: n)")
    p.add_argument("--nodes", default=None,
                   help="chebyshev | equispaced | file:<path> (trig: node angles)")
    p.add_argument("--eps1", type=float, default=1e-10, help="compression threshold")
    p.add_argument("--eps2", type=float, default=1e-3, help="extra-component threshold")
    p.add_argument("--band-policy", choices=("threshold", "fixed"), default="threshold")
    p.add_argument("--bw", type=int, default=None, help="entries per peak for --band-policy fixed")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="named eps1/eps2/policy set; overrides the individual flags")
    p.add_argument("--fast-precompute", action="store_true",
                   help="convolution precompute for cos/sin/exp rows")
    p.add_argument("--direction", choices=("backward", "forward"), default=None)
    p.add_argument("--eta", type=float, default=1000.0, help="Laguerre scale parameter")
    p.add_argument("--t-max", type=float, default=12.0, help="last sample time (laguerre-time)")
    p.add_argument("--period", type=float, default=4.0, help="period L (laguerre-spectral)")
    p.add_argument("--threads", type=int, default=None,
                   help="FFT workers for the build (default: $XCOMP_THREADS or 1)")
    if need_out:
        p.add_argument("--out", required=True, help="operator file to write")


def make_parser():
    parser = argparse.ArgumentParser(prog="xcomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="precompute and save a compressed operator")
    _add_transform_flags(b, need_out=True)
    b.set_defaults(func=cmd_build)

    a = sub.add_parser("apply", help="apply a saved operator to a vector file")
    a.add_argument("--op", required=True)
    a.add_argument("--in", required=True, help="input vector file")
    a.add_argument("--out", required=True, help="output vector file")
    a.add_argument("--direction", choices=("backward", "forward"), default=None)
    a.add_argument("--nodes", default=None,
                   help="grid the caller expects; a digest mismatch exits with 4")
    a.set_defaults(func=cmd_apply)

    v = sub.add_parser("verify", help="compare a saved operator with the direct product")
    v.add_argument("--op", required=True)
    v.add_argument("--trials", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-7)
    v.add_argument("--direction", choices=("backward", "forward"), default=None)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("bench", help="time precompute and apply stages into a CSV")
    _add_transform_flags(e, need_out=False)
    e.add_argument("--sizes", default="2^10..2^12", help="e.g. 2^10..2^16 or 256,512")
    e.add_argument("--reps", type=int, default=1000)
    e.add_argument("--csv", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-direct-n", type=int, default=16384,
                   help="largest n for which the dense matrix is built")
    e.add_argument("--verbose", action="store_true", help="echo rows to stderr")
    e.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        os.environ["XCOMP_THREADS"] = str(args.threads)
    if args.command == "build" and args.n is None:
        parser.error("build needs --n")
    try:
        return args.func(args)
    except _Tolerance:
        return EXIT_TOLERANCE
    except (InvalidArgumentError, InvalidStateError) as exc:
        print(f"xcomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailureError as exc:
        print(f"xcomp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IntegrityError as exc:
        print(f"xcomp: integrity: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (OSError, FormatError) as exc:
        print(f"xcomp: I/O: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
