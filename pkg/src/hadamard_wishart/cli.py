"""Command-line front end.

Exit codes: 0 success, 1 invalid arguments, 2 a deterministic invariant was
violated, 3 any other runtime failure (solver, bracket search).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import experiments as ex
from . import serialization
from .ensembles import EntryLaw, SeedSpec
from .errors import ConfigError, HadamardWishartError, InvariantViolation
from .spectral import EsdSample

THREADS_ENV = "HADAMARD_WISHART_THREADS"

log = logging.getLogger("hadamard_wishart")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_grid(text: str, kind=float) -> tuple:
    """Parse ``a,b,c`` or an inclusive ``lo:hi:step`` range."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(p) for p in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            vals = [round(lo + i * step, 12) for i in range(count)]
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
        if kind is int:
            if any(v != int(v) for v in vals):
                raise ValueError
            vals = [int(v) for v in vals]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty grid")
    return tuple(vals)


def _int_grid(text):
    return parse_grid(text, int)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _law(text):
    try:
        return EntryLaw.parse(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _s_value(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("s must lie in (0, 1]")
    return v


def _positive(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _tol(text):
    if text == "auto":
        return text
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("tol must be 'auto' or non-negative")
    return v


def emit_histogram(sample: EsdSample, bins: int) -> list[tuple[float, float, float]]:
    """Equal-width density histogram over ``[min, max]`` of the sample."""
    if bins < 1:
        raise ConfigError("bins must be >= 1")
    if sample.total == 0:
        raise ConfigError("empty sample")
    vals = sample.eigenvalues
    lo, hi = float(vals[0]), float(vals[-1])
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    widths = np.diff(edges)
    dens = counts / (sample.total * widths)
    return [(float(edges[i]), float(edges[i + 1]), float(dens[i])) for i in range(bins)]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="master seed (u64)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker processes (default: ${THREADS_ENV} or 1)")
    common.add_argument("--law", type=_law, default=EntryLaw("gaussian"),
                        help="gaussian | uniform01 | exp1 | cauchy | pareto:<b>, optional :std suffix")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="hadamard-wishart", description="Positivity of Hadamard powers of Wishart matrices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sc = sub.add_parser("scan", parents=[common], help="phase scan over (n, alpha)")
    sc.add_argument("--s", type=_s_value, required=True)
    sc.add_argument("--n", type=_int_grid, required=True)
    sc.add_argument("--alpha", type=parse_grid, required=True)
    sc.add_argument("--trials", type=_positive_int, default=10)
    sc.add_argument("--tol", type=_tol, default="auto")
    sc.add_argument("--format", choices=("json", "csv"), default="json",
                    help="json: ScanResult; csv: per-trial records")

    bd = sub.add_parser("boundary", parents=[common], help="bisect the positivity boundary in alpha")
    bd.add_argument("--s", type=_s_value, required=True)
    bd.add_argument("--n", type=_positive_int, required=True)
    bd.add_argument("--trials", type=_positive_int, default=5)
    bd.add_argument("--rule", type=float, default=0.5)
    bd.add_argument("--tol-alpha", type=_positive, default=0.02)
    bd.add_argument("--start", type=_positive, default=None)
    bd.add_argument("--step", type=_positive, default=0.05)

    tb = sub.add_parser("table1", parents=[common], help="reproduce the n=5000 smallest-eigenvalue table")
    tb.add_argument("--trials", type=_positive_int, default=5)
    tb.add_argument("--n", type=_positive_int, default=5000)
    tb.add_argument("--rows", choices=("all", "gated"), default="all")

    mo = sub.add_parser("moments", parents=[common], help="ESD moments of the centered matrix E")
    mo.add_argument("--s", type=_s_value, required=True)
    mo.add_argument("--n", type=_int_grid, required=True)
    mo.add_argument("--alpha", type=_positive, required=True)
    mo.add_argument("--trials", type=_positive_int, default=10)

    ks = sub.add_parser("ks-check", parents=[common], help="rank-perturbation KS bound")
    ks.add_argument("--s", type=_s_value, required=True)
    ks.add_argument("--n", type=_positive_int, required=True)
    ks.add_argument("--alpha", type=_positive, required=True)
    ks.add_argument("--resamples", type=_positive_int, default=50)

    ce = sub.add_parser("certify", parents=[common], help="spectral window [1-eps, 1+eps] for alpha > 2s")
    ce.add_argument("--s", type=_s_value, required=True)
    ce.add_argument("--n", type=_positive_int, required=True)
    ce.add_argument("--alpha", type=_positive, required=True)
    ce.add_argument("--eps", type=_positive, default=0.3)
    ce.add_argument("--trials", type=_positive_int, default=10)

    td = sub.add_parser("trace-decay", parents=[common], help="mean of Tr(C^2k) across n")
    td.add_argument("--k", type=_positive_int, required=True)
    td.add_argument("--s", type=_s_value, required=True)
    td.add_argument("--alpha", type=_positive, required=True)
    td.add_argument("--n", type=_int_grid, required=True)
    td.add_argument("--trials", type=_positive_int, default=30)

    hf = sub.add_parser("hf", parents=[common], help="Horn-Fitzgerald counterexample scan")
    hf.add_argument("--n", type=_positive_int, default=5)
    hf.add_argument("--alpha", type=_positive, required=True)
    hf.add_argument("--eps", type=parse_grid, default=tuple(10.0**-k for k in range(1, 7)),
                    help="descending eps grid")

    eh = sub.add_parser("esd-hist", parents=[common], help="histogram of the pooled ESD of E")
    eh.add_argument("--s", type=_s_value, required=True)
    eh.add_argument("--n", type=_positive_int, required=True)
    eh.add_argument("--alpha", type=_positive, required=True)
    eh.add_argument("--trials", type=_positive_int, default=10)
    eh.add_argument("--bins", type=_positive_int, default=50)
    eh.add_argument("--raw", action="store_true", help="emit eigenvalues instead of a histogram")
    return p


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer") from None
        if v < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer")
        return v
    return 1


def _dispatch(args) -> str:
    threads = _threads(args)
    cmd = args.command
    if cmd == "scan":
        cfg = ex.ScanConfig(args.law, args.s, tuple(sorted(args.n)), tuple(sorted(args.alpha)),
                            args.trials, args.seed, args.tol, threads)
        res = ex.run_phase_scan(cfg)
        if args.format == "csv":
            return serialization.csv_rows(ex.TrialRecord.CSV_HEADER, (r.csv_row() for r in res.records))
        return serialization.dumps(res)
    if cmd == "boundary":
        est = ex.estimate_boundary(args.n, args.s, args.law, args.trials, args.rule, args.tol_alpha,
                                   master_seed=args.seed, start=args.start, step=args.step, threads=threads)
        return serialization.dumps(est)
    if cmd == "table1":
        rows = ex.TABLE1_ROWS if args.rows == "all" else tuple(r for r in ex.TABLE1_ROWS if r[3])
        table = ex.reproduce_table1(args.seed, args.trials, n=args.n, rows=rows, law=args.law, threads=threads)
        return serialization.dumps({"n": args.n, "master_seed": args.seed, "rows": table})
    if cmd == "moments":
        reps = ex.moment_convergence_experiment(args.n, args.s, args.alpha, args.trials, law=args.law,
                                                master_seed=args.seed, threads=threads)
        return serialization.dumps(reps)
    if cmd == "ks-check":
        rep = ex.rank_perturbation_check(args.n, args.s, args.alpha, args.seed, args.resamples, law=args.law)
        return serialization.dumps(rep)
    if cmd == "certify":
        rep = ex.subgaussian_certificate_experiment(args.n, args.s, args.alpha, args.law, args.eps, args.trials,
                                                    master_seed=args.seed, threads=threads)
        return serialization.dumps(rep)
    if cmd == "trace-decay":
        pts = ex.trace_decay_experiment(args.k, args.s, args.alpha, args.n, args.trials, law=args.law,
                                        master_seed=args.seed, threads=threads)
        return serialization.dumps({"k": args.k, "s": args.s, "alpha": args.alpha, "points": pts})
    if cmd == "hf":
        return serialization.dumps(ex.hf_counterexample(args.n, args.alpha, args.eps))
    if cmd == "esd-hist":
        sample = ex.pooled_esd(args.n, args.s, args.alpha, args.trials, law=args.law,
                               master_seed=args.seed, threads=threads)
        if args.raw:
            return sample.to_csv()
        return serialization.csv_rows("bin_left,bin_right,density", emit_histogram(sample, args.bins))
    raise ConfigError(f"unknown command {cmd}")  # pragma: no cover


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = _dispatch(args)
    except ConfigError as e:
        print(f"hadamard-wishart: error: {e}", file=sys.stderr)
        return 1
    except InvariantViolation as e:
        print(f"hadamard-wishart: invariant violated: {e}", file=sys.stderr)
        return 2
    except HadamardWishartError as e:
        print(f"hadamard-wishart: {e}", file=sys.stderr)
        return 3
    serialization.write_text(text, args.out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
