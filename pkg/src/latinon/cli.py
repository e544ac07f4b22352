"""Command line interface: ``latinon <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 budget error.
Tables go out as CSV, structured reports as JSON, squares in ``.ls`` format.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from . import exceptions as exc
from .density import density_exact, density_vector, step_density_exact
from .distance import delta_lower, delta_upper
from .experiments import SQUARE_FAMILIES, convergence_table, generate, latinon_family, swap_experiment
from .io import format_ls, latinon_to_dict, parse_ls, read_latinon, read_ls, dumps_latinon
from .latin import LatinSquare
from .patterns import Pattern, all_pattern_arrays
from .quasirandom import quasirandom_test
from .sampling import associate_semilatinon, sample_matrix, sampling_experiment
from .step import anticompress, compress, entropy, represent
from .synthesis import plan_quotas, step_approximate, synthesize

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_BUDGET = 4


# ----------------------------------------------------------------- helpers


def _json(obj):
    def default(o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Pattern):
            return o.tolist()
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return json.dumps(obj, sort_keys=True, indent=1, default=default) + "\n"


def _csv(rows):
    if not rows:
        return ""
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _emit(text, path=None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(path, semi=False):
    """A ``.ls`` square or a ``.json`` step Latinon (``-`` reads a square from stdin)."""
    if path == "-":
        return parse_ls(sys.stdin.read())
    if str(path).endswith(".json"):
        return read_latinon(path, semi=semi)
    return read_ls(path)


def _as_latinon(x):
    return represent(x) if isinstance(x, LatinSquare) else x


def _shape(text):
    try:
        k, l = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("shape must look like K,L") from None
    return k, l


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of integers") from None


def _source(args):
    if getattr(args, "input", None):
        return _load(args.input, semi=getattr(args, "semi", False))
    return latinon_family(args.family, args.m)


# ----------------------------------------------------------------- commands


def cmd_gen(args):
    L = generate(args.family, args.n, seed=args.seed, steps=args.steps)
    _emit(format_ls(L), args.output)


def _density_rows(x, args):
    if args.pattern is None:
        k, l = args.shape
        reps = density_vector(x, k, l, mode=args.mode, samples=args.samples, seed=args.seed, threads=args.threads)
        return [r.as_row() for r in reps]
    A = Pattern.parse(args.pattern)
    if args.mode == "exact":
        rep = density_exact(A, x) if isinstance(x, LatinSquare) else step_density_exact(A, x)
        return [rep.as_row()]
    reps = density_vector(x, A.k, A.l, mode=args.mode, samples=args.samples, seed=args.seed, threads=args.threads)
    return [r.as_row() for r in reps if r.pattern == A]


def cmd_density(args):
    x = _load(args.input)
    _emit(_csv(_density_rows(x, args)), args.output)


def cmd_step_density(args):
    W = _as_latinon(_load(args.input, semi=args.semi))
    _emit(_csv(_density_rows(W, args)), args.output)


def cmd_dist(args):
    a = _as_latinon(_load(args.a, semi=args.semi))
    b = _as_latinon(_load(args.b, semi=args.semi))
    est = delta_upper(a, b, M=args.M, search_budget=args.search_budget, seed=args.seed, coupled=args.coupled,
                      restarts=args.restarts, exact_limit=args.exact_limit)
    out = est.to_dict()
    if args.lower:
        low = delta_lower(a, b, max_kl=args.max_kl)
        out["lower"] = low.lower
        if low.lower_certificate is not None:
            pat, gap, c = low.lower_certificate
            out["lower_certificate"] = {"pattern": pat.tolist(), "density_gap": gap, "c_kl": c}
    _emit(_json(out), args.output)


def cmd_compress(args):
    W = _load(args.input, semi=args.semi)
    parts = compress(W, args.depth)
    out = {
        "depth": args.depth,
        "row_parts": W.row_parts.lengths.tolist(),
        "col_parts": W.col_parts.lengths.tolist(),
        "parts": [p.values.tolist() for p in parts],
    }
    if args.approximate is not None:
        res = step_approximate(W, args.approximate, seed=args.seed)
        out["approximation"] = {
            "eps": args.approximate,
            "depth": res.depth,
            "compression_error": res.compression_error,
            "regularity_error": res.regularity_error,
            "budget": res.budget,
            "classes": res.n_classes,
            "latinon": latinon_to_dict(res.latinon),
        }
    if args.anticompress:
        Path(args.anticompress).write_text(dumps_latinon(anticompress(parts)))
    _emit(_json(out), args.output)


def cmd_sample(args):
    W = _as_latinon(_load(args.input, semi=args.semi))
    S = sample_matrix(W, args.k, seed=args.seed)
    out = {"k": S.k, "seed": S.seed, "rows": S.rows, "cols": S.cols, "values": S.values, "pattern": S.pattern.id}
    if args.semilatinon:
        Path(args.semilatinon).write_text(dumps_latinon(associate_semilatinon(S, depth=args.depth)))
    _emit(_json(out), args.output)


def cmd_sampling_experiment(args):
    W = _as_latinon(_source(args))
    stats = sampling_experiment(W, ks=args.ks, replicas=args.replicas, seed=args.seed, depth=args.depth,
                                M=args.M, search_budget=args.search_budget, restarts=args.restarts)
    _emit(_csv([s.as_row() for s in stats]), args.output)


def cmd_synth(args):
    W = _source(args)
    res = synthesize(plan_quotas(W, args.n), seed=args.seed, restarts=args.restarts)
    _emit(format_ls(res.square), args.output)
    if args.report:
        Path(args.report).write_text(_json(res.report()))


def cmd_quasi(args):
    x = _load(args.input)
    rep = quasirandom_test(x, tolerance=args.tolerance, mode=args.mode, samples=args.samples, seed=args.seed,
                           threads=args.threads)
    if args.csv:
        Path(args.csv).write_text(_csv(rep.table()))
    _emit(_json(rep.to_dict()), args.output)


def cmd_entropy(args):
    W = _as_latinon(_load(args.input, semi=args.semi))
    e = entropy(W)
    # the functional integrates g log g; the counting heuristic suggests the opposite sign
    _emit(_json({"entropy": e, "negated": -e}), args.output)


def cmd_converge(args):
    ns = [args.n * 2 ** i for i in range(args.doublings + 1)]
    k, l = args.shape
    table, gaps = convergence_table(args.family, ns, k, l, mode=args.mode, samples=args.samples, seed=args.seed,
                                    threads=args.threads, steps=args.steps)
    rows = []
    for p, col in zip(all_pattern_arrays(k, l), table.T):
        row = {"pattern_id": "-".join(map(str, p))}
        row.update({f"n={n}": repr(float(v)) for n, v in zip(ns, col)})
        row["max_successive_gap"] = repr(float(np.abs(np.diff(col)).max())) if len(ns) > 1 else "0.0"
        rows.append(row)
    _emit(_csv(rows), args.output)


def cmd_swap_experiment(args):
    rows, limit = swap_experiment(args.n)
    out = [r.as_row() for r in rows]
    out.append({"n": "inf", "t_J": "", "t_K": "", "gap": repr(limit), "closed_t_J": "", "closed_t_K": "",
                "closed_gap": repr(2 / 9)})
    _emit(_csv(out), args.output)


# ----------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="latinon", description="Latin squares, step Latinons and their densities.")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo replicas")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", "-o", default=None, help="output file (default stdout)")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
        return sp

    sp = add("gen", cmd_gen, "generate a Latin square in .ls format")
    sp.add_argument("family", choices=SQUARE_FAMILIES)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--steps", type=int, default=None, help="chain length for the random family")

    for name, fn, help_ in (("density", cmd_density, "pattern densities of a square (.ls) or Latinon (.json)"),
                            ("step-density", cmd_step_density, "exact pattern densities of a step Latinon")):
        sp = add(name, fn, help_)
        sp.add_argument("--input", "-i", required=True)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--pattern", help="pattern such as '2,1' or '1,2;3,4'")
        g.add_argument("--shape", type=_shape, default=(2, 2), help="all patterns of shape K,L")
        sp.add_argument("--mode", choices=("exact", "mc", "monte_carlo"), default="exact")
        sp.add_argument("--samples", type=int, default=10 ** 5)
        sp.add_argument("--semi", action="store_true", help="accept semilatinons")

    sp = add("dist", cmd_dist, "certified bounds on the cut distance of two inputs")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--search-budget", type=int, default=256)
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--exact-limit", type=int, default=22)
    sp.add_argument("--coupled", action="store_true", help="use the same permutation on rows and columns")
    sp.add_argument("--lower", action="store_true", help="also compute the density lower bound")
    sp.add_argument("--max-kl", type=int, default=4)
    sp.add_argument("--semi", action="store_true")

    sp = add("compress", cmd_compress, "dyadic compression of a step Latinon")
    sp.add_argument("--input", "-i", required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--anticompress", help="write the rebuilt Latinon here")
    sp.add_argument("--approximate", type=float, default=None, metavar="EPS",
                    help="also run the step approximation with this eps")
    sp.add_argument("--semi", action="store_true")

    sp = add("sample", cmd_sample, "random k x k sample of a step Latinon")
    sp.add_argument("--input", "-i", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--semilatinon", help="write the associated semilatinon here")
    sp.add_argument("--depth", type=int, default=None)
    sp.add_argument("--semi", action="store_true")

    sp = add("sampling-experiment", cmd_sampling_experiment, "distance between a Latinon and its samples")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", "-i")
    g.add_argument("--family", choices=("uniform", "cyclic", "parity"))
    sp.add_argument("--m", type=int, default=8)
    sp.add_argument("--ks", type=_ints, default=[8, 16, 32])
    sp.add_argument("--replicas", type=int, default=10)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--search-budget", type=int, default=64)
    sp.add_argument("--restarts", type=int, default=8)
    sp.add_argument("--semi", action="store_true")

    sp = add("synth", cmd_synth, "build a Latin square following a step Latinon")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--input", "-i")
    g.add_argument("--family", choices=("uniform", "cyclic", "parity"))
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--restarts", type=int, default=1)
    sp.add_argument("--report", help="write the quota deviation report (JSON) here")

    sp = add("quasi", cmd_quasi, "3 x 2 quasirandomness test")
    sp.add_argument("--input", "-i", required=True)
    sp.add_argument("--mode", choices=("auto", "exact", "mc", "monte_carlo"), default="auto")
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--tolerance", type=float, default=None)
    sp.add_argument("--csv", help="write the per-pattern table here")

    sp = add("entropy", cmd_entropy, "entropy of a step Latinon (both signs)")
    sp.add_argument("--input", "-i", required=True)
    sp.add_argument("--semi", action="store_true")

    sp = add("converge", cmd_converge, "density vectors along a doubling sequence of orders")
    sp.add_argument("family", choices=SQUARE_FAMILIES)
    sp.add_argument("--n", type=int, required=True, help="first order")
    sp.add_argument("--doublings", type=int, default=3)
    sp.add_argument("--shape", type=_shape, default=(2, 2))
    sp.add_argument("--mode", choices=("exact", "mc", "monte_carlo"), default="exact")
    sp.add_argument("--samples", type=int, default=10 ** 5)
    sp.add_argument("--steps", type=int, default=None)

    sp = add("swap-experiment", cmd_swap_experiment, "densities of [[2,1]] after the column-value swap")
    sp.add_argument("--n", type=_ints, default=[300, 600], help="orders, comma separated multiples of 3")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "threads"):
        args.threads = 1
    try:
        args.func(args)
    except exc.ValidationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except exc.BudgetError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
