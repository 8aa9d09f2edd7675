"""Command-line interface.

Every command writes one or more records, either as JSON lines (default) or
CSV with a header row. Exit status: 0 success, 1 a verification failed,
2 usage error, 3 a value could not be certified within the budget.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from . import constructions as C
from . import exact as X
from . import structure as L
from .intset import IntSet, count_s_aps, is_k_ap_free

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNRESOLVED = 0, 1, 2, 3

log = logging.getLogger("apfree")


def parse_set(text: str) -> IntSet:
    """Comma-separated decimal integers, e.g. ``1,2,4,8``."""
    text = text.strip()
    if not text:
        return IntSet()
    try:
        return IntSet(int(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def read_set_file(path: str) -> IntSet:
    with open(path) as fh:
        return IntSet(int(line) for line in fh if line.strip())


def parse_ints(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _plain(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, IntSet):
        return list(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def write_records(records: Sequence[dict], fmt: str, out) -> None:
    rows = [{k: _plain(v) for k, v in r.items()} for r in records]
    if fmt == "lines":
        for row in rows:
            out.write(json.dumps(row) + "\n")
        return
    fields: List[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            k: " ".join(map(str, v)) if isinstance(v, list) else
            ("true" if v is True else "false" if v is False else v)
            for k, v in row.items()
        })


# Commands. Each returns (records, exit status).

def cmd_count(args, cache):
    A = _input_set(args)
    rec = {"kind": "count", "s": args.s, "size": len(A), "value": count_s_aps(A, args.s)}
    status = EXIT_OK
    if args.k is not None:
        free, ap = is_k_ap_free(A, args.k)
        rec.update({"k": args.k, "k_ap_free": free, "progression": list(ap.terms) if ap else []})
        if args.expect_free and not free:
            status = EXIT_FAIL
    if args.expect_value is not None and rec["value"] != args.expect_value:
        status = EXIT_FAIL
    return [rec], status


def cmd_rk(args, cache):
    entry = X.rk_exact(args.k, args.n, cache, args.max_nodes, args.max_seconds)
    if args.all:
        records = [e.to_record() for e in cache.rk_entries(args.k) if e.n <= args.n]
    else:
        records = [entry.to_record()]
    status = EXIT_OK if entry.certified else EXIT_UNRESOLVED
    if args.verify:
        for rec in records:
            free, _ = is_k_ap_free(rec["witness"], rec["k"])
            ok = free and len(rec["witness"]) == rec["value"] and all(1 <= x <= rec["n"] for x in rec["witness"])
            rec["verified"] = ok
            if not ok:
                status = EXIT_FAIL
    return records, status


def cmd_find_n(args, cache):
    if args.target is None:
        if args.n is None or args.s is None:
            raise _Usage("find-n needs --target or both --n and --s")
        target = args.n // args.s
    else:
        target = args.target
    if target < 1:
        raise _Usage("target must be at least 1")
    try:
        N = X.find_N(args.k, target, cache, args.max_nodes, args.max_seconds)
    except X.Unresolved as exc:
        return [{"kind": "find-n", "k": args.k, "target": target, "N": None,
                 "certified": False, "detail": str(exc)}], EXIT_UNRESOLVED
    return [{"kind": "find-n", "k": args.k, "target": target, "N": N, "certified": True}], EXIT_OK


def cmd_fsk(args, cache):
    if not args.k > args.s >= 3:
        raise _Usage("fsk needs k > s >= 3")
    if args.n < args.s:
        raise _Usage("fsk needs n >= s")
    if args.stability:
        rows = X.window_stability(args.k, args.s, range(args.s, args.n + 1),
                                  cache=cache, max_nodes=args.max_nodes)
        records = [{"kind": "fsk-stability", "k": args.k, "s": args.s, "n": r.n,
                    "window": r.base_window, "wide_window": r.wide_window,
                    "value": r.base_value, "wide_value": r.wide_value,
                    "stable": r.stable, "certified": r.certified} for r in rows]
        status = EXIT_OK if all(r.certified for r in rows) else EXIT_UNRESOLVED
        return records, status
    window = args.window if args.window is not None else 4 * args.n
    if window < args.n:
        raise _Usage("window must be at least n")
    try:
        entry = X.fsk_windowed_max(args.n, args.k, args.s, window, cache, args.max_nodes, args.max_seconds)
    except X.Unresolved as exc:
        return [{"kind": "fsk", "k": args.k, "s": args.s, "n": args.n, "window": window,
                 "value": None, "certified": False, "detail": str(exc)}], EXIT_UNRESOLVED
    except ValueError as exc:
        raise _Usage(str(exc))
    return [entry.to_record()], EXIT_OK if entry.certified else EXIT_UNRESOLVED


def cmd_construct(args, cache):
    if args.type == "seed":
        if args.n is None:
            raise _Usage("construct --type seed needs --n")
        S = C.threeapfree_seed(args.n, cache=cache)
        return [{"kind": "seed", "n": args.n, "size": len(S), "set": S}], EXIT_OK
    if args.type == "product":
        U, V = args.U, args.V
        if U is None or V is None or args.m is None or args.n is None:
            raise _Usage("construct --type product needs --U, --m, --V, --n")
        try:
            W = C.product_construct(U, args.m, V, args.n, args.variant)
        except ValueError as exc:
            raise _Usage(str(exc))
        k = args.k if args.k is not None else 3
        free, ap = is_k_ap_free(W, k)
        rec = {"kind": "product", "variant": args.variant, "m": args.m, "n": args.n,
               "k": k, "size": len(W), "k_ap_free": free,
               "progression": list(ap.terms) if ap else [], "set": W}
        expected_free = is_k_ap_free(U, k)[0] and is_k_ap_free(V, k)[0]
        rec["inputs_free"] = expected_free
        rec["counterexample"] = expected_free and not free
        status = EXIT_FAIL if args.variant == "corrected" and expected_free and not free else EXIT_OK
        return [rec], status
    return _construct_block(args, cache)


def _construct_block(args, cache):
    if args.s is None or args.k is None:
        raise _Usage("construct --type block needs --s and --k")
    if not args.k > args.s >= 3:
        raise _Usage("construct needs k > s >= 3")
    if args.set is not None or args.set_file is not None:
        S = _input_set(args)
        if args.N is None:
            raise _Usage("--N is required with an explicit seed set")
        N = args.N
    else:
        if args.n is None:
            raise _Usage("give a seed set (--set/--set-file with --N) or --n")
        target = args.n // args.s
        if target < 1:
            raise _Usage("need n >= s")
        try:
            N = X.find_N(args.k, target, cache, args.max_nodes, args.max_seconds)
        except X.Unresolved as exc:
            return [{"kind": "construct", "detail": str(exc), "certified": False}], EXIT_UNRESOLVED
        S = X.rk_exact(args.k, N, cache).witness
    if args.offsets is not None:
        d = tuple(args.offsets)
    else:
        rng = C.offset_rng(args.seed, 0)
        d = tuple(int(x) for x in rng.integers(1, 2 * N, size=args.s, endpoint=True))
    try:
        params = C.BlockParams(N, args.s, args.k, S, d)
    except ValueError as exc:
        raise _Usage(str(exc))
    A = C.block_random_construct(params, augment_to=args.augment_to)
    free, ap = is_k_ap_free(A, args.k)
    rec = {
        "kind": "construct", "N": N, "s": args.s, "k": args.k, "seed_set": S,
        "offsets": list(d), "size": len(A), "count": count_s_aps(A, args.s),
        "k_ap_free": free, "expected_bound": C.expected_sap_lower_bound(N, args.s, len(S)),
        "set": A,
    }
    if args.n is not None:
        rec["n"] = args.n
        rec["final_bound"] = C.final_lower_bound(args.n, args.s, N)
    return [rec], EXIT_OK if free else EXIT_FAIL


def cmd_montecarlo(args, cache):
    S = _input_set(args)
    if args.N is None or args.s is None or args.k is None:
        raise _Usage("montecarlo needs --N, --s and --k")
    try:
        C.BlockParams(args.N, args.s, args.k, S, (1,) * args.s)
    except ValueError as exc:
        raise _Usage(str(exc))
    if not args.exhaustive and args.trials < 1:
        raise _Usage("trials must be at least 1")
    try:
        if args.exhaustive:
            res = C.exhaustive_expected_saps(S, args.N, args.s, args.k)
        else:
            res = C.monte_carlo_expected_saps(S, args.N, args.s, args.k, args.trials,
                                              args.seed, args.threads)
    except C.ConstructionSoundnessError as exc:
        return [{"kind": "montecarlo", "error": str(exc)}], EXIT_FAIL
    rec = {
        "kind": "montecarlo", "N": args.N, "s": args.s, "k": args.k, "seed_set": S,
        "exhaustive": args.exhaustive, "seed": None if args.exhaustive else args.seed,
        "trials": res.trials, "mean": res.mean, "mean_float": float(res.mean),
        "variance": res.variance, "min": res.min, "max": res.max,
        "bound": res.bound, "exceeds_bound": res.exceeds_bound,
    }
    status = EXIT_FAIL if args.exhaustive and not res.exceeds_bound else EXIT_OK
    return [rec], status


def cmd_bsg(args, cache):
    if args.interval is not None:
        A = IntSet(range(1, args.interval + 1))
    else:
        A = _input_set(args)
    if len(A) < 2:
        raise _Usage("bsg needs at least two elements")
    try:
        rep = L.verify_bsg(A, args.constant, args.seed, args.retries, args.hypothesis_constant)
    except L.RichSubsetError as exc:
        return [{"kind": "bsg", "error": str(exc), "attempts": exc.attempts,
                 "best_size": exc.best_size, "best_fraction": exc.best_fraction}], EXIT_FAIL
    sub = rep.subset
    rec = {
        "kind": "bsg", "n": rep.n, "p": rep.p, "constant": args.constant,
        "trivial": sub.trivial, "attempts": sub.attempts, "U_size": len(sub.U),
        "Aprime_size": len(sub.Aprime), "threshold": sub.threshold,
        "min_pair_paths": sub.min_pair_paths, "path_lower_bound": sub.path_lower_bound,
        "diff_size": rep.diff_size, "diff_ratio": rep.diff_ratio, "path_ratio": rep.path_ratio,
        "size_ok": rep.size_ok, "diff_ok": rep.diff_ok, "representation_ok": rep.representation_ok,
        "passed": rep.passed, "Aprime": sub.Aprime,
    }
    return [rec], EXIT_OK if rep.passed else EXIT_FAIL


def cmd_freiman(args, cache):
    S = args.source
    if args.affine is not None:
        if len(args.affine) != 2 or args.affine[0] == 0:
            raise _Usage("--affine takes a,b with a != 0")
        a, b = args.affine
        phi = L.FreimanMap.from_function(S, lambda x: a * x + b, args.order)
    else:
        if args.target is None:
            raise _Usage("freiman needs --target or --affine")
        if len(args.target) != len(S):
            raise _Usage("source and target sizes differ")
        phi = L.FreimanMap.order_preserving(S, args.target, args.order)
    if args.order < 2:
        raise _Usage("order must be at least 2")
    ok, violation = L.freiman_iso_check(phi)
    rec = {"kind": "freiman", "order": args.order, "source": phi.source, "target": phi.target,
           "isomorphism": ok,
           "violation": [list(violation[0]), list(violation[1])] if violation else []}
    return [rec], EXIT_OK


def cmd_plunnecke(args, cache):
    if not args.S or not args.T:
        raise _Usage("S and T must be nonempty")
    if args.r < 1 or args.rprime < 1:
        raise _Usage("r and r' must be positive")
    rep = L.plunnecke_check(args.S, args.T, args.r, args.rprime)
    rec = {"kind": "plunnecke", "r": rep.r, "r_prime": rep.r_prime, "alpha": rep.alpha,
           "bound": rep.bound, "actual": rep.actual, "passed": rep.passed}
    return [rec], EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_tables(args, cache):
    status = EXIT_OK
    for k in args.k or []:
        entry = X.rk_exact(k, args.up_to, cache, args.max_nodes, args.max_seconds)
        if not entry.certified:
            status = EXIT_UNRESOLVED
    report = X.verify_table_inequalities(cache)
    records = [{"kind": "table-check", "check": name, "checked": count,
                "violations": sum(1 for v in report.violations if v.check == name)}
               for name, count in report.checked.items()]
    records += [{"kind": "violation", "check": v.check, "k": v.k, "args": list(v.args),
                 "detail": v.detail} for v in report.violations]
    if not report.passed:
        status = EXIT_FAIL
    return records, status


class _Usage(Exception):
    pass


def _input_set(args) -> IntSet:
    if getattr(args, "set_file", None) is not None:
        return read_set_file(args.set_file)
    if getattr(args, "set", None) is not None:
        return args.set
    raise _Usage("a set is required (--set or --set-file)")


def _length(name: str):
    def check(text: str) -> int:
        value = int(text)
        if value < 3:
            raise argparse.ArgumentTypeError(f"{name} must be at least 3")
        return value
    return check


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for randomized steps")
    common.add_argument("--max-nodes", type=int, default=None, help="search node budget")
    common.add_argument("--max-seconds", type=float, default=None, help="search time budget")
    common.add_argument("--cache", default=None,
                        help=f"cache file (default: ${X.CACHE_ENV}, else in-memory only)")
    common.add_argument("--output", "-o", default="-", help="output file, '-' for stdout")
    common.add_argument("--format", choices=("lines", "csv"), default="lines")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--verbose", "-v", action="store_true")

    def set_args(p):
        p.add_argument("--set", type=parse_set, default=None, help="comma-separated integers")
        p.add_argument("--set-file", default=None, help="file with one integer per line")

    parser = argparse.ArgumentParser(prog="apfree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count s-APs in a set")
    set_args(p)
    p.add_argument("--s", type=_length("s"), required=True)
    p.add_argument("--k", type=_length("k"), default=None, help="also test k-AP-freeness")
    p.add_argument("--expect-free", action="store_true", help="exit 1 unless the set is k-AP-free")
    p.add_argument("--expect-value", type=int, default=None, help="exit 1 unless the count matches")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("rk", parents=[common], help="exact r_k(n)")
    p.add_argument("--k", type=_length("k"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--all", action="store_true", help="emit every r_k(m) for m <= n")
    p.add_argument("--verify", action="store_true", help="re-verify emitted witnesses")
    p.set_defaults(func=cmd_rk)

    p = sub.add_parser("find-n", parents=[common], help="least N with r_k(N) = target")
    p.add_argument("--k", type=_length("k"), required=True)
    p.add_argument("--target", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="with --s: target = floor(n/s)")
    p.add_argument("--s", type=_length("s"), default=None)
    p.set_defaults(func=cmd_find_n)

    p = sub.add_parser("fsk", parents=[common], help="windowed maximum of f_s over k-AP-free n-sets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=_length("k"), required=True)
    p.add_argument("--s", type=_length("s"), required=True)
    p.add_argument("--window", type=int, default=None, help="universe bound M (default 4n)")
    p.add_argument("--stability", action="store_true",
                   help="compare windows 4n and 6n for every size from s to n")
    p.set_defaults(func=cmd_fsk)

    p = sub.add_parser("construct", parents=[common], help="build a k-AP-free set")
    p.add_argument("--type", choices=("block", "product", "seed"), default="block")
    set_args(p)
    p.add_argument("--N", type=int, default=None, help="window size of the seed set")
    p.add_argument("--n", type=int, default=None, help="target size (block) or V's universe (product)")
    p.add_argument("--s", type=_length("s"), default=None)
    p.add_argument("--k", type=_length("k"), default=None)
    p.add_argument("--offsets", type=parse_ints, default=None, help="d_1,...,d_s")
    p.add_argument("--augment-to", type=int, default=None)
    p.add_argument("--U", type=parse_set, default=None)
    p.add_argument("--V", type=parse_set, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--variant", choices=("corrected", "literal"), default="corrected")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("montecarlo", parents=[common], help="average s-AP count of the block construction")
    set_args(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--s", type=_length("s"), default=None)
    p.add_argument("--k", type=_length("k"), default=None)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all (2N)^s offset vectors")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("bsg", parents=[common], help="run the rich-subset pipeline on the AP graph")
    set_args(p)
    p.add_argument("--interval", type=int, default=None, help="use A = {1..n}")
    p.add_argument("--constant", type=float, default=2000.0)
    p.add_argument("--retries", type=int, default=64)
    p.add_argument("--hypothesis-constant", type=float, default=1.0,
                   help="trivial case when density < c / sqrt(n)")
    p.set_defaults(func=cmd_bsg)

    p = sub.add_parser("freiman", parents=[common], help="check a Freiman isomorphism")
    p.add_argument("--source", type=parse_set, required=True)
    p.add_argument("--target", type=parse_set, default=None, help="paired in increasing order")
    p.add_argument("--affine", type=parse_ints, default=None, help="a,b for x -> a*x + b")
    p.add_argument("--order", type=int, default=2)
    p.set_defaults(func=cmd_freiman)

    p = sub.add_parser("plunnecke", parents=[common], help="check |rT - r'T| <= alpha^(r+r')|S|")
    p.add_argument("--S", type=parse_set, required=True)
    p.add_argument("--T", type=parse_set, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--rprime", type=int, default=1)
    p.set_defaults(func=cmd_plunnecke)

    p = sub.add_parser("verify-tables", parents=[common], help="check inequalities on cached r_k values")
    p.add_argument("--k", type=_length("k"), action="append", default=None,
                   help="fill the table for this k first (repeatable)")
    p.add_argument("--up-to", type=int, default=18)
    p.set_defaults(func=cmd_verify_tables)
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "n", None) is not None and args.n < 1:
        parser.error("--n must be positive")
    if args.threads < 1:
        parser.error("--threads must be positive")
    cache = X.Cache(args.cache) if args.cache else X.Cache.from_env()
    try:
        records, status = args.func(args, cache)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output == "-":
        write_records(records, args.format, stdout or sys.stdout)
    else:
        with open(args.output, "w", newline="") as fh:
            write_records(records, args.format, fh)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if exc.code is not None else 0


if __name__ == "__main__":
    sys.exit(main())
