"""Command line driver: compute, verify, and compare the L-series.

Reports are JSON documents with a stable schema.  Every number in a
report is exact (integers, or rationals as [numerator, denominator])
except the wall-clock entry under "timing", which also collects run
metadata that must not participate in byte-for-byte comparisons:
worker counts, budgets, cache paths and cache hit statistics.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .cyclo import check_odd_prime
from .errors import (
    CacheError,
    FindingError,
    PrecisionError,
    ResourceError,
    UsageError,
)
from .expsum import DEFAULT_BUDGET, KloostermanEvaluator, SumCache, _parse_ints
from .ff import make_field, orbit_rep, points_up_to
from .lfun import (
    LocalSeries,
    euler_product,
    inverse_factor_series,
    local_factor,
    sym_inf_local,
    sym_k_factor,
    unit_root_local,
)
from .padic import PadicExponent
from .polygon import hodge_polygon, lower_hull, newton_points, verify_above, \
    compare_slope_range

SCHEMA = "klsym-report/1"
CACHE_ENV = "KLSYM_CACHE"
MAX_RETRIES = 3

MODES = ("symk", "syminf", "unitroot", "verify-newton-hodge", "compare-slopes")


@dataclass(frozen=True)
class RunConfig:
    """Everything the mathematical content of a run depends on.

    workers, budget and cache_path never change computed values, only
    how fast they arrive; they are echoed in the volatile timing block.
    """

    p: int
    a: int = 1
    n: int = 1
    mode: str = "symk"
    k: int | None = None
    kappa_digits: tuple | None = None
    D: int = 1
    V: int | None = None
    workers: int = 1
    budget: int = DEFAULT_BUDGET
    cache_path: str | None = None


def _validate(config: RunConfig):
    check_odd_prime(config.p)
    if config.a < 1 or config.n < 1:
        raise UsageError("need a >= 1 and n >= 1")
    if config.D < 0:
        raise UsageError("degree cap D must be nonnegative")
    if config.mode not in MODES:
        raise UsageError(f"unknown mode {config.mode!r}")
    if config.workers < 1:
        raise UsageError("need at least one worker")
    if config.k is not None and config.kappa_digits is not None:
        raise UsageError("give either an integer exponent or digits, not both")
    if config.mode in ("symk", "compare-slopes"):
        if config.k is None:
            raise UsageError(f"mode {config.mode} needs an integer exponent k")
        if config.k < 0:
            raise UsageError("k must be nonnegative")
    else:
        if config.k is None and config.kappa_digits is None:
            raise UsageError(f"mode {config.mode} needs an exponent")
    if config.V is not None and config.V < 1:
        raise UsageError("precision target V must be positive")


def _kappa(config: RunConfig) -> PadicExponent:
    if config.kappa_digits is not None:
        try:
            return PadicExponent.truncated(config.p, config.kappa_digits)
        except ValueError as exc:
            raise UsageError(f"bad exponent digits: {exc}") from None
    return PadicExponent.exact(config.p, config.k)


def default_precision(config: RunConfig) -> int:
    """Initial pi-adic target: Hodge height at the degree cap plus slack.

    The Hodge polygon bounds every slope the verdict can depend on, so
    clearing its value at D (in pi units) with a few digits to spare
    settles typical runs on the first attempt; retries double from here.
    """
    hodge = hodge_polygon(config.n, config.p, max(config.D, 1))
    height = hodge.value_at(Fraction(min(config.D, int(hodge.width))))
    digits = int(-(-height.numerator // height.denominator))
    return (config.p - 1) * config.a * (digits + 4)


# ---------------------------------------------------------------------------
# series assembly


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def series_symk(ev: KloostermanEvaluator, n: int, k: int, D: int,
                workers: int = 1):
    """Exact finite symmetric power L-series truncated at degree D."""
    pts = points_up_to(ev.base, D)

    def one(pt):
        lf = local_factor(ev, n, pt)
        coeffs = inverse_factor_series(sym_k_factor(lf, k), D // pt.degree)
        return LocalSeries(pt, coeffs, None, {})

    return euler_product(ev.base, _pmap(one, pts, workers), D)


def series_syminf(ev: KloostermanEvaluator, n: int, kappa: PadicExponent,
                  V: int, D: int, workers: int = 1):
    """Infinite symmetric power L-series to certified precision V."""
    pts = points_up_to(ev.base, D)
    a = ev.base.k

    def one(pt):
        lf = local_factor(ev, n, pt)
        return sym_inf_local(lf, kappa, V, D // pt.degree, a)

    return euler_product(ev.base, _pmap(one, pts, workers), D)


def series_unitroot(ev: KloostermanEvaluator, n: int, kappa: PadicExponent,
                    V: int, D: int, workers: int = 1):
    """Slope-zero unit root L-series to certified precision V."""
    pts = points_up_to(ev.base, D)

    def one(pt):
        lf = local_factor(ev, n, pt)
        return unit_root_local(lf, kappa, V, D // pt.degree)

    return euler_product(ev.base, _pmap(one, pts, workers), D)


# ---------------------------------------------------------------------------
# report rendering


def _frac(x: Fraction):
    return [x.numerator, x.denominator]


def _jsonable(x):
    if isinstance(x, Fraction):
        return _frac(x)
    if isinstance(x, dict):
        return {key: _jsonable(val) for key, val in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(val) for val in x]
    return x


def _polygon_json(poly):
    return [[_frac(x), _frac(y)] for x, y in poly.vertices]


def _exponent_json(config: RunConfig):
    if config.kappa_digits is not None:
        return {"kind": "digits", "digits": list(config.kappa_digits)}
    return {"kind": "integer", "value": config.k}


def _coeff_rows(gs, a: int):
    rows = []
    for cp, c in zip(newton_points(gs.coeffs, a, cert=gs.cert), gs.coeffs):
        row = {
            "r": cp.r,
            "exact": cp.exact,
            "ordq": None if cp.ordq is None else _frac(cp.ordq),
        }
        if gs.cert is None:
            row["value"] = gs.integers[cp.r]
        else:
            row["coords"] = list(c.rep.coords)
            row["precision"] = c.N
            row["vcert"] = c.vcert
        rows.append(row)
    return rows


def _series_json(name, gs, a, exponent):
    entry = {
        "name": name,
        "exponent": exponent,
        "cert": gs.cert,
        "coefficients": _coeff_rows(gs, a),
    }
    return entry


def _newton_hull_json(points):
    finite = [pt for pt in points if pt.exact and pt.ordq is not None]
    if not finite:
        return []
    return _polygon_json(lower_hull(finite))


def write_report(report: dict, out_path: str | None):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_csv(report: dict, csv_path: str):
    """Flat coefficient table, one row per (series, power of T)."""
    with open(csv_path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "r", "exact", "ordq_num", "ordq_den",
                         "precision", "vcert", "value"])
        for series in report.get("series", []):
            for row in series["coefficients"]:
                ordq = row["ordq"]
                num, den = ("", "") if ordq is None else ordq
                if "value" in row:
                    writer.writerow([series["name"], row["r"], row["exact"],
                                     num, den, "", "", row["value"]])
                else:
                    coords = ":".join(str(c) for c in row["coords"])
                    writer.writerow([series["name"], row["r"], row["exact"],
                                     num, den, row["precision"],
                                     row["vcert"], coords])


# ---------------------------------------------------------------------------
# run driver


_EXIT_BY_STATUS = {
    "pass": 0,
    "agree": 0,
    "violation": 2,
    "disagree": 2,
    "inconclusive": 3,
}


def _retry_precision(attempt, V0: int):
    """Run attempt(V), doubling V on undecided verdicts up to MAX_RETRIES.

    attempt returns (series, points, verdict); a PrecisionError counts as
    undecided.  Exhausting retries on a PrecisionError re-raises it; an
    undecided verdict on the last attempt is returned as-is so the caller
    can report exactly what is still missing.
    """
    V = V0
    attempts = 0
    while True:
        attempts += 1
        try:
            result = attempt(V)
        except PrecisionError:
            result = None
        if result is not None and result[2].decided:
            return result, V, attempts
        if attempts > MAX_RETRIES:
            if result is None:
                raise PrecisionError(
                    f"undecided after {attempts} attempts up to V={V}")
            return result, V, attempts
        V *= 2


def run(config: RunConfig):
    """Execute one run and return (report, exit_code)."""
    t0 = time.perf_counter()
    _validate(config)
    base = make_field(config.p, config.a)
    cache = SumCache(config.cache_path) if config.cache_path else None
    ev = KloostermanEvaluator(base, cache, config.budget)
    a, n, D = config.a, config.n, config.D

    report = {
        "schema": SCHEMA,
        "tool": {"name": "klsym", "version": __version__},
        "config": {
            "p": config.p,
            "a": a,
            "n": n,
            "mode": config.mode,
            "exponent": _exponent_json(config),
            "D": D,
            "V": config.V,
        },
        "field": {"p": config.p, "a": a, "modulus": list(base.modulus)},
        "series": [],
        "polygons": {},
        "verdict": None,
    }

    verdict = None
    derived = {}

    if config.mode == "symk":
        gs = series_symk(ev, n, config.k, D, config.workers)
        report["series"].append(
            _series_json("symk", gs, a, _exponent_json(config)))
        report["polygons"]["newton_symk"] = _newton_hull_json(
            newton_points(gs.coeffs, a))
        report["polygons"]["hodge"] = _polygon_json(
            hodge_polygon(n, config.p, max(D, 1)))

    elif config.mode in ("syminf", "unitroot"):
        kappa = _kappa(config)
        V = config.V if config.V is not None else default_precision(config)
        build = series_syminf if config.mode == "syminf" else series_unitroot
        gs = build(ev, n, kappa, V, D, config.workers)
        report["series"].append(
            _series_json(config.mode, gs, a, _exponent_json(config)))
        report["polygons"]["newton_" + config.mode] = _newton_hull_json(
            newton_points(gs.coeffs, a, cert=gs.cert))
        if config.mode == "syminf":
            report["polygons"]["hodge"] = _polygon_json(
                hodge_polygon(n, config.p, max(D, 1)))
        derived["V_used"] = V

    elif config.mode == "verify-newton-hodge":
        hodge = hodge_polygon(n, config.p, max(D, 1))
        report["polygons"]["hodge"] = _polygon_json(hodge)
        verdicts = []
        if config.kappa_digits is None:
            gs_fin = series_symk(ev, n, config.k, D, config.workers)
            pts_fin = newton_points(gs_fin.coeffs, a)
            report["series"].append(
                _series_json("symk", gs_fin, a, _exponent_json(config)))
            report["polygons"]["newton_symk"] = _newton_hull_json(pts_fin)
            verdicts.append(("symk", verify_above(pts_fin, hodge)))

        kappa = _kappa(config)
        V0 = config.V if config.V is not None else default_precision(config)

        def attempt(V):
            gs = series_syminf(ev, n, kappa, V, D, config.workers)
            pts = newton_points(gs.coeffs, a, cert=gs.cert)
            return gs, pts, verify_above(pts, hodge)

        (gs_inf, pts_inf, v_inf), V, attempts = _retry_precision(attempt, V0)
        report["series"].append(
            _series_json("syminf", gs_inf, a, _exponent_json(config)))
        report["polygons"]["newton_syminf"] = _newton_hull_json(pts_inf)
        verdicts.append(("syminf", v_inf))
        derived.update({"V_initial": V0, "V_used": V, "attempts": attempts})

        verdict = _combine_verdicts(verdicts)

    elif config.mode == "compare-slopes":
        gs_fin = series_symk(ev, n, config.k, D, config.workers)
        pts_fin = newton_points(gs_fin.coeffs, a)
        report["series"].append(
            _series_json("symk", gs_fin, a, _exponent_json(config)))
        report["polygons"]["newton_symk"] = _newton_hull_json(pts_fin)

        kappa = _kappa(config)
        V0 = config.V if config.V is not None else default_precision(config)

        def attempt(V):
            gs = series_syminf(ev, n, kappa, V, D, config.workers)
            pts = newton_points(gs.coeffs, a, cert=gs.cert)
            return gs, pts, compare_slope_range(pts_fin, pts, Fraction(config.k))

        (gs_inf, pts_inf, v), V, attempts = _retry_precision(attempt, V0)
        report["series"].append(
            _series_json("syminf", gs_inf, a, _exponent_json(config)))
        report["polygons"]["newton_syminf"] = _newton_hull_json(pts_inf)
        derived.update({"V_initial": V0, "V_used": V, "attempts": attempts})
        verdict = {"status": v.status, "witness": _jsonable(v.witness)}

    if verdict is not None:
        report["verdict"] = verdict
    if derived:
        report["derived"] = derived

    report["timing"] = {
        "seconds": round(time.perf_counter() - t0, 6),
        "execution": {
            "workers": config.workers,
            "budget": config.budget,
            "cache_path": config.cache_path,
        },
        "cache": {
            "enabled": cache is not None,
            "hits": cache.hits if cache else 0,
            "misses": cache.misses if cache else 0,
            "records": len(cache) if cache else 0,
        },
    }

    code = 0 if verdict is None else _EXIT_BY_STATUS[verdict["status"]]
    return report, code


def _combine_verdicts(named):
    """Worst status wins: violation, then inconclusive, then pass."""
    for status in ("violation", "inconclusive"):
        for name, v in named:
            if v.status == status:
                witness = dict(v.witness or {})
                witness["series"] = name
                return {"status": status, "witness": _jsonable(witness)}
    return {"status": "pass", "witness": None}


# ---------------------------------------------------------------------------
# small subcommands


def _point_report(args, body, t0, cache=None):
    report = {
        "schema": SCHEMA,
        "tool": {"name": "klsym", "version": __version__},
        **body,
        "timing": {
            "seconds": round(time.perf_counter() - t0, 6),
            "cache": {
                "enabled": cache is not None,
                "hits": cache.hits if cache else 0,
                "misses": cache.misses if cache else 0,
                "records": len(cache) if cache else 0,
            },
        },
    }
    write_report(report, args.out)
    return 0


def _resolve_point(args, base):
    field = make_field(args.p, args.a * args.d)
    try:
        x = field.from_int(args.rep_int)
        return orbit_rep(base, field, x)
    except ValueError as exc:
        raise UsageError(f"bad point: {exc}") from None


def cmd_points(args) -> int:
    t0 = time.perf_counter()
    check_odd_prime(args.p)
    base = make_field(args.p, args.a)
    pts = points_up_to(base, args.D)
    body = {
        "field": {"p": args.p, "a": args.a, "modulus": list(base.modulus)},
        "D": args.D,
        "points": [
            {"degree": pt.degree, "rep": list(pt.rep), "rep_int": pt.rep_int}
            for pt in pts
        ],
    }
    return _point_report(args, body, t0)


def cmd_sum(args) -> int:
    t0 = time.perf_counter()
    check_odd_prime(args.p)
    base = make_field(args.p, args.a)
    cache = SumCache(args.cache) if args.cache else None
    ev = KloostermanEvaluator(base, cache, args.budget)
    pt = _resolve_point(args, base)
    value = ev.kloosterman(args.n, pt, args.m)
    try:
        as_int = value.as_integer()
    except ValueError:
        as_int = None
    body = {
        "point": {"degree": pt.degree, "rep": list(pt.rep)},
        "n": args.n,
        "m": args.m,
        "value": value.serialize(),
        "integer": as_int,
    }
    return _point_report(args, body, t0, cache)


def cmd_local(args) -> int:
    t0 = time.perf_counter()
    check_odd_prime(args.p)
    base = make_field(args.p, args.a)
    cache = SumCache(args.cache) if args.cache else None
    ev = KloostermanEvaluator(base, cache, args.budget)
    pt = _resolve_point(args, base)
    lf = local_factor(ev, args.n, pt)
    slopes = lower_hull(newton_points(lf.coeffs, args.a * pt.degree)).slopes()
    body = {
        "point": {"degree": pt.degree, "rep": list(pt.rep)},
        "n": args.n,
        "coefficients": [c.serialize() for c in lf.coeffs],
        "sign": lf.sign,
        "newton_slopes": [[_frac(s), _frac(length)] for s, length in slopes],
    }
    return _point_report(args, body, t0, cache)


def _parse_key(key: str):
    head, n, d, rep, m = key.split("|")
    p_, a_, modulus = head.split(",", 2)
    return (int(p_), int(a_), _parse_ints(modulus),
            int(n), int(d), _parse_ints(rep), int(m))


def cmd_cache(args) -> int:
    t0 = time.perf_counter()
    cache = SumCache(args.cache)
    if args.action == "stat":
        body = {"cache_stat": {"path": args.cache, "records": len(cache)}}
        return _point_report(args, body, t0)
    if args.action == "compact":
        kept = cache.compact()
        body = {"cache_compact": {"path": args.cache, "kept": kept}}
        return _point_report(args, body, t0)

    # action == "verify": recompute a sample of records from scratch
    checked = []
    bad = []
    for lineno, key, value in cache.records()[: args.sample]:
        p, a, modulus, n, d, rep, m = _parse_key(key)
        base = make_field(p, a, modulus)
        field = make_field(p, a * d)
        pt = orbit_rep(base, field, field.element(rep))
        fresh = KloostermanEvaluator(base, None, args.budget)
        ok = pt.rep == rep and fresh.kloosterman(n, pt, m) == value
        checked.append(lineno)
        if not ok:
            bad.append(lineno)
    body = {
        "cache_verify": {
            "path": args.cache,
            "checked_lines": checked,
            "bad_lines": bad,
        }
    }
    code = _point_report(args, body, t0)
    return 2 if bad else code


# ---------------------------------------------------------------------------
# argument parsing


def _digit_list(text: str):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad digit list {text!r}") from None


def _add_field_args(sp, with_n=True):
    sp.add_argument("-p", type=int, required=True,
                    help="odd residue characteristic")
    sp.add_argument("-a", type=int, default=1,
                    help="base field degree over the prime field")
    if with_n:
        sp.add_argument("-n", type=int, default=1,
                        help="number of summation variables")


def _add_run_args(sp):
    sp.add_argument("--workers", type=int, default=1,
                    help="threads for per-point work")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                    help="refuse sums needing more than this many steps")
    sp.add_argument("--cache", default=os.environ.get(CACHE_ENV),
                    help=f"sum cache file (default ${CACHE_ENV})")
    sp.add_argument("--out", help="write the JSON report here (default stdout)")
    sp.add_argument("--csv", help="also write a CSV coefficient table here")


def _add_exponent_args(sp, require_k=False):
    if require_k:
        sp.add_argument("-k", type=int, required=True,
                        help="integer symmetric power exponent")
        return
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("-k", type=int,
                       help="integer symmetric power exponent")
    group.add_argument("--kappa", type=_digit_list, metavar="D0,D1,...",
                       help="truncated p-adic exponent digits, low first")
    group.add_argument("--kappa-int", type=int, dest="kappa_int",
                       help="exact integer exponent (same as -k)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klsym",
        description="Symmetric power L-series of hyper-Kloosterman sums",
    )
    parser.add_argument("--version", action="version",
                        version=f"klsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("points", help="list closed points of the torus")
    _add_field_args(sp, with_n=False)
    sp.add_argument("-D", type=int, required=True, help="maximal degree")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_points)

    sp = sub.add_parser("sum", help="one exact hyper-Kloosterman sum")
    _add_field_args(sp)
    sp.add_argument("-d", type=int, required=True, help="point degree")
    sp.add_argument("--rep-int", type=int, required=True, dest="rep_int",
                    help="integer code of any orbit element")
    sp.add_argument("-m", type=int, default=1, help="extension level")
    _add_run_args(sp)
    sp.set_defaults(func=cmd_sum)

    sp = sub.add_parser("local", help="local L-factor at one closed point")
    _add_field_args(sp)
    sp.add_argument("-d", type=int, required=True, help="point degree")
    sp.add_argument("--rep-int", type=int, required=True, dest="rep_int",
                    help="integer code of any orbit element")
    _add_run_args(sp)
    sp.set_defaults(func=cmd_local)

    for name, mode, kind in (
        ("symk", "symk", "k"),
        ("syminf", "syminf", "any"),
        ("unitroot", "unitroot", "any"),
        ("verify", "verify-newton-hodge", "any"),
        ("compare", "compare-slopes", "k"),
    ):
        sp = sub.add_parser(name, help=f"run mode {mode}")
        _add_field_args(sp)
        _add_exponent_args(sp, require_k=(kind == "k"))
        sp.add_argument("-D", type=int, required=True,
                        help="Euler product degree cap")
        if mode != "symk":
            sp.add_argument("-V", type=int, default=None,
                            help="pi-adic precision target (default derived)")
        _add_run_args(sp)
        sp.set_defaults(func=cmd_run, mode=mode)

    sp = sub.add_parser("cache", help="inspect or repair a sum cache")
    sp.add_argument("action", choices=("stat", "verify", "compact"))
    sp.add_argument("--cache", default=os.environ.get(CACHE_ENV),
                    required=os.environ.get(CACHE_ENV) is None)
    sp.add_argument("--sample", type=int, default=10,
                    help="records to recompute under verify")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_cache)

    return parser


def cmd_run(args) -> int:
    kappa_digits = getattr(args, "kappa", None)
    k = args.k
    if getattr(args, "kappa_int", None) is not None:
        k = args.kappa_int
    config = RunConfig(
        p=args.p,
        a=args.a,
        n=args.n,
        mode=args.mode,
        k=k,
        kappa_digits=kappa_digits,
        D=args.D,
        V=getattr(args, "V", None),
        workers=args.workers,
        budget=args.budget,
        cache_path=args.cache,
    )
    report, code = run(config)
    write_report(report, args.out)
    if args.csv:
        write_csv(report, args.csv)
    return code


def console_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ResourceError, CacheError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PrecisionError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 3
    except FindingError as exc:
        print(f"finding: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(console_main())
