"""Command-line front end: traces, series coefficients, verification runs.

Subcommands
-----------
trace        one twisted trace Tr_{d,D}(j_m), routed by the sign and
             squareness of d*D
coeff        the limit coefficient a(d, D) from the series side
qforms list  class representatives for one discriminant
jm coeffs    q-expansion of j_m (with the disk cache)
verify       cross-checks: prop1, thm2, kloosterman, symmetry, values
table        CSV of traces over a range of discriminants

Exit codes: 0 success, 1 domain error, 2 verification discrepancy,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import geodesic, modfun, poincare, qform, series

__all__ = ["main", "dispatch", "cache_dir", "load_jm_cached"]

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_VERIFY = 2
EXIT_USAGE = 64

CACHE_VERSION = 1
CACHE_ENV = "MOCKTRACE_CACHE"


# ----------------------------------------------------------------- cache

def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "mocktrace"


def _cache_path(m: int, N: int) -> Path:
    return cache_dir() / f"jm_m{m}_N{N}_v{CACHE_VERSION}.txt"


def format_jm(m: int, N: int, coeffs: list[float]) -> str:
    lines = [f"# jm m={m} N={N} version={CACHE_VERSION}"]
    lines.extend(repr(c) for c in coeffs)
    return "\n".join(lines) + "\n"


def parse_jm(text: str, m: int, N: int) -> list[float]:
    """Parse the cache format; raises ValueError on any corruption."""
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != f"# jm m={m} N={N} version={CACHE_VERSION}":
        raise ValueError("bad header")
    coeffs = [float(s) for s in lines[1:]]
    expected = (m + N + 1) if m > 0 else (N + 1)
    if len(coeffs) != expected:
        raise ValueError(f"expected {expected} coefficients, got {len(coeffs)}")
    return coeffs


def load_jm_cached(m: int, N: int, use_cache: bool = True) -> modfun.QExpansion:
    """jm_coeffs with a plain-text disk cache; corruption falls back to recompute."""
    path = _cache_path(m, N)
    if use_cache and path.exists():
        try:
            coeffs = parse_jm(path.read_text(), m, N)
            return modfun.QExpansion(-m if m > 0 else 0, coeffs)
        except (ValueError, OSError) as exc:
            print(f"warning: cache file {path} unreadable ({exc}); recomputing", file=sys.stderr)
    exp = modfun.jm_coeffs(m, N)
    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                fh.write(format_jm(m, N, exp.coeffs))
            os.replace(tmp, path)
        except OSError as exc:
            print(f"warning: could not write cache {path}: {exc}", file=sys.stderr)
    return exp


# ------------------------------------------------------------- formatting

def _result_dict(res) -> dict:
    return {
        "d": res.d,
        "D": res.D,
        "m": res.m,
        "value": res.value,
        "method": res.method,
        "err_estimate": res.err_estimate,
        "params": res.params,
    }


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        keys = ["d", "D", "m", "value", "method", "err_estimate", "params"]
        writer.writerow(keys)
        writer.writerow([json.dumps(payload[k]) if k == "params" else payload.get(k, "") for k in keys])
        sys.stdout.write(buf.getvalue())


# ------------------------------------------------------------ subcommands

def _route_trace(d: int, D: int, m: int, route: str, N: int):
    dD = d * D
    if dD < 0:
        return geodesic.trace_negative(d, D, m)
    if dD == 0:
        raise ValueError("d * D must be nonzero")
    if math.isqrt(dD) ** 2 == dD:
        return geodesic.trace_square(d, D, m, route=route, N=N)
    return geodesic.trace_nonsquare(d, D, m)


def _cmd_trace(args) -> int:
    res = _route_trace(args.d, args.D, args.m, args.route, args.n)
    _emit(_result_dict(res), args.format)
    return EXIT_OK


def _cmd_coeff(args) -> int:
    kwargs = {}
    if args.deltas:
        kwargs["deltas"] = tuple(args.deltas)
        if args.cmax:
            kwargs["c_max_by_delta"] = {delta: args.cmax for delta in args.deltas}
    elif args.cmax:
        kwargs["c_max_by_delta"] = {delta: args.cmax for delta in series.DELTAS_DEFAULT}
    sv = series.coeff_a(args.d, args.D, **kwargs)
    payload = {
        "d": args.d,
        "D": args.D,
        "value": sv.value,
        "tail_estimate": sv.tail_estimate,
        "c_max": sv.c_max,
        "s": sv.s,
        "params": sv.params,
    }
    _emit(payload, args.format) if args.format == "csv" else print(
        json.dumps(payload, sort_keys=True)
    )
    return EXIT_OK


def _cmd_qforms_list(args) -> int:
    d = args.disc
    if d < 0:
        cl = qform.classes_negative(d)
        for Q, order in zip(cl.reps, cl.stab_orders):
            print(json.dumps({"a": Q.a, "b": Q.b, "c": Q.c, "stab_order": order}))
    elif d > 0 and math.isqrt(d) ** 2 == d:
        for Q in qform.classes_square(d).reps:
            print(json.dumps({"a": Q.a, "b": Q.b, "c": Q.c}))
    elif d > 0:
        for Q in qform.classes_nonsquare(d).reps:
            print(json.dumps({"a": Q.a, "b": Q.b, "c": Q.c}))
    else:
        raise ValueError("disc must be nonzero")
    return EXIT_OK


def _cmd_jm_coeffs(args) -> int:
    exp = load_jm_cached(args.m, args.n, use_cache=not args.no_cache)
    sys.stdout.write(format_jm(args.m, args.n, exp.coeffs))
    return EXIT_OK


def _verify_report(name: str, lhs: float, rhs: float, tol: float, relative: bool) -> int:
    lhs, rhs = float(lhs), float(rhs)
    delta = abs(lhs - rhs)
    bound = float(tol) * max(abs(lhs), abs(rhs)) if relative else float(tol)
    ok = bool(delta <= bound)
    print(
        json.dumps(
            {
                "check": name,
                "lhs": lhs,
                "rhs": rhs,
                "abs_delta": delta,
                "tolerance": bound,
                "pass": ok,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_verify_prop1(args) -> int:
    lhs, lhs_err = poincare.prop1_lhs(args.d, args.D, args.m, args.s, args.bound)
    rhs = series.prop1_rhs(args.d, args.D, args.m, args.s, c_max=args.cmax)
    tol = args.tol if args.tol else (1e-3 if args.m == 0 else 1e-2)
    return _verify_report("prop1", lhs, rhs.value, tol, relative=True)


def _cmd_verify_thm2(args) -> int:
    tr = geodesic.trace_square(args.d, args.D, args.m)
    rhs = series.thm2_rhs(args.d, args.D, args.m)
    tol = args.tol if args.tol else (rhs.tail_estimate + tr.err_estimate)
    return _verify_report("thm2", tr.value, rhs.value, tol, relative=False)


def _cmd_verify_kloosterman(args) -> int:
    worst = 0.0
    grid = [(1, 1), (4, 1), (1, 4), (9, 1), (4, 4), (5, 5)]
    for d, D in grid:
        if not (D == 1 or series.is_fundamental_discriminant(D)):
            continue
        for m in range(1, 7):
            for c in range(1, args.cmax + 1):
                lhs = series.s_m_sum(m, d, D, 4 * c)
                rhs = 0.5 * sum(
                    series.kronecker(D, n)
                    * math.sqrt(n / c)
                    * series.kloosterman_plus(d, m * m * D // (n * n), 4 * c // n)
                    for n in series.divisors(math.gcd(m, c))
                )
                worst = max(worst, abs(lhs - rhs))
    print(json.dumps({"check": "kloosterman", "worst_abs_delta": worst, "pass": worst <= 1e-9}))
    return EXIT_OK if worst <= 1e-9 else EXIT_VERIFY


def _cmd_verify_symmetry(args) -> int:
    worst = 0.0
    for c in range(1, args.cmax + 1):
        for d in range(0, 13):
            if d % 4 not in (0, 1):
                continue
            for D in range(0, d + 1):
                if D % 4 not in (0, 1):
                    continue
                a = series.kloosterman_plus(d, D, 4 * c)
                b = series.kloosterman_plus(D, d, 4 * c)
                worst = max(worst, abs(a - b))
    print(json.dumps({"check": "symmetry", "worst_abs_delta": worst, "pass": worst <= 1e-9}))
    return EXIT_OK if worst <= 1e-9 else EXIT_VERIFY


def _cmd_verify_values(args) -> int:
    targets = {(-3, 1, 1): -248.0, (-4, 1, 1): 492.0, (-7, 1, 1): -4119.0}
    worst = 0.0
    for (d, D, m), want in targets.items():
        got = geodesic.trace_negative(d, D, m).value
        worst = max(worst, abs(got - want))
    print(json.dumps({"check": "values", "worst_abs_delta": worst, "pass": worst <= 1e-6}))
    return EXIT_OK if worst <= 1e-6 else EXIT_VERIFY


def _cmd_table(args) -> int:
    writer = csv.writer(sys.stdout)
    writer.writerow(["d", "D", "m", "value", "method", "err_estimate", "params"])
    for d in range(args.d_min, args.d_max + 1):
        if d % 4 not in (0, 1) or d * args.D == 0:
            writer.writerow([d, args.D, args.m, "", "skipped", "", "{}"])
            continue
        res = _route_trace(d, args.D, args.m, "vertical", modfun.N_DEFAULT)
        writer.writerow(
            [
                res.d,
                res.D,
                res.m,
                repr(res.value),
                res.method,
                repr(res.err_estimate),
                json.dumps(res.params, sort_keys=True),
            ]
        )
    return EXIT_OK


# --------------------------------------------------------------- dispatch

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="mocktrace", description="Traces of modular functions over quadratic forms")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--no-cache", action="store_true", help="disable the q-expansion disk cache")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trace", help="one twisted trace")
    t.add_argument("--d", type=int, required=True)
    t.add_argument("--D", type=int, required=True)
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--route", choices=["vertical", "semicircle"], default="vertical")
    t.add_argument("--n", type=int, default=modfun.N_DEFAULT, help="q-expansion truncation")
    t.set_defaults(func=_cmd_trace)

    c = sub.add_parser("coeff", help="series-side coefficient a(d, D)")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--D", type=int, required=True)
    c.add_argument("--deltas", type=float, nargs="+")
    c.add_argument("--cmax", type=int)
    c.set_defaults(func=_cmd_coeff)

    q = sub.add_parser("qforms", help="quadratic form utilities")
    qs = q.add_subparsers(dest="qcommand", required=True)
    ql = qs.add_parser("list", help="class representatives for one discriminant")
    ql.add_argument("--disc", type=int, required=True)
    ql.set_defaults(func=_cmd_qforms_list)

    j = sub.add_parser("jm", help="Faber basis utilities")
    js = j.add_subparsers(dest="jcommand", required=True)
    jc = js.add_parser("coeffs", help="print the q-expansion of j_m")
    jc.add_argument("--m", type=int, required=True)
    jc.add_argument("--n", type=int, required=True)
    jc.set_defaults(func=_cmd_jm_coeffs)

    v = sub.add_parser("verify", help="cross-checks between pipelines")
    vs = v.add_subparsers(dest="vcommand", required=True)

    vp = vs.add_parser("prop1")
    vp.add_argument("--d", type=int, default=1)
    vp.add_argument("--D", type=int, default=1)
    vp.add_argument("--m", type=int, default=0)
    vp.add_argument("--s", type=float, default=2.0)
    vp.add_argument("--bound", type=int, default=None)
    vp.add_argument("--cmax", type=int, default=10_000)
    vp.add_argument("--tol", type=float, default=None)
    vp.set_defaults(func=_cmd_verify_prop1)

    vt = vs.add_parser("thm2")
    vt.add_argument("--d", type=int, required=True)
    vt.add_argument("--D", type=int, required=True)
    vt.add_argument("--m", type=int, required=True)
    vt.add_argument("--tol", type=float, default=None)
    vt.set_defaults(func=_cmd_verify_thm2)

    vk = vs.add_parser("kloosterman")
    vk.add_argument("--cmax", type=int, default=50)
    vk.set_defaults(func=_cmd_verify_kloosterman)

    vy = vs.add_parser("symmetry")
    vy.add_argument("--cmax", type=int, default=100)
    vy.set_defaults(func=_cmd_verify_symmetry)

    vv = vs.add_parser("values")
    vv.set_defaults(func=_cmd_verify_values)

    tb = sub.add_parser("table", help="CSV of traces over a d-range")
    tb.add_argument("--D", type=int, required=True)
    tb.add_argument("--m", type=int, required=True)
    tb.add_argument("--d-min", type=int, required=True)
    tb.add_argument("--d-max", type=int, required=True)
    tb.set_defaults(func=_cmd_table)

    return p


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
