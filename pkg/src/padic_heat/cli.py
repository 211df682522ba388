"""Command-line front end: kernel tables, Cauchy solves, simulation, polynomials.

Exit codes: 0 success (all selected checks pass), 1 a check failed or a
computation was impossible, 2 usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

import numpy as np

from .cauchy import CauchyProblem, Source, residual_check, solve_at
from .checks import CheckResult, kernel_suite
from .diffusion import DEFAULT_WINDOW, MAX_CLIPPED, empirical_vs_exact, simulate
from .elliptic import (
    HomogeneousPoly,
    generate_strongly_elliptic,
    is_strongly_elliptic,
    norm_identity_check,
    random_points,
)
from .errors import DomainError, PadicHeatError
from .heat_kernel import KernelParams, kernel_slice
from .padic_core import PAdicPoint
from .radial import decode_lcf, decode_point, encode_point

THREADS_ENV = "PADIC_HEAT_THREADS"
RESIDUAL_TOL = 1e-5


class InputError(Exception):
    """Malformed input file or field; reported with exit code 2."""


# --------------------------------------------------------------------------
# serialisation


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def dumps(obj: Any) -> str:
    """JSON with every float written as %.17g (non-finite floats become null)."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "%.17g" % obj if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_table(rows: list[dict], columns: Sequence[str], form: str, out):
    if form == "json":
        out.write(dumps(rows) + "\n")
        return
    out.write(",".join(columns) + "\n")
    for r in rows:
        out.write(",".join(fmt(r[c]) if r[c] is not None else "" for c in columns) + "\n")


def _open_out(path: Optional[str]):
    return open(path, "w") if path and path != "-" else sys.stdout


def _write_summary(path: Optional[str], summary: dict):
    if path:
        with open(path, "w") as fh:
            fh.write(dumps(summary) + "\n")


def threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV}={raw!r} is not an integer")
    if k < 1:
        raise InputError(f"{THREADS_ENV} must be >= 1")
    return k


# --------------------------------------------------------------------------
# argument types


def positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not a number")
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"{s} must be a positive finite number")
    return v


def positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError(f"{s} must be >= 1")
    return v


def _add_kernel_params(p: argparse.ArgumentParser):
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--alpha", type=positive_float, required=True)
    p.add_argument("--a", type=positive_float, required=True)


def _add_output(p: argparse.ArgumentParser, formats: bool = True):
    if formats:
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--summary", default=None, metavar="PATH", help="write a JSON summary here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padic-heat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="radial table of the heat kernel")
    _add_kernel_params(k)
    k.add_argument("--t", type=positive_float, required=True)
    k.add_argument("--m-range", type=int, nargs=2, default=(-10, 10), metavar=("LO", "HI"))
    k.add_argument("--check", action="store_true", help="run the kernel property suites")
    _add_output(k)

    s = sub.add_parser("solve", help="solve a Cauchy problem from JSON")
    s.add_argument("-f", "--file", required=True)
    s.add_argument("--check", action="store_true", help="compute equation residuals")
    s.add_argument("--h", type=positive_float, default=1e-4, help="time step of the residual")
    _add_output(s)

    m = sub.add_parser("simulate", help="sample paths of the diffusion")
    _add_kernel_params(m)
    m.add_argument("--dt", type=positive_float, required=True)
    m.add_argument("--steps", type=positive_int, required=True)
    m.add_argument("--paths", type=positive_int, required=True)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--window", type=int, nargs=2, default=DEFAULT_WINDOW, metavar=("LO", "HI"))
    m.add_argument("--max-clipped", type=positive_float, default=MAX_CLIPPED)
    _add_output(m, formats=False)

    e = sub.add_parser("elliptic", help="strongly elliptic polynomials")
    esub = e.add_subparsers(dest="action", required=True)
    c = esub.add_parser("check")
    c.add_argument("-f", "--file", required=True)
    c.add_argument("--samples", type=int, default=1000, help="random points for the norm identity")
    c.add_argument("--seed", type=int, default=0)
    _add_output(c, formats=False)
    g = esub.add_parser("gen")
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=positive_int, required=True)
    g.add_argument("--seed", type=int, default=0)
    _add_output(g, formats=False)
    return ap


# --------------------------------------------------------------------------
# input files


def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    if key not in obj:
        raise InputError(f"{where}.{key}: missing field")
    return obj[key]


def _num(v, where: str, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{where}: expected a number, got {json.dumps(v)}")
    if kind is int and int(v) != v:
        raise InputError(f"{where}: expected an integer, got {v}")
    return kind(v)


def parse_problem(obj: Any, path: str = "problem") -> tuple[CauchyProblem, list, list]:
    """CauchyProblem plus evaluation points and times from the problem JSON."""
    prm = _field(obj, "params", path)
    where = f"{path}: params"
    p = _num(_field(prm, "p", where), f"{where}.p", int)
    n = _num(_field(prm, "n", where), f"{where}.n", int)
    alpha = _num(_field(prm, "alpha", where), f"{where}.alpha")
    a = _num(_field(prm, "a", where), f"{where}.a")
    T = _num(_field(prm, "T", where), f"{where}.T")
    try:
        params = KernelParams(p, n, alpha, a)
    except (PadicHeatError, ValueError) as exc:
        raise InputError(f"{where}: {exc}")
    try:
        phi = decode_lcf(_field(obj, "phi", path), p, n)
    except (KeyError, ValueError, TypeError, PadicHeatError) as exc:
        raise InputError(f"{path}: phi: {exc}")
    src = obj.get("source", {"kind": "zero"})
    kind = _field(src, "kind", f"{path}: source")
    try:
        if kind == "zero":
            source = Source.zero()
        elif kind == "constant":
            source = Source.constant(p, n, _num(src.get("value", 1.0), f"{path}: source.value"))
        elif kind == "separable":
            prof = decode_lcf(_field(src, "profile", f"{path}: source"), p, n)
            coeffs = [_num(c, f"{path}: source.coeffs[{i}]") for i, c in enumerate(src.get("coeffs", [1.0]))]
            source = Source.separable(prof, coeffs)
        else:
            raise InputError(f"{path}: source.kind: unknown kind {kind!r}")
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: source: {exc}")
    try:
        prob = CauchyProblem(params, phi, source, T)
    except PadicHeatError as exc:
        raise InputError(f"{path}: {exc}")
    if "points" in obj:
        try:
            pts = [decode_point(x, p) for x in obj["points"]]
        except (ValueError, TypeError, IndexError) as exc:
            raise InputError(f"{path}: points: {exc}")
    else:
        pts = [PAdicPoint.zero(p, n)] + [PAdicPoint.axis(p, n, m) for m in range(-2, 3)]
    ts = obj.get("times", [T / 2, T])
    ts = [_num(t, f"{path}: times[{i}]") for i, t in enumerate(ts)]
    if any(t < 0 or t > T for t in ts):
        raise InputError(f"{path}: times must lie in [0, T]")
    return prob, pts, ts


# --------------------------------------------------------------------------
# commands


def cmd_kernel(args) -> int:
    params = KernelParams(args.p, args.n, args.alpha, args.a)
    lo, hi = args.m_range
    if lo > hi:
        raise InputError("--m-range needs LO <= HI")
    tab = kernel_slice(params, args.t).table(lo, hi)
    cols = ["m", "radius", "z_value", "sphere_mass", "cdf"]
    rows = [dict(zip(cols, vals)) for vals in zip(*(tab[c] for c in cols))]
    checks: list[CheckResult] = []
    if args.check:
        checks = kernel_suite(params, args.t)
        for c in checks:
            print(c.line())
    if not args.check or args.out:
        out = _open_out(args.out)
        try:
            write_table(rows, cols, args.format, out)
        finally:
            if out is not sys.stdout:
                out.close()
    ok = all(c.passed for c in checks)
    _write_summary(args.summary, {"command": "kernel", "passed": ok,
                                  "params": vars_of(params), "t": args.t,
                                  "checks": [c.as_dict() for c in checks]})
    return 0 if ok else 1


def vars_of(params: KernelParams) -> dict:
    return {"p": params.p, "n": params.n, "alpha": params.alpha, "a": params.a}


def cmd_solve(args) -> int:
    prob, pts, ts = parse_problem(load_json(args.file), args.file)
    resid = {}
    if args.check:
        rts = [t for t in ts if t - args.h > 0]
        rep = residual_check(prob, pts, rts, h=args.h)
        for i, row in enumerate(rep.rows):
            resid[(pts.index(row[0]), row[1])] = abs(row[-1])
    rows = []
    for i, x in enumerate(pts):
        m = None if x.is_zero else int(x.radius_exp())
        for t in ts:
            u = solve_at(prob, x, t)
            rows.append({"x_id": i, "m": m, "t": t, "re_u": u.real, "im_u": u.imag,
                         "residual": resid.get((i, t), math.nan)})
    out = _open_out(args.out)
    try:
        write_table(rows, ["x_id", "m", "t", "re_u", "im_u", "residual"], args.format, out)
    finally:
        if out is not sys.stdout:
            out.close()
    checks = []
    if args.check:
        worst = max(resid.values(), default=0.0)
        checks.append(CheckResult("cauchy residual", worst < RESIDUAL_TOL, worst, RESIDUAL_TOL))
        print(checks[-1].line(), file=sys.stderr if out is sys.stdout else sys.stdout)
    ok = all(c.passed for c in checks)
    _write_summary(args.summary, {"command": "solve", "passed": ok,
                                  "points": [encode_point(x) for x in pts], "times": ts,
                                  "checks": [c.as_dict() for c in checks]})
    return 0 if ok else 1


def cmd_simulate(args) -> int:
    params = KernelParams(args.p, args.n, args.alpha, args.a)
    lo, hi = args.window
    if lo >= hi:
        raise InputError("--window needs LO < HI")
    ts = simulate(params, args.dt, args.steps, args.paths, args.seed, state_window=(lo, hi),
                  max_clipped=args.max_clipped, workers=threads())
    out = _open_out(args.out)
    try:
        for tr in ts:
            for rec in tr.records():
                out.write(dumps(rec) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    cmp = empirical_vs_exact(ts, ts.law)
    _write_summary(args.summary, {
        "command": "simulate", "passed": True, "params": vars_of(params), "dt": args.dt,
        "steps": args.steps, "paths": args.paths, "seed": args.seed,
        "law_window": [ts.law.m_lo, ts.law.m_hi], "clipped_mass": ts.law.clipped_mass,
        "clipped_draws": int(ts.clipped.sum()),
        "radius_chi2": cmp.chi2, "radius_p_value": cmp.p_value, "radius_tv": cmp.tv,
    })
    return 0


def _load_poly(path: str) -> HomogeneousPoly:
    obj = load_json(path)
    for key in ("p", "n", "d", "monomials"):
        _field(obj, key, path)
    for i, mon in enumerate(obj["monomials"]):
        _field(mon, "exps", f"{path}: monomials[{i}]")
        _num(_field(mon, "coeff", f"{path}: monomials[{i}]"), f"{path}: monomials[{i}].coeff", int)
    try:
        return HomogeneousPoly.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}")


def cmd_elliptic(args) -> int:
    if args.action == "gen":
        f = generate_strongly_elliptic(args.p, args.n, args.seed)
        out = _open_out(args.out)
        try:
            out.write(dumps(f.to_json()) + "\n")
        finally:
            if out is not sys.stdout:
                out.close()
        _write_summary(args.summary, {"command": "elliptic gen", "passed": True, "poly": str(f)})
        return 0
    f = _load_poly(args.file)
    res = is_strongly_elliptic(f)
    checks = [CheckResult("strongly elliptic", res.ok, 0.0 if res.ok else 1.0, 0.5,
                          "" if res.ok else f"stratum {list(res.witness[0])} root {list(res.witness[1])}")]
    if res.ok and args.samples > 0:
        rep = norm_identity_check(f, random_points(f.p, f.n, args.samples, args.seed))
        checks.append(CheckResult("norm identity", rep.ok, float(len(rep.violations)), 0.5,
                                  f"{rep.checked} points"))
    out = _open_out(args.out)
    try:
        out.write(f"{f}\n")
        for c in checks:
            out.write(c.line() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    ok = all(c.passed for c in checks)
    _write_summary(args.summary, {"command": "elliptic check", "passed": ok, "poly": str(f),
                                  "checks": [c.as_dict() for c in checks]})
    return 0 if ok else 1


COMMANDS = {"kernel": cmd_kernel, "solve": cmd_solve, "simulate": cmd_simulate,
            "elliptic": cmd_elliptic}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"padic-heat: error: {exc}", file=sys.stderr)
        return 2
    except PadicHeatError as exc:
        print(f"padic-heat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, DomainError) else 1


if __name__ == "__main__":
    sys.exit(main())
