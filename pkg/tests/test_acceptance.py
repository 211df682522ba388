"""Acceptance criteria over the parameter grid, one PASS/FAIL line each."""
import itertools
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from padic_heat.cauchy import CauchyProblem, Source, residual_check, solve_homogeneous
from padic_heat.checks import (
    check_heat_equation,
    check_nonnegative,
    check_normalization,
    check_vanishing_integral,
    representation_deviation,
    semigroup_deviation,
)
from padic_heat.diffusion import (
    build_increment_law,
    empirical_vs_exact,
    sample_radii,
    two_step_check,
)
from padic_heat.elliptic import (
    HomogeneousPoly,
    generate_strongly_elliptic,
    is_strongly_elliptic,
    norm_identity_check,
    random_points,
)
from padic_heat.gamma_riesz import norm_power_via_integral
from padic_heat.heat_kernel import KernelParams, bound_check
from padic_heat.padic_core import PAdicPoint
from padic_heat.radial import ball_indicator_lcf, constant_lcf
from padic_heat.taibleson import OperatorParams, apply_hypersingular, operator_cross_check

PRIMES = (2, 3, 5)
DIMS = (1, 2, 3)
ALPHAS = (0.5, 1.0, 2.0)
AS = (0.5, 1.0)
TIMES = (0.01, 0.1, 1.0, 10.0)

GRID = [KernelParams(p, n, al, a) for p, n, al, a in itertools.product(PRIMES, DIMS, ALPHAS, AS)]


def report(k: int, name: str, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def worst(items):
    """(value, label) with the largest value."""
    return max(items, key=lambda it: it[0])


def label(pr, t=None):
    s = f"p={pr.p} n={pr.n} alpha={pr.alpha:g} a={pr.a:g}"
    return s if t is None else f"{s} t={t:g}"


def test_kernel_normalization():
    v, where = worst((check_normalization(pr, t).value, label(pr, t)) for pr in GRID for t in TIMES)
    report(1, "|int Z - 1|", v < 1e-12, f"max {v:.2e} at {where} (tol 1e-12)")


def test_kernel_nonnegativity():
    v, where = worst((check_nonnegative(pr, t).value, label(pr, t)) for pr in GRID for t in TIMES)
    report(2, "min radial value", v <= 1e-15, f"most negative {-v:.2e} at {where} (tol -1e-15)")


def test_representations_agree():
    rows = []
    certified = 0
    for pr in GRID:
        for t in TIMES:
            d1, d2, count = representation_deviation(pr, t, range(-20, 21))
            rows.append((max(d1, d2), label(pr, t)))
            certified += count
    v, where = worst(rows)
    report(3, "series vs tent", v < 1e-10,
           f"max rel. dev. {v:.2e} at {where}, {certified} certified power-series radii (tol 1e-10)")


def test_heat_equation():
    term, fd = [], []
    for pr in GRID:
        for t in TIMES:
            a, b = check_heat_equation(pr, t)
            term.append((a.value, label(pr, t)))
            fd.append((b.value, label(pr, t)))
    vt, wt = worst(term)
    vf, wf = worst(fd)
    report(4, "heat equation", vt < 1e-14 and vf < 1e-6,
           f"termwise {vt:.2e} at {wt} (tol 1e-14); finite difference h=1e-5 {vf:.2e} at {wf} (tol 1e-6)")


def test_operator_vanishing_integral():
    rows = []
    for pr in GRID:
        for t in TIMES:
            for gamma in (pr.alpha / 2, pr.alpha):
                rows.append((check_vanishing_integral(pr, t, gamma).value, f"{label(pr, t)} gamma={gamma:g}"))
    v, where = worst(rows)
    report(5, "|int D^gamma Z|", v < 1e-10, f"max {v:.2e} at {where} (tol 1e-10)")


@pytest.mark.slow
def test_kernel_bounds():
    details = []
    total_bad = 0
    n_val = 0
    for kind in ("z", "dt", "dgamma"):
        worst_c = (0.0, "")
        for pr in GRID:
            gamma = pr.alpha / 2 if kind == "dgamma" else None
            rep = bound_check(None, range(-20, 21), pr, kind=kind, gamma=gamma)
            total_bad += len(rep.violations)
            n_val += rep.n_validate
            worst_c = max(worst_c, (rep.constant, label(pr)))
        details.append(f"{kind} max C {worst_c[0]:.3g} ({worst_c[1]})")
    report(6, "kernel bounds", total_bad == 0,
           f"{total_bad} violations in {n_val} validation points; " + "; ".join(details))


def test_semigroup():
    rows = []
    for p, n, al in itertools.product((2, 3), (1, 2), ALPHAS):
        pr = KernelParams(p, n, al, 1.0)
        for t1, t2 in ((0.1, 0.1), (0.1, 1.0), (1.0, 1.0)):
            rows.append((semigroup_deviation(pr, t1, t2, range(-2, 3)), f"{label(pr)} t={t1:g},{t2:g}"))
    v, where = worst(rows)
    report(7, "semigroup", v < 1e-8, f"max {v:.2e} at {where} (tol 1e-8)")


def test_initial_data_recovery():
    details = []
    ok = True
    for p, al in ((2, 1.0), (3, 0.5), (3, 2.0)):
        pr = KernelParams(p, 1, al, 1.0)
        prob = CauchyProblem(pr, ball_indicator_lcf(p, 1, 0))
        pts = [PAdicPoint.zero(p, 1)] + [PAdicPoint.axis(p, 1, m) for m in range(-3, 4)]
        errs = [max(abs(solve_homogeneous(prob, x, t) - prob.phi(x)) for x in pts)
                for t in (1e-2, 1e-3, 1e-4)]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        ok &= all(5 <= r <= 20 for r in ratios)
        details.append(f"{label(pr)} ratios {ratios[0]:.2f}, {ratios[1]:.2f}")
    report(8, "sup|u1 - phi| linear in t", ok, "; ".join(details) + " (need 5..20)")


def test_ball_indicator_operator():
    phi = ball_indicator_lcf(2, 1, 0)
    op = OperatorParams(2, 1, 1.0)
    x0, x2 = PAdicPoint.zero(2, 1), PAdicPoint.axis(2, 1, 1)
    dev = max(abs(apply_hypersingular(phi, op, x0) - 2 / 3), abs(apply_hypersingular(phi, op, x2) + 1 / 3))
    dev = max(dev, operator_cross_check(phi, op, [x0, x2]).max_deviation)
    report(9, "D^1 of the unit ball indicator", dev < 1e-10, f"max dev. {dev:.2e} from 2/3, -1/3 (tol 1e-10)")


def test_norm_power_identity():
    rows = []
    for p, n, al in itertools.product(PRIMES, (1, 2), ALPHAS):
        for m in range(-3, 4):
            v = float(norm_power_via_integral(PAdicPoint.axis(p, n, m), al))
            exact = float(p) ** (m * al)
            rows.append((abs(v - exact) / exact, f"p={p} n={n} alpha={al:g} ||x||=p^{m}"))
    v, where = worst(rows)
    report(10, "norm power via integral", v < 1e-10, f"max rel. dev. {v:.2e} at {where} (tol 1e-10)")


def test_cauchy_residuals():
    pr = KernelParams(2, 1, 1.0, 1.0)
    pts = [PAdicPoint.zero(2, 1)] + [PAdicPoint.axis(2, 1, m) for m in range(-2, 3)]
    problems = {
        "ball indicator, f=0": CauchyProblem(pr, ball_indicator_lcf(2, 1, 0)),
        "phi=0, f=1": CauchyProblem(pr, constant_lcf(2, 1, 0.0), Source.constant(2, 1)),
        "separable f=(1+2t) 1_B(-1)": CauchyProblem(
            pr, ball_indicator_lcf(2, 1, 0), Source.separable(ball_indicator_lcf(2, 1, -1), [1.0, 2.0])),
    }
    rows = [(residual_check(prob, pts, [0.1, 0.5, 1.0]).max_residual, name) for name, prob in problems.items()]
    v = max(r for r, _ in rows)
    report(11, "Cauchy residual", v < 1e-5, "; ".join(f"{n} {r:.2e}" for r, n in rows) + " (tol 1e-5)")


@pytest.mark.slow
def test_simulator_statistics():
    pr = KernelParams(2, 1, 1.0, 1.0)
    t, N = 0.5, 100_000
    law = build_increment_law(pr, t)
    one = empirical_vs_exact(sample_radii(law, N, seed=2024), law)
    two = two_step_check(pr, t, N, seed=777)
    ok = one.p_value > 0.01 and two.p_value > 0.01 and law.clipped_mass < 1e-9
    report(12, "simulator", ok,
           f"radius chi-square p={one.p_value:.3f}, two-step p={two.p_value:.3f}, "
           f"clipped mass {law.clipped_mass:.2e} (need p > 0.01, clipped < 1e-9)")


def test_elliptic_polynomials():
    details = []
    ok = True
    for p in (3, 5):
        for n in (1, 2, 3):
            f = generate_strongly_elliptic(p, n, seed=0)
            rep = norm_identity_check(f, random_points(p, n, 10_000, seed=100 * p + n))
            good = bool(is_strongly_elliptic(f)) and rep.ok and rep.checked == 10_000
            ok &= good
            details.append(f"p={p} n={n} d={f.d} {len(rep.violations)} violations")
    ref = HomogeneousPoly(3, 2, 2, (((2, 0), 1), ((0, 2), -2)))
    ref_ok = bool(is_strongly_elliptic(ref)) and norm_identity_check(ref, random_points(3, 2, 10_000, 7)).ok
    ok &= ref_ok
    report(13, "strongly elliptic polynomials", ok,
           "; ".join(details) + f"; x^2-2y^2 at p=3 {'ok' if ref_ok else 'failed'}")
