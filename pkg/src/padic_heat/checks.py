"""Property-check suites shared by the CLI and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import AccuracyError
from .heat_kernel import (
    DgammaZ,
    KernelParams,
    dZ_dt,
    heat_identity_residual,
    kernel_slice,
    z_series1,
    z_series2,
    z_tent,
)
from .padic_core import FiniteWindow
from .radial import integrate_radial, window_convolve_radial


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"{tag} {self.name}: {self.value:.3e} (tol {self.tol:.1e})"
        return s + (f" {self.detail}" if self.detail else "")

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(name, bool(value < tol), value, tol, detail)


def check_normalization(params: KernelParams, t: float, tol: float = 1e-12) -> CheckResult:
    total = integrate_radial(kernel_slice(params, t).radial)
    return _result("normalization", abs(total - 1.0), tol)


def check_nonnegative(params: KernelParams, t: float, ms=range(-40, 41), tol: float = 1e-15) -> CheckResult:
    vals = np.append(z_tent(np.asarray(list(ms)), t, params), z_tent(None, t, params))
    # value reported is the most negative entry (0 when all are >= 0)
    worst = max(0.0, -float(vals.min()))
    return CheckResult("nonnegativity", worst <= tol, worst, tol)


def representation_deviation(params: KernelParams, t: float, ms: Sequence[int],
                             certify: float = 1e-12) -> tuple[float, float, int]:
    """(max rel. dev. tent vs series1, max rel. dev. tent vs series2 where certified, #certified)."""
    ms = np.asarray(list(ms))
    zt = z_tent(ms, t, params)
    z1 = z_series1(ms, t, params)
    ok = zt > 0
    d1 = float(np.max(np.abs(zt[ok] - z1[ok]) / zt[ok])) if ok.any() else 0.0
    d2, count = 0.0, 0
    for m, z in zip(ms, zt):
        if z <= 0:
            continue
        try:
            v, bound = z_series2(int(m), t, params, rtol=certify, full_output=True)
        except AccuracyError:
            continue
        if bound <= certify * abs(v):
            d2 = max(d2, abs(v - z) / z)
            count += 1
    return d1, d2, count


def check_representations(params: KernelParams, t: float, ms=range(-20, 21),
                          tol: float = 1e-10) -> CheckResult:
    d1, d2, count = representation_deviation(params, t, ms)
    return _result("representations", max(d1, d2), tol, f"series2 certified at {count} radii")


def check_heat_equation(params: KernelParams, t: float, ms=range(-20, 21), tol: float = 1e-14,
                        fd_tol: float = 1e-6, h: float = 1e-5) -> list[CheckResult]:
    ms = np.asarray(list(ms))
    term = float(np.max(heat_identity_residual(ms, t, params)))
    d0, s0 = dZ_dt(None, t, params, full_output=True)
    term = max(term, abs(d0 + params.a * DgammaZ(None, t, params.alpha, params)) / s0)
    d = dZ_dt(ms, t, params)
    z = {k: z_tent(ms, t + k * h, params) for k in (-2, -1, 1, 2)}
    # fourth-order central stencil; the two-point one has error ~ (h/t)^2 at small t
    fd = (z[-2] - 8 * z[-1] + 8 * z[1] - z[2]) / (12 * h)
    fd2 = (z[1] - z[-1]) / (2 * h)
    scale = np.maximum(np.abs(d), np.abs(z_tent(ms, t, params)) / t)
    fd_err = float(np.max(np.abs(fd - d) / scale))
    fd2_err = float(np.max(np.abs(fd2 - d) / scale))
    return [_result("heat-equation termwise", term, tol),
            _result("heat-equation finite-difference", fd_err, fd_tol,
                    f"two-point stencil {fd2_err:.1e}")]


def check_vanishing_integral(params: KernelParams, t: float, gamma: float, tol: float = 1e-10) -> CheckResult:
    r = kernel_slice(params, t).dgamma(gamma)
    return _result(f"vanishing-integral gamma={gamma:g}", abs(integrate_radial(r)), tol)


def semigroup_deviation(params: KernelParams, t1: float, t2: float, ms: Sequence[int],
                        cap: int = 2**22) -> float:
    """Max |window (Z_t1 * Z_t2)(m) - Z_{t1+t2}(m)| over the given spheres."""
    g = kernel_slice(params, t1).radial
    h = kernel_slice(params, t2).radial
    target = kernel_slice(params, t1 + t2)
    ms = list(ms)
    K = max(ms)
    L = 1 - min(ms)
    w = FiniteWindow(params.p, params.n, K, L, cap=cap)
    dev = 0.0
    for m in ms:
        val = window_convolve_radial(g, h, m, w)
        dev = max(dev, abs(val - target.values([m])[0]))
    return dev


def check_semigroup(params: KernelParams, t1: float, t2: float, ms=range(-1, 2),
                    tol: float = 1e-8) -> CheckResult:
    return _result(f"semigroup t={t1:g},{t2:g}", semigroup_deviation(params, t1, t2, ms), tol)


def kernel_suite(params: KernelParams, t: float) -> list[CheckResult]:
    out = [check_normalization(params, t), check_nonnegative(params, t),
           check_representations(params, t)]
    out += check_heat_equation(params, t)
    out.append(check_vanishing_integral(params, t, params.alpha))
    out.append(check_vanishing_integral(params, t, params.alpha / 2))
    out.append(check_semigroup(params, t, t))
    return out
