"""Cauchy problem du/dt + a D^alpha u = f, u(x, 0) = phi(x).

The solution is u = u1 + u2 with u1 = Z(., t) * phi and the Duhamel term
u2 = int_0^t Z(., t - tau) * f(., tau) dtau.  Spatial convolutions are
exact sphere sums; the time integral is adaptive Gauss-Kronrod.
"""
from __future__ import annotations

import itertools
import math
import warnings
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import AccuracyError, DomainError
from .heat_kernel import KernelParams, KernelSlice, kernel_slice
from .padic_core import Ball, PAdicPoint
from .radial import (
    LocallyConstantFunction,
    Piece,
    RadialFunction,
    Tail,
    constant_lcf,
    convolve,
)
from .taibleson import OperatorParams, apply_hypersingular

QUAD_TOL = 1e-12


@dataclass(frozen=True)
class Source:
    """Separable source f(x, tau) = poly(tau) * profile(x); kind 'zero' has no profile."""

    kind: str = "zero"
    profile: Optional[LocallyConstantFunction] = None
    coeffs: tuple = (1.0,)  # poly(tau) = sum_k coeffs[k] tau^k

    @classmethod
    def zero(cls) -> "Source":
        return cls("zero")

    @classmethod
    def constant(cls, p: int, n: int, c=1.0) -> "Source":
        return cls("constant", constant_lcf(p, n, c), (1.0,))

    @classmethod
    def separable(cls, profile: LocallyConstantFunction, coeffs: Sequence[float]) -> "Source":
        return cls("separable", profile, tuple(coeffs))

    def time_factor(self, tau: float) -> float:
        return float(np.polyval(self.coeffs[::-1], tau))

    def __call__(self, x: PAdicPoint, tau: float):
        if self.kind == "zero":
            return 0.0
        return self.time_factor(tau) * self.profile(x)

    @property
    def growth_exp(self) -> float:
        return 0.0 if self.profile is None else self.profile.growth_exp

    @property
    def loc_exp(self) -> Optional[int]:
        return None if self.profile is None else self.profile.loc_exp


@dataclass(frozen=True)
class CauchyProblem:
    params: KernelParams
    phi: LocallyConstantFunction
    source: Source = field(default_factory=Source.zero)
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("T must be positive")
        lam = self.growth_exp
        if not (0 <= lam < self.params.alpha):
            raise DomainError(
                f"growth exponent lambda={lam} violates 0 <= lambda < alpha={self.params.alpha}"
            )

    @property
    def growth_exp(self) -> float:
        return max(self.phi.growth_exp, self.source.growth_exp)

    @property
    def loc_exp(self) -> int:
        """u(., t) is constant on balls of radius p^-l for this l."""
        ls = [self.phi.loc_exp]
        if self.source.loc_exp is not None:
            ls.append(self.source.loc_exp)
        return max(ls)


def _check_time(prob: CauchyProblem, t: float):
    if t < 0:
        raise DomainError("t must be >= 0")


def solve_homogeneous(prob: CauchyProblem, x: PAdicPoint, t: float) -> complex:
    """u1(x, t) = int Z(x - xi, t) phi(xi) dxi (phi(x) at t = 0)."""
    _check_time(prob, t)
    if t == 0:
        return complex(prob.phi(x))
    g = kernel_slice(prob.params, t).radial
    return convolve(prob.phi, g, x, decay_exp=prob.params.alpha)


def _inner(prob: CauchyProblem, x: PAdicPoint, s: float) -> complex:
    """Spatial part of the Duhamel integrand: (Z(., s) * profile)(x)."""
    prof = prob.source.profile
    if s == 0 or prob.source.kind == "constant":
        # the kernel has unit mass, so a constant profile is reproduced
        return complex(prof(x))
    g = KernelSlice(prob.params, s).radial
    return convolve(prof, g, x, decay_exp=prob.params.alpha)


def solve_duhamel(prob: CauchyProblem, x: PAdicPoint, t: float, tol: float = QUAD_TOL,
                  full_output: bool = False):
    """u2(x, t) = int_0^t (Z(., t - tau) * f(., tau))(x) dtau, integrated in s = t - tau."""
    _check_time(prob, t)
    src = prob.source
    if src.kind == "zero" or t == 0:
        return (0j, 0.0) if full_output else 0j
    if src.kind == "constant":
        # closed form: int_0^t poly(tau) dtau
        val = complex(prob.source.profile(x)) * float(np.polyval(np.polyint(src.coeffs[::-1]), t))
        return (val, 0.0) if full_output else val

    def integrand(s):
        return src.time_factor(t - s) * _inner(prob, x, s)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, 0.0, t, epsabs=tol, epsrel=tol, limit=200,
                                      complex_func=True)
        except integrate.IntegrationWarning as exc:
            raise AccuracyError(f"time quadrature did not converge: {exc}") from exc
    return (complex(val), float(abs(err))) if full_output else complex(val)


def solve_at(prob: CauchyProblem, x: PAdicPoint, t: float) -> complex:
    if t == 0:
        return complex(prob.phi(x))
    return solve_homogeneous(prob, x, t) + solve_duhamel(prob, x, t)


@dataclass
class SolutionField:
    problem: CauchyProblem
    growth_const: float = math.nan
    growth_exp: float = 0.0

    def __call__(self, x: PAdicPoint, t: float) -> complex:
        return solve_at(self.problem, x, t)

    def certify_growth(self, ms: Sequence[int], ts: Sequence[float]) -> tuple[float, float]:
        """Smallest C with |u(x, t)| <= C (1 + ||x||^lambda) on the (radius, time) grid.

        Points are taken on the first axis at ||x|| = p^m plus the origin.
        """
        prob = self.problem
        p, n = prob.params.p, prob.params.n
        lam = prob.growth_exp
        C = 0.0
        pts = [PAdicPoint.zero(p, n)] + [PAdicPoint.axis(p, n, int(m)) for m in ms]
        for t in ts:
            for x in pts:
                r = 0.0 if x.is_zero else float(p) ** x.radius_exp()
                C = max(C, abs(self(x, t)) / (1.0 + r**lam))
        self.growth_const, self.growth_exp = C, lam
        return C, lam


def solve(prob: CauchyProblem, ms: Sequence[int] = tuple(range(-3, 6)),
          ts: Optional[Sequence[float]] = None) -> SolutionField:
    """Solution field with an empirical growth certificate on a radius/time grid."""
    sol = SolutionField(prob)
    if ts is None:
        ts = (prob.T / 4, prob.T / 2, prob.T)
    sol.certify_growth(ms, ts)
    return sol


# --------------------------------------------------------------------------
# snapshots and residuals


def _window_exp(prob: CauchyProblem) -> int:
    k = -math.inf
    for f in (prob.phi, prob.source.profile):
        if f is not None:
            k = max(k, f.support_exp())
    k = max(k, -prob.loc_exp)
    return int(k)


def snapshot(prob: CauchyProblem, t: float, fn: Optional[Callable] = None,
             K: Optional[int] = None) -> LocallyConstantFunction:
    """u(., t) (or ``fn(x, t)``) as a locally constant function.

    Inside B_K it is tabulated on the cosets of B_{-l}; outside, where u is
    radial, values are computed on demand along the first axis and cached.
    """
    fn = fn or (lambda x, s: solve_at(prob, x, s))
    p, n = prob.params.p, prob.params.n
    l = prob.loc_exp
    K = _window_exp(prob) if K is None else K
    pieces = []
    side = p ** (K + l)
    unit = Fraction(p) ** (-K)  # coset representatives k p^-K, 0 <= k < p^(K+l)
    for ints in itertools.product(range(side), repeat=n):
        c = PAdicPoint.from_rationals(p, [k * unit for k in ints])
        pieces.append(Piece(Ball(c, -l), fn(c, t)))
    memo: dict = {}

    def radial_values(ms):
        out = []
        for m in np.atleast_1d(ms):
            m = int(m)
            if m not in memo:
                memo[m] = fn(PAdicPoint.axis(p, n, m), t)
            out.append(memo[m])
        return np.array(out, dtype=complex)

    tail = RadialFunction(p, n, m_lo=K + 1, tail_lo=Tail.constant(0.0),
                          tail_hi=Tail.evaluator(radial_values), eps=prob.params.eps_series,
                          cap=prob.params.sphere_cap)
    lam = prob.growth_exp
    return LocallyConstantFunction(tuple(pieces), tail, l, growth_exp=lam)


@dataclass
class ResidualReport:
    rows: list  # (x, t, du_dt, a_Du, f, residual)

    @property
    def max_residual(self) -> float:
        return max((abs(r[-1]) for r in self.rows), default=0.0)


def residual_check(prob: CauchyProblem, xs: Sequence[PAdicPoint], ts: Sequence[float],
                   h: float = 1e-4) -> ResidualReport:
    """R = du/dt (central differences) + a D^alpha u (hypersingular on a snapshot) - f."""
    a, al = prob.params.a, prob.params.alpha
    op = OperatorParams(prob.params.p, prob.params.n, al, prob.params.eps_series)
    rows = []
    for t in ts:
        if t - h <= 0:
            raise DomainError("finite-difference step reaches t <= 0")
        snap = snapshot(prob, t)
        for x in xs:
            du = (solve_at(prob, x, t + h) - solve_at(prob, x, t - h)) / (2 * h)
            Du = apply_hypersingular(snap, op, x)
            f = prob.source(x, t)
            rows.append((x, t, du, a * Du, f, du + a * Du - f))
    return ResidualReport(rows)


def exchange_check(prob: CauchyProblem, xs: Sequence[PAdicPoint], t: float, gamma: float) -> float:
    """Max |D^gamma u1 computed under the convolution - D^gamma applied to the u1 snapshot|."""
    lam = prob.phi.growth_exp
    if not (lam < gamma <= prob.params.alpha):
        raise DomainError("need lambda < gamma <= alpha")
    sl = kernel_slice(prob.params, t)
    dz = sl.dgamma(gamma)
    snap = snapshot(prob, t, fn=lambda x, s: solve_homogeneous(prob, x, s))
    op = OperatorParams(prob.params.p, prob.params.n, gamma, prob.params.eps_series)
    dev = 0.0
    for x in xs:
        under = convolve(prob.phi, dz, x)
        direct = apply_hypersingular(snap, op, x)
        dev = max(dev, abs(under - direct))
    return dev
