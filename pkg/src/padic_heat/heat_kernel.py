"""Heat kernel Z(x, t) of du/dt + a D^alpha u = 0 on Q_p^n.

Z is radial.  On ``||x|| = p^m`` the canonical value is the tent sum

    z(m) = sum_{l <= -m} p^{nl} (exp(-a t p^{l alpha}) - exp(-a t p^{(l+1) alpha}))

whose terms are all nonnegative; at x = 0 the sum runs over every l.  Two
further series serve as oracles: a regrouped sphere-character sum
(``z_series1``) and the power series in t (``z_series2``).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import AccuracyError, DomainError
from .padic_core import is_prime
from .radial import (
    EPS_SERIES,
    SPHERE_CAP,
    RadialFunction,
    Tail,
    ppow,
    sphere_volumes,
)
from .taibleson import SpectralRadial, fourier_radial_values, fourier_value_at_zero

_EXP_CUT = 800.0  # exp(-800) underflows to 0


@dataclass(frozen=True)
class KernelParams:
    p: int
    n: int
    alpha: float
    a: float
    eps_series: float = EPS_SERIES
    sphere_cap: int = SPHERE_CAP

    def __post_init__(self):
        if not is_prime(self.p):
            raise DomainError(f"{self.p} is not prime")
        if self.n < 1:
            raise DomainError("dimension must be >= 1")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not self.a > 0:
            raise DomainError("a must be positive")

    @property
    def lnp(self) -> float:
        return math.log(self.p)


def _check_t(t: float):
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")


def _tail_depth(pr: KernelParams, e: float) -> int:
    return int(math.ceil(math.log(1.0 / pr.eps_series) / (e * pr.lnp))) + 6


def _l_peak(pr: KernelParams, t: float) -> float:
    return -math.log(pr.a * t) / (pr.alpha * pr.lnp)


def _l_top(pr: KernelParams, t: float) -> int:
    # beyond this index exp(-a t p^{l alpha}) is 0 in binary64
    return int(math.ceil(math.log(_EXP_CUT / (pr.a * t)) / (pr.alpha * pr.lnp))) + 1


def _tent_terms(pr: KernelParams, t: float, ls: np.ndarray) -> np.ndarray:
    at = pr.a * t
    A = at * ppow(pr.p, ls * pr.alpha)
    dA = A * (pr.p**pr.alpha - 1.0)
    return _times0(ppow(pr.p, ls * pr.n), np.exp(-A) * -np.expm1(-dA))


def _times0(a, b):
    with np.errstate(invalid="ignore", over="ignore"):
        out = a * b
    return np.where(b == 0, 0.0, out)




def z_tent(m, t: float, params: KernelParams):
    """Z on the sphere ||x|| = p^m (``m=None``: at the origin)."""
    _check_t(t)
    pr = params
    if m is None:
        lo = int(math.floor(_l_peak(pr, t))) - _tail_depth(pr, pr.n + pr.alpha)
        ls = np.arange(lo, _l_top(pr, t) + 1)
        return float(np.sum(_tent_terms(pr, t, ls)))
    ms = np.asarray(m, dtype=np.int64)
    scalar = ms.ndim == 0
    ms = np.atleast_1d(ms)
    top = _l_top(pr, t)
    lo = int(min(-ms.max(), math.floor(_l_peak(pr, t)))) - _tail_depth(pr, pr.n + pr.alpha)
    hi = int(min(-ms.min(), top))
    if hi < lo:
        hi = lo
    ls = np.arange(lo, hi + 1)
    cs = np.cumsum(_tent_terms(pr, t, ls))
    idx = np.clip(-ms - lo, 0, len(ls) - 1)
    out = cs[idx]
    return float(out[0]) if scalar else out


def z_series1(m, t: float, params: KernelParams):
    """Sphere-character form, regrouped to avoid cancellation.

    (1-p^-n) p^{-mn} sum_k p^{-kn} exp(-at p^{(-k-m)alpha}) - p^{-mn} exp(-at p^{(1-m)alpha})
    rewritten as sum_k w_k (exp(-A_k) - exp(-B)) using sum_k w_k = p^{-mn}.
    """
    _check_t(t)
    if m is None:
        raise DomainError("series form is undefined at the origin; use z_tent")
    pr = params
    p, n, al, at = pr.p, pr.n, pr.alpha, pr.a * t
    ms = np.atleast_1d(np.asarray(m, dtype=np.int64))
    top = _l_top(pr, t)
    span = top - int(math.floor(_l_peak(pr, t))) + 2 + _tail_depth(pr, n)
    out = np.empty(len(ms))
    for i, mm in enumerate(ms):
        # exponentials vanish until -k - m drops to the top index
        k0 = max(0, -int(mm) - top)
        ks = np.arange(k0, k0 + span)
        w = (1.0 - p ** (-n)) * ppow(p, -(ks + mm) * n)
        A = at * ppow(p, (-ks - mm) * al)
        B = at * float(p) ** ((1 - mm) * al)
        out[i] = np.sum(_times0(w, np.exp(-A) * -np.expm1(-(B - A))))
    return float(out[0]) if np.ndim(m) == 0 else out


def z_series2(m: int, t: float, params: KernelParams, max_terms: int = 400,
              rtol: float = 1e-13, full_output: bool = False):
    """Power series in t:

        sum_{j>=1} (-1)^j / j! (1 - p^{alpha j}) / (1 - p^{-alpha j - n}) (at)^j p^{-m(alpha j + n)}

    Terms alternate and, once they start shrinking, keep shrinking, so the
    first omitted term bounds the remainder.  The returned bound also counts
    rounding in the partial sums.  Raises AccuracyError when the bound does
    not reach ``rtol`` relative within ``max_terms``.
    """
    _check_t(t)
    if m is None:
        raise DomainError("series form is undefined at the origin; use z_tent")
    pr = params
    p, n, al = pr.p, pr.n, pr.alpha
    lat = math.log(pr.a * t)
    total = 0.0
    absum = 0.0
    prev_mag = math.inf
    for j in range(1, max_terms + 1):
        lc = al * j * pr.lnp + math.log1p(-(p ** (-al * j))) - math.log1p(-(p ** (-al * j - n)))
        lmag = j * lat - math.lgamma(j + 1) + lc - m * (al * j + n) * pr.lnp
        mag = math.exp(lmag) if lmag < 700 else math.inf
        if not math.isfinite(mag):
            break
        term = mag if j % 2 == 1 else -mag  # sign of (-1)^j (1 - p^{alpha j})
        shrinking = mag < prev_mag
        if shrinking and absum > 0:
            bound = mag + 4 * np.finfo(float).eps * absum
            if bound <= rtol * abs(total):
                return (total, bound) if full_output else total
        total += term
        absum += mag
        prev_mag = mag
    bound = prev_mag + 4 * np.finfo(float).eps * absum
    raise AccuracyError(
        f"power series not certified within {max_terms} terms at m={m}",
        achieved=bound / abs(total) if total else math.inf,
    )


def _cdf_parts(l, t: float, params: KernelParams):
    """Weights and exponents of the cdf series, skipping indices where the
    exponential is exactly 0; returns (ls, w, A, j0)."""
    pr = params
    ls = np.atleast_1d(np.asarray(l, dtype=np.int64))
    J = _tail_depth(pr, pr.n)
    lim = math.log(_EXP_CUT / (pr.a * t)) / (pr.alpha * pr.lnp)
    j0 = np.maximum(0, np.floor(-ls - lim).astype(np.int64))
    js = j0[:, None] + np.arange(J)[None, :]
    w = (1.0 - pr.p ** (-pr.n)) * ppow(pr.p, -js * pr.n)
    A = pr.a * t * ppow(pr.p, -(ls[:, None] + js) * pr.alpha)
    return ls, w, A, j0


def radial_cdf(l, t: float, params: KernelParams):
    """P(||X_t|| <= p^l) = (1-p^-n) sum_{j>=0} p^{-jn} exp(-a t p^{-(l+j) alpha})."""
    _check_t(t)
    _, w, A, _ = _cdf_parts(l, t, params)
    out = np.sum(w * np.exp(-A), axis=1)
    return float(out[0]) if np.ndim(l) == 0 else out


def radial_ccdf(l, t: float, params: KernelParams):
    """1 - radial_cdf, summed directly so that small tails keep full precision."""
    _check_t(t)
    _, w, A, j0 = _cdf_parts(l, t, params)
    head = -np.expm1(-j0 * params.n * params.lnp)  # indices whose exponential is 0
    out = head + np.sum(w * -np.expm1(-A), axis=1)
    return float(out[0]) if np.ndim(l) == 0 else out


def sphere_mass(m, t: float, params: KernelParams):
    """P(||X_t|| = p^m) = z(m) * vol(sphere m)."""
    ms = np.asarray(m, dtype=np.int64)
    return z_tent(ms, t, params) * sphere_volumes(params.p, params.n, ms)


# --------------------------------------------------------------------------
# derivatives


def kernel_spectrum(params: KernelParams, t: float) -> SpectralRadial:
    """Multiplier exp(-a t p^{k alpha}) with stable differences."""
    at = params.a * t
    p, al = params.p, params.alpha

    def g(ks):
        return np.exp(-at * ppow(p, np.asarray(ks) * al))

    def diff(ks, j):
        A = at * ppow(p, np.asarray(ks) * al)
        B = at * float(p) ** (j * al)
        lo = np.minimum(A, B)
        d = np.exp(-lo) * -np.expm1(-np.abs(B - A))
        return np.where(A <= B, d, -d)

    return SpectralRadial(p, params.n, g, diff, k_flat=int(math.floor(_l_peak(params, t))))


def DgammaZ(m, t: float, gamma: float, params: KernelParams, full_output: bool = False):
    """(D^gamma Z)(x, t) on ||x|| = p^m (``m=None``: origin), 0 < gamma <= alpha.

    ``full_output`` (array m only) adds the absolute summand sums.
    """
    _check_t(t)
    if not (0 < gamma <= params.alpha):
        raise DomainError(f"gamma must lie in (0, alpha={params.alpha}], got {gamma}")
    spectrum = kernel_spectrum(params, t)
    if m is None:
        return float(fourier_value_at_zero(spectrum, gamma, params.eps_series, params.sphere_cap))
    out = fourier_radial_values(spectrum, gamma, m, params.eps_series, params.sphere_cap,
                                full_output=full_output)
    if full_output:
        return out
    return float(out[0]) if np.ndim(m) == 0 else out


def dZ_dt(m, t: float, params: KernelParams, full_output: bool = False):
    """Time derivative of the tent sum, differentiated term by term.

    With h(l) = p^{l alpha} exp(-a t p^{l alpha}) each term becomes
    a p^{nl} (h(l+1) - h(l)).  ``full_output`` adds the absolute term sum
    (the scale against which rounding is measured).
    """
    _check_t(t)
    pr = params
    p, n, al, at = pr.p, pr.n, pr.alpha, pr.a * t
    depth = _tail_depth(pr, n + al)

    def terms(ls):
        u = ppow(p, ls * al)
        A = at * u
        # h(l+1) - h(l) = u (p^al exp(-A p^al) - exp(-A))
        inner = np.exp(-A) * (p**al * np.exp(-A * (p**al - 1.0)) - 1.0)
        return pr.a * _times0(ppow(p, ls * n), u * inner)

    top = _l_top(pr, t) + 1
    if m is None:
        ls = np.arange(int(math.floor(_l_peak(pr, t))) - depth, top + 1)
        tv = terms(ls)
        val, sc = float(np.sum(tv)), float(np.sum(np.abs(tv)))
        return (val, sc) if full_output else val
    ms = np.atleast_1d(np.asarray(m, dtype=np.int64))
    lo = int(min(-ms.max(), math.floor(_l_peak(pr, t)))) - depth
    hi = max(int(min(-ms.min(), top)), lo)
    ls = np.arange(lo, hi + 1)
    tv = terms(ls)
    idx = np.clip(-ms - lo, 0, len(ls) - 1)
    vals = np.cumsum(tv)[idx]
    scale = np.cumsum(np.abs(tv))[idx]
    if np.ndim(m) == 0:
        vals, scale = float(vals[0]), float(scale[0])
    return (vals, scale) if full_output else vals


def heat_identity_residual(ms: Sequence[int], t: float, params: KernelParams) -> np.ndarray:
    """|dZ/dt + a D^alpha Z| relative to the absolute summands of both sums."""
    d, s1 = dZ_dt(np.asarray(ms), t, params, full_output=True)
    dg, s2 = DgammaZ(np.asarray(ms), t, params.alpha, params, full_output=True)
    scale = s1 + params.a * s2
    return np.abs(d + params.a * dg) / np.maximum(scale, np.finfo(float).tiny)


# --------------------------------------------------------------------------
# slices


@dataclass(frozen=True)
class KernelSlice:
    """Z(., t) as a radial function, with a lazily grown value table."""

    params: KernelParams
    t: float
    _table: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        _check_t(self.t)

    def values(self, ms) -> np.ndarray:
        ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
        tab = self._table
        lo, hi = tab.get("lo"), tab.get("hi")
        if lo is None or ms.min() < lo or ms.max() > hi:
            with self._lock:
                lo = int(ms.min()) if lo is None else min(lo, int(ms.min()) - 8)
                hi = int(ms.max()) if hi is None else max(hi, int(ms.max()) + 8)
                vals = z_tent(np.arange(lo, hi + 1), self.t, self.params)
                tab.update(lo=lo, hi=hi, vals=vals)
        return tab["vals"][ms - tab["lo"]]

    @property
    def at_zero(self) -> float:
        if "zero" not in self._table:
            self._table["zero"] = z_tent(None, self.t, self.params)
        return self._table["zero"]

    @property
    def radial(self) -> RadialFunction:
        pr = self.params
        return RadialFunction.from_callable(
            pr.p, pr.n, self.values, value_at_zero=self.at_zero,
            cdf=lambda k: radial_cdf(k, self.t, pr),
            ccdf=lambda k: radial_ccdf(k, self.t, pr),
            eps=pr.eps_series, cap=pr.sphere_cap,
        )

    def dgamma(self, gamma: float) -> RadialFunction:
        """(D^gamma Z)(., t) as a radial function."""
        pr = self.params
        return RadialFunction.from_callable(
            pr.p, pr.n, lambda ms: DgammaZ(np.asarray(ms), self.t, gamma, pr),
            value_at_zero=DgammaZ(None, self.t, gamma, pr), eps=pr.eps_series, cap=pr.sphere_cap,
        )

    def table(self, m_lo: int, m_hi: int) -> dict:
        """Columns m, radius, z_value, sphere_mass, cdf."""
        ms = np.arange(m_lo, m_hi + 1)
        z = self.values(ms)
        return {
            "m": ms,
            "radius": ppow(self.params.p, ms),
            "z_value": z,
            "sphere_mass": z * sphere_volumes(self.params.p, self.params.n, ms),
            "cdf": radial_cdf(ms, self.t, self.params),
        }


@lru_cache(maxsize=512)
def kernel_slice(params: KernelParams, t: float) -> KernelSlice:
    """Memoised slice per (params, t)."""
    return KernelSlice(params, float(t))


# --------------------------------------------------------------------------
# bounds


@dataclass
class BoundReport:
    kind: str
    constant: float
    fit_max: float
    margin: float
    violations: list
    n_fit: int
    n_validate: int


def _bound_ratio(kind: str, ms, t: float, params: KernelParams, gamma: Optional[float]):
    """Quantity whose sup is the bound constant, on spheres ``ms`` plus the origin."""
    al, n, p = params.alpha, params.n, params.p
    ms = np.asarray(ms, dtype=np.int64)
    radii = np.concatenate([[0.0], ppow(p, ms)])
    s = t ** (1.0 / al)
    if kind == "z":
        vals = np.concatenate([[z_tent(None, t, params)], z_tent(ms, t, params)])
        return vals * (s + radii) ** (al + n) / t
    if kind == "dt":
        vals = np.concatenate([[dZ_dt(None, t, params)], dZ_dt(ms, t, params)])
        return np.abs(vals) * (s + radii) ** (al + n)
    if kind == "dgamma":
        vals = np.concatenate([[DgammaZ(None, t, gamma, params)], DgammaZ(ms, t, gamma, params)])
        return np.abs(vals) * (s + radii) ** (gamma + n)
    raise ValueError(kind)


def coarse_time_grid(params: KernelParams, t_lo: float = 1e-2, t_hi: float = 10.0,
                     per_period: int = 8) -> np.ndarray:
    """Geometric t grid with ``per_period`` points per factor p^alpha.

    The bound ratios are invariant under (||x||, t) -> (p ||x||, p^alpha t), so
    their sup over x is periodic in log t with that period.
    """
    step = params.alpha * params.lnp / per_period
    k = int(math.ceil(math.log(t_hi / t_lo) / step))
    return t_lo * np.exp(step * np.arange(k + 1))


def bound_check(t_grid: Optional[Sequence[float]], m_grid: Sequence[int], params: KernelParams,
                kind: str = "z", gamma: Optional[float] = None, refine: int = 10,
                validate: bool = True) -> BoundReport:
    """Fit the kernel bound constant on a grid and validate on a finer one.

    kind 'z':      Z <= C t (t^{1/alpha} + ||x||)^{-alpha-n}
    kind 'dt':     |dZ/dt| <= C (t^{1/alpha} + ||x||)^{-alpha-n}
    kind 'dgamma': |D^gamma Z| <= C (t^{1/alpha} + ||x||)^{-gamma-n}

    The fitted constant is the grid sup plus an interpolation margin from
    the second differences of the per-t sup in log t; the validation grid
    has ``refine`` times as many t points over the same range.  ``t_grid``
    None uses ``coarse_time_grid(params)``.
    """
    if t_grid is None:
        t_grid = coarse_time_grid(params)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    sups = np.array([_bound_ratio(kind, m_grid, t, params, gamma).max() for t in t_grid])
    fit_max = float(sups.max())
    margin = 0.0
    if len(t_grid) >= 3:
        margin = 2.0 * float(np.max(np.abs(np.diff(sups, 2)))) / 8.0
    C = (fit_max + margin) * (1 + 1e-12)
    violations = []
    n_val = 0
    if validate and len(t_grid) >= 2:
        fine = np.exp(np.linspace(np.log(t_grid[0]), np.log(t_grid[-1]), refine * (len(t_grid) - 1) + 1))
        for t in fine:
            r = _bound_ratio(kind, m_grid, t, params, gamma)
            n_val += len(r)
            bad = np.nonzero(r > C)[0]
            violations.extend((float(t), int(i)) for i in bad)
    return BoundReport(kind, C, fit_max, margin, violations, len(t_grid) * (len(m_grid) + 1), n_val)


def kernel_tail(params: KernelParams, t: float) -> Tail:
    return Tail.evaluator(lambda ms: z_tent(np.asarray(ms), t, params))
