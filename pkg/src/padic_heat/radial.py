"""Radial functions and locally constant functions on Q_p^n.

A radial function is tabulated on spheres ``||x|| = p**m``; the value at
the origin is kept separately.  Outside the table the function follows a
tail model: zero, constant, power law ``c * p**(m*sigma)`` or a vectorised
evaluator.

Locally constant functions are finite overlays of balls on top of a radial
tail.  Pieces may be nested (the innermost containing ball wins), which
keeps ``ball_integral`` exact through the ultrametric rule that two balls
are either nested or disjoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .padic_core import (
    INF,
    Ball,
    FiniteWindow,
    PAdicPoint,
    PAdicScalar,
    int_radius_exps,
)

EPS_SERIES = 1e-16
SPHERE_CAP = 400
_CHUNK = 16


def sphere_volumes(p: int, n: int, ms) -> np.ndarray:
    ms = np.asarray(ms, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(ms * n * math.log(p)) * (1.0 - float(p) ** (-n))


def ppow(p: int, e) -> np.ndarray:
    """p**e for array exponents, overflowing quietly to inf."""
    with np.errstate(over="ignore"):
        return np.exp(np.asarray(e, dtype=float) * math.log(p))


def _times(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 0 * inf counts as 0: vanishing values on huge spheres do not contribute
    with np.errstate(invalid="ignore", over="ignore"):
        out = a * b
    return np.where(a == 0, 0.0, out)


def sum_series(term: Callable[[np.ndarray], np.ndarray], start: int, step: int = 1,
               eps: float = EPS_SERIES, cap: int = SPHERE_CAP) -> complex:
    """Sum ``term(k)`` for k = start, start+step, ... until the terms are
    negligible against the accumulated absolute sum."""
    total = 0.0
    absum = 0.0
    done = 0
    zero_chunks = 0
    while done < cap:
        ks = start + step * np.arange(done, min(done + _CHUNK, cap))
        vals = np.asarray(term(ks))
        if not np.all(np.isfinite(vals)):
            raise ConvergenceError(f"non-finite term near sphere index {ks[0]}")
        total = total + vals.sum()
        mags = np.abs(vals)
        absum += float(mags.sum())
        done += len(ks)
        last = float(mags[-4:].max())
        if absum == 0.0:
            zero_chunks += 1
            if zero_chunks >= 2:
                return total
            continue
        if last <= eps * absum:
            return total
    raise ConvergenceError(
        f"series not settled after {cap} sphere indices", achieved=last / absum
    )


# --------------------------------------------------------------------------
# tail models


@dataclass(frozen=True)
class Tail:
    kind: str = "zero"  # zero | constant | power | evaluator
    coeff: complex = 0.0
    sigma: float = 0.0
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "power", "evaluator"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.kind == "evaluator" and self.fn is None:
            raise ValueError("evaluator tail needs fn")

    @classmethod
    def constant(cls, c) -> "Tail":
        return cls("constant", coeff=c)

    @classmethod
    def power(cls, c, sigma: float) -> "Tail":
        return cls("power", coeff=c, sigma=float(sigma))

    @classmethod
    def evaluator(cls, fn) -> "Tail":
        return cls("evaluator", fn=fn)

    def values(self, p: int, ms: np.ndarray) -> np.ndarray:
        ms = np.asarray(ms)
        if self.kind == "zero":
            return np.zeros(ms.shape)
        if self.kind == "constant":
            return np.full(ms.shape, self.coeff)
        if self.kind == "power":
            return self.coeff * ppow(p, ms * self.sigma)
        return np.asarray(self.fn(ms))


ZERO_TAIL = Tail()


@dataclass(frozen=True)
class RadialFunction:
    """Function of ||x|| on Q_p^n.

    ``values[i]`` is the value on the sphere of radius ``p**(m_lo + i)``.
    ``cdf(k)`` / ``ccdf(k)``, when given, return the closed-form masses of
    the ball B_k and of its complement and short-circuit the series.
    """

    prime: int
    n: int
    m_lo: int = 0
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    value_at_zero: complex = 0.0
    tail_lo: Tail = ZERO_TAIL
    tail_hi: Tail = ZERO_TAIL
    cdf: Optional[Callable[[int], float]] = field(default=None, compare=False)
    ccdf: Optional[Callable[[int], float]] = field(default=None, compare=False)
    eps: float = EPS_SERIES
    cap: int = SPHERE_CAP

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))

    @classmethod
    def constant(cls, p: int, n: int, c) -> "RadialFunction":
        return cls(p, n, value_at_zero=c, tail_lo=Tail.constant(c), tail_hi=Tail.constant(c))

    @classmethod
    def from_callable(cls, p, n, fn, value_at_zero=0.0, **kw) -> "RadialFunction":
        ev = Tail.evaluator(fn)
        return cls(p, n, value_at_zero=value_at_zero, tail_lo=ev, tail_hi=ev, **kw)

    @classmethod
    def ball_indicator(cls, p: int, n: int, r: int, c=1.0) -> "RadialFunction":
        """c on B_r(0), zero outside."""
        return cls(p, n, m_lo=r + 1, values=np.zeros(0), value_at_zero=c,
                   tail_lo=Tail.constant(c))

    @property
    def m_hi(self) -> int:
        """Last tabulated sphere index (m_lo - 1 for an empty table)."""
        return self.m_lo + len(self.values) - 1

    def at(self, ms) -> np.ndarray:
        ms = np.asarray(ms, dtype=np.int64)
        scalar = ms.ndim == 0
        ms = np.atleast_1d(ms)
        out = np.zeros(ms.shape, dtype=complex if np.iscomplexobj(self.values) or
                       any(isinstance(t.coeff, complex) for t in (self.tail_lo, self.tail_hi))
                       else float)
        lo = ms < self.m_lo
        hi = ms > self.m_hi
        mid = ~(lo | hi)
        if lo.any():
            out = out.astype(np.result_type(out, self.tail_lo.values(self.prime, ms[lo][:1])))
            out[lo] = self.tail_lo.values(self.prime, ms[lo])
        if hi.any():
            out = out.astype(np.result_type(out, self.tail_hi.values(self.prime, ms[hi][:1])))
            out[hi] = self.tail_hi.values(self.prime, ms[hi])
        if mid.any():
            out = out.astype(np.result_type(out, self.values))
            out[mid] = self.values[ms[mid] - self.m_lo]
        return out[0] if scalar else out

    def __call__(self, x: PAdicPoint):
        if x.is_zero:
            return self.value_at_zero
        return self.at(int(x.radius_exp()))

    # sums ------------------------------------------------------------------
    def _vol(self, ms):
        return sphere_volumes(self.prime, self.n, ms)

    def sum_above(self, k: int, e: float) -> complex:
        """sum_{m > k} f(m) * p**(m*e)."""
        p = self.prime
        total = 0.0
        if k < self.m_hi:
            ms = np.arange(max(k + 1, self.m_lo), self.m_hi + 1)
            if len(ms):
                total = total + np.sum(_times(self.at(ms), ppow(p, ms * e)))
        # part of the lower tail lying above k
        if k + 1 < self.m_lo:
            total = total + self._tail_range(self.tail_lo, k + 1, self.m_lo - 1, e)
        start = max(k, self.m_hi) + 1
        return total + self._tail_upper(self.tail_hi, start, e)

    def _tail_range(self, tail: Tail, a: int, b: int, e: float) -> complex:
        """sum_{a <= m <= b} tail(m) p**(m e); b finite, a may be -inf (None)."""
        p = self.prime
        if tail.kind == "zero":
            return 0.0
        if tail.kind in ("constant", "power"):
            s = e + (tail.sigma if tail.kind == "power" else 0.0)
            c = tail.coeff
            if a is None:
                if s <= 0:
                    raise DomainError("lower tail sum diverges")
                return c * p ** (b * s) / (1.0 - p ** (-s))
            if s == 0:
                return c * (b - a + 1)
            return c * (p ** (a * s) - p ** ((b + 1) * s)) / (1.0 - p**s)
        if a is None:
            return sum_series(lambda ms: _times(tail.fn(ms), ppow(p, ms * e)), b, -1,
                              self.eps, self.cap)
        ms = np.arange(a, b + 1)
        return np.sum(_times(tail.fn(ms), ppow(p, ms * e)))

    def _tail_upper(self, tail: Tail, start: int, e: float) -> complex:
        """sum_{m >= start} tail(m) p**(m e)."""
        p = self.prime
        if tail.kind == "zero":
            return 0.0
        if tail.kind in ("constant", "power"):
            s = e + (tail.sigma if tail.kind == "power" else 0.0)
            if tail.coeff == 0:
                return 0.0
            if s >= 0:
                raise DomainError(f"upper tail diverges (growth exponent {s} >= 0)")
            return tail.coeff * p ** (start * s) / (1.0 - p**s)
        return sum_series(lambda ms: _times(tail.fn(ms), ppow(p, ms * e)), start, 1,
                          self.eps, self.cap)

    def sum_below(self, k: int, e: float) -> complex:
        """sum_{m <= k} f(m) * p**(m*e)."""
        p = self.prime
        total = 0.0
        top = min(k, self.m_hi)
        if top >= self.m_lo:
            ms = np.arange(self.m_lo, top + 1)
            total = total + np.sum(_times(self.at(ms), ppow(p, ms * e)))
        if k > self.m_hi:
            total = total + self._tail_range(self.tail_hi, self.m_hi + 1, k, e)
        return total + self._tail_range(self.tail_lo, None, min(k, self.m_lo - 1), e)

    def mass_below(self, k: int) -> complex:
        """Integral over the ball ||x|| <= p**k."""
        if self.cdf is not None:
            return self.cdf(k)
        return (1.0 - self.prime ** (-self.n)) * self.sum_below(k, self.n)

    def mass_above(self, k: int) -> complex:
        """Integral over ||x|| > p**k."""
        if self.ccdf is not None:
            return self.ccdf(k)
        return (1.0 - self.prime ** (-self.n)) * self.sum_above(k, self.n)

    def mass_between(self, lo: Optional[int], hi: int) -> complex:
        """Integral over p**lo < ||x|| <= p**hi (lo=None: the whole ball)."""
        if lo is None:
            return self.mass_below(hi)
        if hi <= lo:
            return 0.0
        if self.cdf is not None:
            return self.cdf(hi) - self.cdf(lo)
        ms = np.arange(lo + 1, hi + 1)
        return np.sum(_times(self.at(ms), self._vol(ms)))


def integrate_radial(f: RadialFunction) -> complex:
    """Integral of a radial function over Q_p^n."""
    if f.cdf is not None and f.ccdf is not None:
        return f.cdf(0) + f.ccdf(0)
    return f.mass_below(0) + f.mass_above(0)


def radial_product(f: RadialFunction, g: RadialFunction) -> RadialFunction:
    """Pointwise product, evaluated lazily."""
    return RadialFunction.from_callable(
        f.prime, f.n, lambda ms: _times(f.at(ms), g.at(ms)),
        value_at_zero=f.value_at_zero * g.value_at_zero, eps=f.eps, cap=f.cap,
    )


def pair_mass_above(tail: RadialFunction, g: RadialFunction, k: int) -> complex:
    """sum_{m > k} tail(m) g(m) vol_m, using tail's closed forms where possible."""
    p, n = g.prime, g.n
    total = 0.0
    if k < tail.m_hi:
        ms = np.arange(max(k + 1, tail.m_lo), tail.m_hi + 1)
        if len(ms):
            total = total + np.sum(_times(_times(tail.at(ms), g.at(ms)), sphere_volumes(p, n, ms)))
    if k + 1 < tail.m_lo:
        ms = np.arange(k + 1, tail.m_lo)
        total = total + np.sum(_times(_times(tail.at(ms), g.at(ms)), sphere_volumes(p, n, ms)))
    start = max(k, tail.m_hi)
    th = tail.tail_hi
    if th.kind == "zero":
        return total
    if th.kind == "constant":
        return total + th.coeff * g.mass_above(start)
    if th.kind == "power":
        return total + th.coeff * (1.0 - p ** (-n)) * g.sum_above(start, th.sigma + n)
    return total + radial_product(tail, g).mass_above(start)


# --------------------------------------------------------------------------
# locally constant functions


@dataclass(frozen=True)
class Piece:
    ball: Ball
    value: complex


@dataclass(frozen=True)
class LocallyConstantFunction:
    """Overlay of constant values on balls above a radial tail.

    ``loc_exp`` is the exponent of local constancy l: the function is
    constant on every ball of radius p**-l.  ``tail=None`` makes the
    function partial (undefined off the pieces).
    """

    pieces: tuple[Piece, ...]
    tail: Optional[RadialFunction]
    loc_exp: int
    growth_exp: float = 0.0
    growth_const: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        balls = [pc.ball for pc in self.pieces]
        for i, b in enumerate(balls):
            if b.radius_exp < -self.loc_exp:
                raise ValueError(
                    f"piece radius p^{b.radius_exp} finer than the constancy scale p^{-self.loc_exp}"
                )
            for b2 in balls[:i]:
                if b.relation(b2) == "equal":
                    raise ValueError("two pieces occupy the same ball")
        if self.growth_exp < 0:
            raise ValueError("growth exponent must be >= 0")

    @property
    def prime(self) -> int:
        if self.pieces:
            return self.pieces[0].ball.center.prime
        return self.tail.prime

    @property
    def n(self) -> int:
        if self.pieces:
            return self.pieces[0].ball.center.n
        return self.tail.n

    # structure ---------------------------------------------------------------
    @cached_property
    def _parents(self) -> list[Optional[int]]:
        out = []
        for i, pc in enumerate(self.pieces):
            best = None
            for j, other in enumerate(self.pieces):
                if j != i and pc.ball.relation(other.ball) == "inside":
                    if best is None or other.ball.radius_exp < self.pieces[best].ball.radius_exp:
                        best = j
            out.append(best)
        return out

    @cached_property
    def _decomposition(self):
        """(r0, atoms): f = tail * 1{||x|| > p^r0} + sum w_j 1_{B_j}."""
        r0 = None
        for i, pc in enumerate(self.pieces):
            if self._parents[i] is None and pc.ball.is_centered():
                r0 = pc.ball.radius_exp
        atoms = []
        for i, pc in enumerate(self.pieces):
            par = self._parents[i]
            if par is not None:
                w = pc.value - self.pieces[par].value
            elif pc.ball.is_centered():
                w = pc.value
            else:
                w = pc.value - self._tail_at(int(pc.ball.center_exp()))
            atoms.append((pc.ball, w))
        return r0, atoms

    def _need_tail(self) -> RadialFunction:
        if self.tail is None:
            raise DomainError("function has no tail model outside its pieces")
        return self.tail

    def _tail_at(self, m: int):
        return self._need_tail().at(m)

    def support_exp(self) -> float:
        """Smallest K with every piece inside B_K (-inf without pieces)."""
        k = -INF
        for pc in self.pieces:
            k = max(k, pc.ball.radius_exp, pc.ball.center_exp())
        return k

    def is_compact(self) -> bool:
        """True when the function vanishes outside some ball."""
        t = self.tail
        if t is None:
            return False
        k = self.support_exp()
        k = int(k) if math.isfinite(k) else t.m_lo - 1
        probe = np.arange(k + 1, max(k + 1, t.m_hi) + 2)
        hi_zero = t.tail_hi.kind == "zero" or (t.tail_hi.kind != "evaluator" and t.tail_hi.coeff == 0)
        return hi_zero and not np.any(t.at(probe))

    # evaluation ----------------------------------------------------------------
    def __call__(self, x: PAdicPoint):
        best = None
        for pc in self.pieces:
            if pc.ball.contains(x) and (best is None or pc.ball.radius_exp < best.ball.radius_exp):
                best = pc
        if best is not None:
            return best.value
        tail = self._need_tail()
        return tail(x)

    def scaled(self, c) -> "LocallyConstantFunction":
        tail = None
        if self.tail is not None:
            t = self.tail
            tail = RadialFunction(
                t.prime, t.n, t.m_lo, t.values * c, t.value_at_zero * c,
                _scale_tail(t.tail_lo, c), _scale_tail(t.tail_hi, c), eps=t.eps, cap=t.cap,
            )
        return LocallyConstantFunction(
            tuple(Piece(pc.ball, pc.value * c) for pc in self.pieces), tail,
            self.loc_exp, self.growth_exp, abs(c) * self.growth_const,
        )

    # integrals ---------------------------------------------------------------
    def far_exp(self, x: PAdicPoint) -> int:
        """Index beyond which spheres around x avoid every piece."""
        k = self.support_exp()
        if not x.is_zero:
            k = max(k, x.radius_exp())
        return int(max(k, -self.loc_exp))

    def ball_integral(self, x: PAdicPoint, ks) -> np.ndarray:
        """Integral of f over B_k(x) for each k in ``ks``."""
        ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
        p, n = self.prime, self.n
        r0, atoms = self._decomposition
        tail = self._need_tail()
        mx = -INF if x.is_zero else x.radius_exp()
        out = np.zeros(len(ks), dtype=complex)
        for i, k in enumerate(ks):
            k = int(k)
            if mx > k:
                val = tail.at(int(mx)) if (r0 is None or mx > r0) else 0.0
                out[i] = val * p ** (n * k)
            else:
                out[i] = tail.mass_below(k) if r0 is None else tail.mass_between(r0, k)
        for ball, w in atoms:
            d = x - ball.center
            dist = -INF if d.is_zero else d.radius_exp()
            r = ball.radius_exp
            hit = dist <= np.maximum(ks, r)
            out += np.where(hit, w * ppow(p, n * np.minimum(ks, r)), 0.0)
        return out

    def sphere_profile(self, x: PAdicPoint, ks) -> np.ndarray:
        """Integral of f over the spheres ||xi - x|| = p**k."""
        ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
        both = self.ball_integral(x, np.concatenate([ks, ks - 1]))
        return both[: len(ks)] - both[len(ks):]


def _scale_tail(t: Tail, c) -> Tail:
    if t.kind == "evaluator":
        fn = t.fn
        return Tail.evaluator(lambda ms: c * np.asarray(fn(ms)))
    return Tail(t.kind, t.coeff * c, t.sigma)


def evaluate(f, x: PAdicPoint):
    """Value of a radial or locally constant function at x."""
    return f(x)


def compact_lcf(pieces: Sequence[tuple[Ball, complex]], loc_exp: int) -> LocallyConstantFunction:
    """Compactly supported function: given pieces, zero elsewhere."""
    p = pieces[0][0].center.prime
    n = pieces[0][0].center.n
    return LocallyConstantFunction(
        tuple(Piece(b, v) for b, v in pieces), RadialFunction(p, n), loc_exp
    )


def ball_indicator_lcf(p: int, n: int, r: int = 0, value=1.0) -> LocallyConstantFunction:
    """value on B_r(0), zero elsewhere; constant at scale p^r."""
    return compact_lcf([(Ball(PAdicPoint.zero(p, n), r), value)], loc_exp=-r)


def constant_lcf(p: int, n: int, c=1.0) -> LocallyConstantFunction:
    return LocallyConstantFunction((), RadialFunction.constant(p, n, c), loc_exp=-40,
                                   growth_exp=0.0, growth_const=abs(c))


def check_local_constancy(f: LocallyConstantFunction, samples: Sequence[PAdicPoint],
                          shifts: Sequence[PAdicPoint]) -> list:
    """Return (x, x') pairs with f(x + x') != f(x) for ||x'|| <= p**-l."""
    bad = []
    for x in samples:
        fx = f(x)
        for s in shifts:
            if not s.is_zero and s.radius_exp() > -f.loc_exp:
                continue
            if f(x + s) != fx:
                bad.append((x, s))
    return bad


def check_growth(f: LocallyConstantFunction, samples: Sequence[PAdicPoint]) -> list:
    """Sample points violating |f(x)| <= C (1 + ||x||^lambda)."""
    bad = []
    for x in samples:
        nx = 0.0 if x.is_zero else float(x.prime) ** x.radius_exp()
        if abs(f(x)) > f.growth_const * (1.0 + nx**f.growth_exp) * (1 + 1e-12):
            bad.append(x)
    return bad


# --------------------------------------------------------------------------
# convolution


@dataclass(frozen=True)
class ConvolutionResult:
    value: complex
    window_part: complex
    tail_part: complex
    tail_bound: float


def _check_growth_vs_kernel(f: LocallyConstantFunction, decay_exp: Optional[float]):
    if decay_exp is not None and f.growth_exp >= decay_exp:
        raise DomainError(
            f"growth exponent {f.growth_exp} must be below the kernel order {decay_exp} "
            "(0 <= lambda < alpha)"
        )


def convolve(f: LocallyConstantFunction, g: RadialFunction, x: PAdicPoint,
             decay_exp: Optional[float] = None) -> complex:
    """Integral of g(x - xi) f(xi) over Q_p^n."""
    return convolve_window(f, g, x, None, decay_exp=decay_exp).value


def convolve_window(f: LocallyConstantFunction, g: RadialFunction, x: PAdicPoint,
                    w: Optional[FiniteWindow] = None, method: str = "exact",
                    decay_exp: Optional[float] = None) -> ConvolutionResult:
    """Convolution split into the part over B_K (window) and the analytic tail.

    ``method='enumerate'`` sums the window part coset by coset; the default
    sums ultrametric sphere profiles around x.  ``decay_exp`` (the kernel
    order alpha) enables the growth guard lambda < alpha.
    """
    _check_growth_vs_kernel(f, decay_exp)
    tail = f._need_tail()
    l = f.loc_exp
    k_lo = -l
    k_far = f.far_exp(x)
    if w is not None:
        if not x.is_zero and x.radius_exp() > w.outer_exp:
            raise DomainError("x lies outside the window")
        if w.inner_exp < l:
            raise DomainError("window resolution is coarser than the constancy scale")
        k_cut = w.outer_exp
    else:
        k_cut = max(k_far, k_lo)

    fx = f(x)

    def inner(upto: int) -> complex:
        # sum over spheres around x with radius <= p^upto
        total = fx * g.mass_below(min(k_lo, upto))
        if upto > k_lo:
            ks = np.arange(k_lo + 1, upto + 1)
            total += np.sum(_times(g.at(ks), f.sphere_profile(x, ks)))
        return total

    if method == "exact" or w is None:
        window_part = inner(k_cut)
    elif method == "enumerate":
        window_part = _enumerate_window(f, g, x, w)
    else:
        raise ValueError(f"unknown method {method!r}")

    tail_part = 0.0
    if k_far > k_cut:
        ks = np.arange(k_cut + 1, k_far + 1)
        tail_part += np.sum(_times(g.at(ks), f.sphere_profile(x, ks)))
    start = max(k_far, k_cut)
    tail_part += pair_mass_above(tail, g, start)
    bound = float(abs(g.at(start + 1) * tail.at(start + 1))) * float(
        sphere_volumes(g.prime, g.n, [start + 1])[0]
    )
    return ConvolutionResult(complex(window_part + tail_part), complex(window_part),
                             complex(tail_part), bound)


def _enumerate_window(f: LocallyConstantFunction, g: RadialFunction, x: PAdicPoint,
                      w: FiniteWindow) -> complex:
    """Window part of the convolution by summing over cosets of B_{-L}."""
    total = 0j
    vol = float(w.cell_volume)
    L = w.inner_exp
    for rep in w.points():
        d = x - rep
        if d.is_zero or d.radius_exp() <= -L:
            total += f(rep) * g.mass_below(-L)
        else:
            total += f(rep) * g.at(int(d.radius_exp())) * vol
    return total


def convolve_radial(g: RadialFunction, h: RadialFunction, ms) -> np.ndarray:
    """(g * h) on the spheres ||x|| = p**m, via ultrametric sphere geometry."""
    p, n = g.prime, g.n
    out = []
    for m in np.atleast_1d(ms):
        m = int(m)
        head = g.at(m) * h.mass_below(m - 1)
        same = h.at(m) * (g.mass_below(m - 1) + g.at(m) * (p ** (m * n) - 2.0 * p ** ((m - 1) * n)))
        out.append(head + same + radial_product(g, h).mass_above(m))
    return np.array(out)


def convolve_radial_at_zero(g: RadialFunction, h: RadialFunction) -> complex:
    prod = radial_product(g, h)
    return prod.mass_below(0) + prod.mass_above(0)


def window_convolve_radial(g: RadialFunction, h: RadialFunction, m: int,
                           w: FiniteWindow) -> complex:
    """(g * h)(x) at x = (p^-m, 0, ..) by enumerating the cosets of ``w``.

    Cosets other than those of 0 and x carry constant values of both
    factors; those two cosets use ball masses; beyond B_K the product tail
    is summed analytically (||x - xi|| = ||xi|| there).
    """
    p, n, L, K = w.prime, w.n, w.inner_exp, w.outer_exp
    if m > K or m <= -L:
        raise DomainError("x must lie in the window and outside the origin coset")
    pts = w.integer_points()
    xi = np.zeros(n, dtype=np.int64)
    xi[0] = p ** (K - m)
    r_y = int_radius_exps(pts, p, K)
    r_xy = int_radius_exps(xi[None, :] - pts, p, K)
    vol = float(w.cell_volume)
    at0 = ~np.isfinite(r_y) | (r_y <= -L)
    atx = ~np.isfinite(r_xy) | (r_xy <= -L)
    plain = ~(at0 | atx)
    gy = g.at(r_xy[plain].astype(np.int64))
    hy = h.at(r_y[plain].astype(np.int64))
    total = np.sum(gy * hy) * vol
    total += g.at(m) * h.mass_below(-L)
    total += h.at(m) * g.mass_below(-L)
    total += radial_product(g, h).mass_above(K)
    return complex(total)


# --------------------------------------------------------------------------
# JSON


def _encode_scalar(s: PAdicScalar) -> list:
    if s.is_zero:
        return ["inf", ""]
    return [str(s.order), "".join(_digit_char(d) for d in s.digits)]


def _digit_char(d: int) -> str:
    return "0123456789abcdefghijklmnopqrstuvwxyz"[d]


def _decode_scalar(item, p: int) -> PAdicScalar:
    order, digits = item
    if str(order) == "inf" or not digits or not any(int(c, 36) for c in digits):
        return PAdicScalar.zero(p)
    ds = [int(c, 36) for c in digits]
    order = int(order)
    # leading zeros shift the valuation
    while ds[0] == 0:
        ds.pop(0)
        order += 1
    return PAdicScalar(p, order, tuple(ds))


def encode_point(x: PAdicPoint) -> list:
    return [_encode_scalar(c) for c in x.coords]


def decode_point(items, p: int) -> PAdicPoint:
    return PAdicPoint(tuple(_decode_scalar(it, p) for it in items))


def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def _encode_tail_model(t: Tail) -> dict:
    if t.kind == "evaluator":
        raise ValueError("evaluator tails are not serialisable")
    out = {"kind": t.kind}
    if t.kind != "zero":
        c = complex(t.coeff)
        out["value" if t.kind == "constant" else "coeff"] = [c.real, c.imag]
    if t.kind == "power":
        out["sigma"] = t.sigma
    return out


def _decode_tail_model(d: Optional[dict]) -> Tail:
    if d is None:
        return ZERO_TAIL
    kind = d.get("kind", "zero")
    if kind == "zero":
        return ZERO_TAIL
    if kind == "constant":
        return Tail.constant(_cplx(d["value"]))
    if kind == "power":
        return Tail.power(_cplx(d["coeff"]), float(d["sigma"]))
    raise ValueError(f"unknown tail kind {kind!r}")


def encode_radial(f: RadialFunction) -> dict:
    vals = [[complex(v).real, complex(v).imag] for v in f.values]
    z = complex(f.value_at_zero)
    return {"m_lo": f.m_lo, "values": vals, "at_zero": [z.real, z.imag],
            "tail_lo": _encode_tail_model(f.tail_lo), "tail_hi": _encode_tail_model(f.tail_hi)}


def decode_radial(d: dict, p: int, n: int) -> RadialFunction:
    kind = d.get("kind")
    if kind == "constant":
        return RadialFunction.constant(p, n, _cplx(d["value"]))
    if kind == "zero":
        return RadialFunction(p, n)
    if kind == "power":
        # c * ||x||^sigma everywhere, value 0 at the origin
        t = Tail.power(_cplx(d["coeff"]), float(d["sigma"]))
        return RadialFunction(p, n, tail_lo=t, tail_hi=t)
    vals = np.array([_cplx(v) for v in d.get("values", [])], dtype=complex)
    return RadialFunction(p, n, int(d.get("m_lo", 0)), vals, _cplx(d.get("at_zero", 0.0)),
                          _decode_tail_model(d.get("tail_lo")), _decode_tail_model(d.get("tail_hi")))


def encode_lcf(f: LocallyConstantFunction) -> dict:
    pieces = []
    for pc in f.pieces:
        v = complex(pc.value)
        pieces.append({"center": encode_point(pc.ball.center), "radius_exp": pc.ball.radius_exp,
                       "value": [v.real, v.imag]})
    return {"pieces": pieces, "tail": None if f.tail is None else encode_radial(f.tail),
            "loc_exp": f.loc_exp, "growth_exp": f.growth_exp, "growth_const": f.growth_const}


def decode_lcf(d: dict, p: int, n: int) -> LocallyConstantFunction:
    """Build a LocallyConstantFunction from its JSON form.

    Raises KeyError / ValueError / TypeError naming the offending field.
    """
    pieces = []
    for i, item in enumerate(d.get("pieces", [])):
        try:
            center = decode_point(item["center"], p)
            if center.n != n:
                raise ValueError(f"center has {center.n} coordinates, expected {n}")
            pieces.append(Piece(Ball(center, int(item["radius_exp"])), _cplx(item["value"])))
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"pieces[{i}]: {exc}") from exc
    tail = d.get("tail")
    tail = None if tail is None else decode_radial(tail, p, n)
    return LocallyConstantFunction(tuple(pieces), tail, int(d["loc_exp"]),
                                   float(d.get("growth_exp", 0.0)), float(d.get("growth_const", 1.0)))
