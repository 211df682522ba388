"""Finite-precision p-adic scalars and points, balls, characters and
exhaustive window quadrature on Q_p^n.

A nonzero scalar is stored as ``p**order * sum(digits[j] * p**j)`` with a
fixed number of digits (the relative precision).  Zero is a distinguished
value with ``order = inf`` and no digits.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ResourceError

DEFAULT_DIGITS = 24
ENUMERATION_CAP = 2**26
INF = math.inf


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    return all(p % d for d in range(3, math.isqrt(p) + 1, 2))


def valuation(value: int, p: int) -> float:
    """p-adic valuation of an integer; ``inf`` for zero."""
    if value == 0:
        return INF
    v = 0
    while value % p == 0:
        value //= p
        v += 1
    return v


def _to_digits(unit: int, p: int, width: int) -> tuple[int, ...]:
    out = []
    for _ in range(width):
        unit, r = divmod(unit, p)
        out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class PAdicScalar:
    prime: int
    order: float  # int, or inf for zero
    digits: tuple[int, ...] = ()

    def __post_init__(self):
        if self.order == INF:
            if any(self.digits):
                raise ValueError("zero must carry no nonzero digits")
            object.__setattr__(self, "digits", ())
            return
        if not self.digits or self.digits[0] == 0:
            raise ValueError("leading digit of a nonzero scalar must be nonzero")
        if any(not 0 <= d < self.prime for d in self.digits):
            raise ValueError(f"digits must lie in [0, {self.prime})")
        object.__setattr__(self, "order", int(self.order))

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, p: int) -> "PAdicScalar":
        return cls(p, INF, ())

    @classmethod
    def from_unit(cls, p: int, order: int, unit: int, width: int) -> "PAdicScalar":
        """Scalar ``p**order * unit`` known to ``width`` digits; renormalises."""
        unit %= p**width
        if unit == 0:
            return cls.zero(p)
        v = int(valuation(unit, p))
        unit //= p**v
        width -= v
        return cls(p, order + v, _to_digits(unit, p, width))

    @classmethod
    def from_fraction(cls, value, p: int, width: int = DEFAULT_DIGITS) -> "PAdicScalar":
        q = Fraction(value)
        if q == 0:
            return cls.zero(p)
        num, den = q.numerator, q.denominator
        vn, vd = int(valuation(num, p)), int(valuation(den, p))
        num //= p**vn
        den //= p**vd
        mod = p**width
        unit = (num * pow(den, -1, mod)) % mod
        return cls(p, vn - vd, _to_digits(unit, p, width))

    @classmethod
    def from_int(cls, value: int, p: int, width: int = DEFAULT_DIGITS) -> "PAdicScalar":
        return cls.from_fraction(Fraction(value), p, width)

    # inspection -------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.order == INF

    @property
    def width(self) -> int:
        return len(self.digits)

    @property
    def unit(self) -> int:
        return sum(d * self.prime**j for j, d in enumerate(self.digits))

    @property
    def abs_precision(self) -> float:
        return INF if self.is_zero else self.order + self.width

    def norm(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.prime) ** (-self.order)

    def to_fraction(self) -> Fraction:
        """Rational value of the truncated expansion."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.prime) ** self.order * self.unit

    # arithmetic -------------------------------------------------------
    def _check(self, other: "PAdicScalar"):
        if other.prime != self.prime:
            raise ValueError("mixed primes")

    def __neg__(self) -> "PAdicScalar":
        if self.is_zero:
            return self
        return PAdicScalar.from_unit(self.prime, self.order, -self.unit, self.width)

    def __add__(self, other: "PAdicScalar") -> "PAdicScalar":
        self._check(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        p = self.prime
        lo = min(self.order, other.order)
        prec = int(min(self.abs_precision, other.abs_precision))
        total = self.unit * p ** (self.order - lo) + other.unit * p ** (other.order - lo)
        return PAdicScalar.from_unit(p, lo, total, prec - lo)

    def __sub__(self, other: "PAdicScalar") -> "PAdicScalar":
        return self + (-other)

    def __mul__(self, other: "PAdicScalar") -> "PAdicScalar":
        self._check(other)
        if self.is_zero or other.is_zero:
            return PAdicScalar.zero(self.prime)
        width = min(self.width, other.width)
        return PAdicScalar.from_unit(
            self.prime, self.order + other.order, self.unit * other.unit, width
        )

    def scale(self, k: int) -> "PAdicScalar":
        """Multiply by ``p**k``."""
        if self.is_zero:
            return self
        return PAdicScalar(self.prime, self.order + k, self.digits)

    def __repr__(self):
        if self.is_zero:
            return f"PAdicScalar(p={self.prime}, 0)"
        ds = "".join(str(d) if d < 10 else f"[{d}]" for d in self.digits)
        return f"PAdicScalar(p={self.prime}, ord={self.order}, digits={ds})"


def fractional_part(x: PAdicScalar) -> Fraction:
    if x.is_zero or x.order >= 0:
        return Fraction(0)
    k = -x.order
    return Fraction(x.unit % x.prime**k, x.prime**k)


def character(x: PAdicScalar) -> complex:
    """Standard additive character exp(2 pi i {x}_p)."""
    return cmath.exp(2j * math.pi * fractional_part(x))


@dataclass(frozen=True)
class PAdicPoint:
    coords: tuple[PAdicScalar, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ValueError("a point needs at least one coordinate")
        if len({c.prime for c in self.coords}) != 1:
            raise ValueError("coordinates must share one prime")

    @classmethod
    def from_rationals(cls, p: int, values: Sequence, width: int = DEFAULT_DIGITS):
        return cls(tuple(PAdicScalar.from_fraction(v, p, width) for v in values))

    @classmethod
    def zero(cls, p: int, n: int) -> "PAdicPoint":
        return cls((PAdicScalar.zero(p),) * n)

    @classmethod
    def axis(cls, p: int, n: int, m: int, width: int = DEFAULT_DIGITS) -> "PAdicPoint":
        """The point ``(p**-m, 0, ..., 0)`` of norm ``p**m``."""
        first = PAdicScalar(p, -m, (1,) + (0,) * (width - 1))
        return cls((first,) + (PAdicScalar.zero(p),) * (n - 1))

    @property
    def prime(self) -> int:
        return self.coords[0].prime

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coords)

    def order(self) -> float:
        """min_i ord(x_i); ``inf`` at the origin."""
        return min(c.order for c in self.coords)

    def radius_exp(self) -> float:
        """m with norm = p**m; ``-inf`` at the origin."""
        return -self.order()

    def __add__(self, other: "PAdicPoint") -> "PAdicPoint":
        return PAdicPoint(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "PAdicPoint") -> "PAdicPoint":
        return PAdicPoint(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "PAdicPoint":
        return PAdicPoint(tuple(-a for a in self.coords))

    def scale(self, k: int) -> "PAdicPoint":
        return PAdicPoint(tuple(c.scale(k) for c in self.coords))

    def dot(self, other: "PAdicPoint") -> PAdicScalar:
        acc = PAdicScalar.zero(self.prime)
        for a, b in zip(self.coords, other.coords):
            acc = acc + a * b
        return acc


def norm(x: PAdicPoint) -> Fraction:
    """Max-norm on Q_p^n as an exact rational (zero at the origin)."""
    if x.is_zero:
        return Fraction(0)
    return Fraction(x.prime) ** (-int(x.order()))


@dataclass(frozen=True)
class Ball:
    center: PAdicPoint
    radius_exp: int

    def contains(self, x: PAdicPoint) -> bool:
        d = x - self.center
        return d.is_zero or d.radius_exp() <= self.radius_exp

    def center_exp(self) -> float:
        return self.center.radius_exp()

    def is_centered(self) -> bool:
        """True when the ball contains the origin, i.e. equals B_r(0)."""
        return self.center.is_zero or self.center.radius_exp() <= self.radius_exp

    def volume(self) -> Fraction:
        return Fraction(self.center.prime) ** (self.center.n * self.radius_exp)

    def relation(self, other: "Ball") -> str:
        """'equal', 'inside' (self within other), 'contains' or 'disjoint'."""
        d = self.center - other.center
        dist = -INF if d.is_zero else d.radius_exp()
        if dist > max(self.radius_exp, other.radius_exp):
            return "disjoint"
        if self.radius_exp == other.radius_exp:
            return "equal"
        return "inside" if self.radius_exp < other.radius_exp else "contains"


def indicator(ball: Ball) -> Callable[[PAdicPoint], float]:
    return lambda x: 1.0 if ball.contains(x) else 0.0


def sphere_volume(p: int, n: int, k: int) -> Fraction:
    """Haar measure of the sphere ||x|| = p**k."""
    return Fraction(p) ** (k * n) * (1 - Fraction(p) ** (-n))


def sphere_character_integral(x: PAdicPoint, k: int) -> Fraction:
    """Integral of Psi(x . xi) over the sphere ||xi|| = p**k."""
    p, n = x.prime, x.n
    if x.is_zero or x.radius_exp() <= -k:
        return sphere_volume(p, n, k)
    if x.radius_exp() == 1 - k:
        return -(Fraction(p) ** ((k - 1) * n))
    return Fraction(0)


# --------------------------------------------------------------------------
# finite windows


@dataclass(frozen=True)
class FiniteWindow:
    """Cosets of B_{-L}^n inside B_K^n, enumerated lexicographically.

    A coset representative is stored as an integer vector ``N`` with
    ``x_i = N_i * p**-K`` and ``0 <= N_i < p**(K+L)``.
    """

    prime: int
    n: int
    outer_exp: int
    inner_exp: int
    cap: int = ENUMERATION_CAP

    def __post_init__(self):
        if self.outer_exp + self.inner_exp < 0:
            raise ValueError("window needs outer_exp + inner_exp >= 0")

    @property
    def side(self) -> int:
        return self.prime ** (self.outer_exp + self.inner_exp)

    @property
    def size(self) -> int:
        return self.side**self.n

    @property
    def cell_volume(self) -> Fraction:
        return Fraction(self.prime) ** (-self.n * self.inner_exp)

    def _guard(self):
        if self.size > self.cap:
            raise ResourceError(
                f"window has {self.size} cosets, above the cap of {self.cap}"
            )

    def integer_points(self) -> np.ndarray:
        """All representatives as an int64 array of shape (size, n)."""
        self._guard()
        if self.side > 2**62:
            raise ResourceError("window side does not fit in int64")
        axis = np.arange(self.side, dtype=np.int64)
        grids = np.meshgrid(*([axis] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_point(self, ints: Sequence[int], width: int = DEFAULT_DIGITS) -> PAdicPoint:
        p, K = self.prime, self.outer_exp
        coords = []
        for v in ints:
            v = int(v)
            coords.append(
                PAdicScalar.zero(p) if v == 0 else PAdicScalar.from_unit(p, -K, v, width + int(valuation(v, p)))
            )
        return PAdicPoint(tuple(coords))

    def points(self) -> Iterator[PAdicPoint]:
        self._guard()
        for ints in itertools.product(range(self.side), repeat=self.n):
            yield self.to_point(ints)

    def radius_exps(self, ints: np.ndarray) -> np.ndarray:
        """Radius exponent of each integer-encoded point (``-inf`` for 0)."""
        return int_radius_exps(ints, self.prime, self.outer_exp)


def int_valuation(a: np.ndarray, p: int, big: int = 10**6) -> np.ndarray:
    """Elementwise p-adic valuation of an int array; ``big`` for zeros."""
    a = np.abs(np.asarray(a, dtype=np.int64))
    out = np.zeros(a.shape, dtype=np.int64)
    live = a != 0
    out[~live] = big
    while True:
        hit = live & (a % p == 0)
        if not hit.any():
            break
        out[hit] += 1
        a = np.where(hit, a // p, a)
    return out


def int_radius_exps(ints: np.ndarray, p: int, scale_exp: int) -> np.ndarray:
    """Radius exponents of points ``N * p**-scale_exp`` (rows of ``ints``)."""
    ords = int_valuation(ints, p).min(axis=-1)
    out = (scale_exp - ords).astype(float)
    out[ords >= 10**6] = -np.inf
    return out


def window_integrate(f: Callable, w: FiniteWindow, vectorized: bool = False) -> complex:
    """Sum of ``f(rep) * p**(-nL)`` over the cosets of ``w``.

    Exact for ``f`` locally constant at exponent ``>= -L`` and supported in
    B_K.  With ``vectorized=True`` ``f`` receives the (size, n) integer
    array of representatives and must return an array of values.
    """
    vol = float(w.cell_volume)
    if vectorized:
        vals = np.asarray(f(w.integer_points()))
        return complex(np.sum(vals) * vol)
    total = 0j
    for x in w.points():
        total += f(x)
    return complex(total * vol)
