"""Homogeneous polynomials that are strongly elliptic modulo p.

f is strongly elliptic mod p when, for every non-empty set I of
coordinates, the reduction of f has no zero on the stratum where exactly
the coordinates in I are nonzero.  Such f satisfy |f(x)|_p = ||x||_p^d.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConstructionError, PrecisionError, ResourceError
from .padic_core import DEFAULT_DIGITS, ENUMERATION_CAP, PAdicPoint, PAdicScalar, is_prime, norm


@dataclass(frozen=True)
class HomogeneousPoly:
    p: int
    n: int
    d: int
    monomials: tuple  # ((exps...), coeff) with coeff in (0, p^W), coprime to p
    width: int = DEFAULT_DIGITS

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        mod = self.p**self.width
        merged: dict = {}
        for exps, c in self.monomials:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n:
                raise ValueError(f"exponent vector {exps} has the wrong length")
            if any(e < 0 for e in exps) or sum(exps) != self.d:
                raise ValueError(f"exponent vector {exps} does not have degree {self.d}")
            merged[exps] = (merged.get(exps, 0) + int(c)) % mod
        mons = []
        for exps, c in sorted(merged.items(), reverse=True):
            if c == 0:
                continue
            if c % self.p == 0:
                raise ValueError(f"coefficient {c} of {exps} is not a p-adic unit")
            mons.append((exps, c))
        if self.d < 1:
            raise ValueError("degree must be >= 1 (no constant term)")
        object.__setattr__(self, "monomials", tuple(mons))

    # io -------------------------------------------------------------------
    def signed(self, c: int) -> int:
        """Representative of a stored coefficient in (-p^W / 2, p^W / 2]."""
        mod = self.p**self.width
        return c - mod if c > mod // 2 else c

    def to_json(self) -> dict:
        return {"p": self.p, "n": self.n, "d": self.d,
                "monomials": [{"exps": list(e), "coeff": self.signed(c)} for e, c in self.monomials]}

    @classmethod
    def from_json(cls, obj) -> "HomogeneousPoly":
        if isinstance(obj, str):
            obj = json.loads(obj)
        mons = [(m["exps"], m["coeff"]) for m in obj["monomials"]]
        return cls(int(obj["p"]), int(obj["n"]), int(obj["d"]), tuple(mons))

    def __str__(self) -> str:
        parts = []
        for exps, c in self.monomials:
            c = self.signed(c)
            var = "*".join(f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e)
            parts.append(f"{c}*{var}" if c != 1 else var)
        return " + ".join(parts).replace("+ -", "- ")

    # evaluation ----------------------------------------------------------------
    def reduce_mod_p(self, pts: np.ndarray) -> np.ndarray:
        """f mod p at integer points (rows of ``pts``)."""
        p = self.p
        pts = np.asarray(pts, dtype=np.int64) % p
        out = np.zeros(len(pts), dtype=np.int64)
        for exps, c in self.monomials:
            term = np.full(len(pts), c % p, dtype=np.int64)
            for i, e in enumerate(exps):
                for _ in range(e):
                    term = (term * pts[:, i]) % p
            out = (out + term) % p
        return out

    def evaluate(self, x: PAdicPoint) -> PAdicScalar:
        """f(x) with digit arithmetic at the precision of x."""
        total = PAdicScalar.zero(self.p)
        for exps, c in self.monomials:
            term = PAdicScalar.from_int(c, self.p, self.width)
            for xi, e in zip(x.coords, exps):
                for _ in range(e):
                    term = term * xi
            total = total + term
        return total


def _all_points(p: int, n: int, cap: int) -> np.ndarray:
    if p**n > cap:
        raise ResourceError(f"{p}^{n} points exceed the enumeration cap {cap}")
    return np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64).reshape(-1, n)


def is_elliptic_mod_p(f: HomogeneousPoly, cap: int = ENUMERATION_CAP) -> bool:
    """True iff the reduction of f has no zero on F_p^n minus the origin."""
    pts = _all_points(f.p, f.n, cap)[1:]  # row 0 is the origin
    return bool(np.all(f.reduce_mod_p(pts) != 0))


def _stratum(p: int, n: int, I: Sequence[int]) -> np.ndarray:
    k = len(I)
    vals = np.array(list(itertools.product(range(1, p), repeat=k)), dtype=np.int64).reshape(-1, k)
    pts = np.zeros((len(vals), n), dtype=np.int64)
    pts[:, list(I)] = vals
    return pts


@dataclass(frozen=True)
class EllipticityResult:
    ok: bool
    witness: Optional[tuple] = None  # (I, x): I zero-based coordinate set, x a root on its stratum

    def __bool__(self) -> bool:
        return self.ok


def is_strongly_elliptic(f: HomogeneousPoly, cap: int = ENUMERATION_CAP) -> EllipticityResult:
    """Check each stratum T_I; return the first failing (I, x) as witness."""
    if f.p**f.n > cap:
        raise ResourceError(f"{f.p}^{f.n} points exceed the enumeration cap {cap}")
    for k in range(1, f.n + 1):
        for I in itertools.combinations(range(f.n), k):
            pts = _stratum(f.p, f.n, I)
            vals = f.reduce_mod_p(pts)
            bad = np.nonzero(vals == 0)[0]
            if len(bad):
                return EllipticityResult(False, (I, tuple(int(v) for v in pts[bad[0]])))
    return EllipticityResult(True)


# --------------------------------------------------------------------------
# construction


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(i + j for i, j in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def _poly_pow(a: dict, k: int, n: int) -> dict:
    out = {tuple([0] * n): 1}
    for _ in range(k):
        out = _poly_mul(out, a)
    return out


def non_powers(p: int, l: int) -> list[int]:
    """Units of F_p with no l-th root."""
    powers = {pow(x, l, p) for x in range(1, p)}
    return [u for u in range(1, p) if u not in powers]


def _exponent_choice(p: int) -> int:
    for l in range(2, p):
        if (p - 1) % l == 0 and non_powers(p, l):
            return l
    raise ConstructionError(
        f"F_{p}^x has no unit without an l-th root for any l >= 2; "
        "the inductive construction cannot leave one variable"
    )


def generate_strongly_elliptic(p: int, n_target: int, seed: int = 0) -> HomogeneousPoly:
    """Start from g = x1 and repeat g <- g^l - u x_{k+1}^{l deg g}.

    l is the smallest divisor of p - 1 above 1 that leaves some unit u
    without an l-th root; the seed picks u among those units.  Candidates
    producing a coefficient divisible by p are skipped.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    n = n_target
    g = {tuple([1] + [0] * (n - 1)): 1}
    deg = 1
    if n == 1:
        return HomogeneousPoly(p, 1, 1, tuple(g.items()))
    l = _exponent_choice(p)
    rng = np.random.default_rng(seed)
    for k in range(1, n):
        cands = list(non_powers(p, l))
        rng.shuffle(cands)
        nxt = None
        base = _poly_pow(g, l, n)
        for u in cands:
            e = [0] * n
            e[k] = l * deg
            trial = dict(base)
            trial[tuple(e)] = trial.get(tuple(e), 0) - int(u)
            if all(c % p for c in trial.values() if c):
                nxt = trial
                break
        if nxt is None:
            raise ConstructionError(f"every admissible unit gives a non-unit coefficient at step {k}")
        g = {e: c for e, c in nxt.items() if c}
        deg *= l
    return HomogeneousPoly(p, n, deg, tuple(g.items()))


# --------------------------------------------------------------------------
# norm identity


@dataclass
class NormIdentityReport:
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def random_points(p: int, n: int, count: int, seed: int, orders: tuple[int, int] = (-4, 4),
                  width: int = DEFAULT_DIGITS, zero_prob: float = 0.1) -> list[PAdicPoint]:
    """Random points with finite digit expansions; some coordinates are zero."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        coords = []
        for _ in range(n):
            if rng.random() < zero_prob:
                coords.append(PAdicScalar.zero(p))
                continue
            digs = rng.integers(0, p, size=width)
            digs[0] = rng.integers(1, p)
            coords.append(PAdicScalar(p, int(rng.integers(orders[0], orders[1] + 1)),
                                      tuple(int(d) for d in digs)))
        pts.append(PAdicPoint(tuple(coords)))
    return pts


def norm_identity_check(f: HomogeneousPoly, samples: Optional[Iterable[PAdicPoint]] = None,
                        window=None) -> NormIdentityReport:
    """Compare |f(x)|_p with ||x||_p^d exactly on samples or every window point."""
    if samples is None:
        if window is None:
            raise ValueError("give samples or a window")
        samples = window.points()
    checked = 0
    bad = []
    for x in samples:
        fx = f.evaluate(x)
        rhs = norm(x) ** f.d
        if fx.is_zero and not x.is_zero:
            raise PrecisionError("all computed digits of f(x) vanish; raise the digit width")
        lhs = fx.norm()
        if lhs != rhs:
            bad.append((x, lhs, rhs))
        checked += 1
    return NormIdentityReport(checked, bad)
