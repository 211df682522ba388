"""p-adic Gamma function and Riesz kernel pairings."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .padic_core import PAdicPoint, sphere_character_integral, sphere_volume
from .radial import LocallyConstantFunction


def _is_int(a) -> bool:
    return float(a).is_integer()


def ppow_exact(p: int, e):
    """p**e as a Fraction for integer e, else a float."""
    if _is_int(e):
        return Fraction(p) ** int(e)
    return math.exp(float(e) * math.log(p))


@dataclass(frozen=True)
class GammaArgs:
    prime: int
    n: int
    alpha: float

    def __post_init__(self):
        if self.alpha == 0:
            raise DomainError("Gamma is undefined at alpha = 0")


def gamma_p(args: GammaArgs):
    """(1 - p^{alpha-n}) / (1 - p^{-alpha}); exact Fraction for integer alpha."""
    p, n, a = args.prime, args.n, args.alpha
    return (1 - ppow_exact(p, a - n)) / (1 - ppow_exact(p, -a))


def _sphere_sums(phi: LocallyConstantFunction):
    """Sphere integrals of phi around the origin on the range where they vary."""
    if not phi.is_compact():
        raise DomainError("Riesz pairing needs a compactly supported function")
    zero = PAdicPoint.zero(phi.prime, phi.n)
    lo = -phi.loc_exp
    hi = phi.far_exp(zero)
    ks = np.arange(lo + 1, hi + 1)
    prof = phi.sphere_profile(zero, ks) if len(ks) else np.zeros(0)
    return zero, ks, prof, hi


def riesz_pairing(alpha: float, phi: LocallyConstantFunction) -> complex:
    """<k_alpha, phi> from the three-term regularised sum.

    phi(0) (1-p^-n)/(1-p^{alpha-n})
      + (1-p^-alpha)/(1-p^{alpha-n}) [ int_{>1} ||x||^{alpha-n} phi
                                      + int_{<=1} ||x||^{alpha-n} (phi - phi(0)) ]
    """
    p, n = phi.prime, phi.n
    if alpha == 0 or alpha == n:
        raise DomainError("alpha must differ from 0 and n (use riesz_delta_limit at 0)")
    zero, ks, prof, _ = _sphere_sums(phi)
    f0 = phi(zero)
    w = np.exp((ks * (alpha - n)) * math.log(p))
    vol = np.array([float(sphere_volume(p, n, int(k))) for k in ks])
    inner_sel = ks <= 0
    inner = np.sum(w[inner_sel] * (prof[inner_sel] - f0 * vol[inner_sel]))
    outer = np.sum(w[~inner_sel] * prof[~inner_sel])
    q = 1.0 - p ** (alpha - n)
    return complex((1.0 - p ** (-n)) / q * f0 + (1.0 - p ** (-alpha)) / q * (outer + inner))


def riesz_pairing_negative(alpha: float, phi: LocallyConstantFunction) -> complex:
    """<k_{-alpha}, phi> = (1-p^alpha)/(1-p^{-alpha-n}) int ||x||^{-alpha-n} (phi - phi(0)).

    Beyond the support the integrand is -phi(0) ||x||^{-alpha-n}; that part is
    the closed geometric tail.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    p, n = phi.prime, phi.n
    zero, ks, prof, hi = _sphere_sums(phi)
    f0 = phi(zero)
    w = np.exp(-(ks * (alpha + n)) * math.log(p))
    vol = np.array([float(sphere_volume(p, n, int(k))) for k in ks])
    mid = np.sum(w * (prof - f0 * vol))
    top = max(hi, -phi.loc_exp)
    tail = -f0 * (1.0 - p ** (-n)) * p ** (-(top + 1) * alpha) / (1.0 - p ** (-alpha))
    return complex((1.0 - p**alpha) / (1.0 - p ** (-alpha - n)) * (mid + tail))


def riesz_delta_limit(phi: LocallyConstantFunction) -> complex:
    """The alpha -> 0 limit of the pairing: evaluation at the origin."""
    return phi(PAdicPoint.zero(phi.prime, phi.n))


def norm_power_via_integral(x: PAdicPoint, alpha: float):
    """||x||^alpha recovered from the regularised integral

        1/Gamma(-alpha) int ||y||^{-alpha-n} (Psi(-x.y) - 1) dy,

    summed over spheres ||y|| = p^k with exact character integrals for k up
    to a few steps past 1 - m (||x|| = p^m) and a closed geometric tail
    beyond, where the character integral vanishes.  Exact (Fraction) for
    integer alpha.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if x.is_zero:
        return 0
    p, n = x.prime, x.n
    m = int(x.radius_exp())
    k0, k1 = -m - 2, 1 - m + 3
    total = 0
    for k in range(k0, k1 + 1):
        # Psi(-x.y) and Psi(x.y) integrate identically over a sphere
        diff = sphere_character_integral(x, k) - sphere_volume(p, n, k)
        total += ppow_exact(p, -k * (alpha + n)) * diff
    # k > k1: the character integral is 0, the integrand is -vol_k p^{-k(alpha+n)}
    q = 1 - Fraction(1, p**n)
    total += -q * ppow_exact(p, -(k1 + 1) * alpha) / (1 - ppow_exact(p, -alpha))
    inv_gamma = (1 - ppow_exact(p, alpha)) / (1 - ppow_exact(p, -alpha - n))
    return inv_gamma * total
