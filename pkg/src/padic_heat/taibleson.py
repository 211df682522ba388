"""Taibleson operator D^gamma computed two independent ways.

* hypersingular: ``c * int ||y||^(-gamma-n) (phi(x - y) - phi(x)) dy`` with
  ``c = (1 - p^gamma) / (1 - p^(-gamma-n))``, summed sphere by sphere
  around x;
* spectral: for a radial function given by its multiplier g(k) on the
  frequency spheres ||xi|| = p^k, the inverse transform of
  ``||xi||^gamma g`` evaluated with the sphere character integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import ConvergenceError, DomainError
from .padic_core import PAdicPoint
from .radial import (
    EPS_SERIES,
    SPHERE_CAP,
    LocallyConstantFunction,
    RadialFunction,
    ppow,
    sphere_volumes,
    sum_series,
)


@dataclass(frozen=True)
class OperatorParams:
    prime: int
    n: int
    gamma: float
    eps_series: float = EPS_SERIES

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("operator order must be positive")


def hypersingular_constant(p: int, n: int, gamma: float) -> float:
    return (1.0 - p**gamma) / (1.0 - p ** (-gamma - n))


# --------------------------------------------------------------------------
# hypersingular path


def apply_hypersingular(phi: LocallyConstantFunction, params: OperatorParams,
                        x: PAdicPoint, margin: int = 4) -> complex:
    """(D^gamma phi)(x) from the regularised integral."""
    p, n, gamma = params.prime, params.n, params.gamma
    if gamma <= phi.growth_exp:
        raise DomainError(
            f"operator order {gamma} must exceed the growth exponent {phi.growth_exp}"
        )
    tail = phi._need_tail()
    fx = phi(x)
    k_lo = -phi.loc_exp
    k_far = phi.far_exp(x) + margin
    total = 0.0
    if k_far > k_lo:
        ks = np.arange(k_lo + 1, k_far + 1)
        prof = phi.sphere_profile(x, ks)
        total += np.sum(ppow(p, -ks * (gamma + n)) * (prof - fx * sphere_volumes(p, n, ks)))
    k_far = max(k_far, k_lo)
    far = tail.sum_above(k_far, -gamma) - fx * p ** (-(k_far + 1) * gamma) / (1.0 - p ** (-gamma))
    total += (1.0 - p ** (-n)) * far
    return complex(hypersingular_constant(p, n, gamma) * total)


def apply_hypersingular_radial(g: RadialFunction, gamma: float, ms=None) -> np.ndarray | complex:
    """D^gamma of a radial function on spheres ``ms`` (``None``: the origin)."""
    p, n = g.prime, g.n
    c = hypersingular_constant(p, n, gamma)
    q = 1.0 - p ** (-n)
    if ms is None:
        g0 = g.value_at_zero
        up = g.sum_above(0, -gamma) - g0 * p ** (-gamma) / (1.0 - p ** (-gamma))
        down = sum_series(lambda ks: ppow(p, -ks * gamma) * (g.at(ks) - g0), 0, -1,
                          g.eps, g.cap)
        return c * q * (up + down)
    out = []
    for m in np.atleast_1d(ms):
        m = int(m)
        gm = g.at(m)
        head = p ** (-m * (gamma + n)) * (g.mass_below(m - 1) - gm * p ** ((m - 1) * n))
        rest = g.sum_above(m, -gamma) - gm * p ** (-(m + 1) * gamma) / (1.0 - p ** (-gamma))
        out.append(c * (head + q * rest))
    return np.array(out)


# --------------------------------------------------------------------------
# spectral path


@dataclass(frozen=True)
class SpectralRadial:
    """Radial function given by its Fourier multiplier on frequency spheres.

    ``difference(ks, j)`` returns g(ks) - g(j); supply a stable version when
    the multiplier is nearly flat (kernel exponentials).
    """

    prime: int
    n: int
    multiplier: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    diff: Optional[Callable[[np.ndarray, int], np.ndarray]] = field(default=None, compare=False)
    k_flat: Optional[int] = None  # below this index the multiplier is close to its limit

    def difference(self, ks: np.ndarray, j: int) -> np.ndarray:
        if self.diff is not None:
            return self.diff(ks, j)
        return self.multiplier(ks) - self.multiplier(np.array([j]))[0]


def _depth(p: int, e: float, eps: float) -> int:
    return int(math.ceil(math.log(1.0 / eps) / (e * math.log(p)))) + 6


def fourier_radial_values(spectrum: SpectralRadial, gamma: float, ms, eps: float = EPS_SERIES,
                          cap: int = SPHERE_CAP, full_output: bool = False):
    """Inverse transform of ||xi||^gamma g(||xi||) on the spheres ``ms``.

    value(m) = sum_{k<=-m} p^{k(gamma+n)} g(k) (1 - p^-n) - p^{(1-m) gamma} g(1-m) p^{-mn},
    regrouped as differences g(k) - g(1-m) plus a closed geometric part.
    ``full_output`` also returns the sum of absolute summands per sphere.
    """
    p, n = spectrum.prime, spectrum.n
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    if len(ms) == 0:
        return (np.zeros(0), np.zeros(0)) if full_output else np.zeros(0)
    if gamma + n <= 0:
        raise DomainError("order below -n diverges at small frequencies")
    depth = min(_depth(p, gamma + n, eps), cap)
    top = np.inf if spectrum.k_flat is None else spectrum.k_flat
    ks_all = np.arange(int(min(-ms.max(), top)) - depth, int(-ms.min()) + 1)
    w_all = (1.0 - p ** (-n)) * ppow(p, ks_all * (gamma + n))
    closed = (1.0 - p**gamma) / (1.0 - p ** (-gamma - n))
    out = np.empty(len(ms), dtype=np.result_type(spectrum.multiplier(ks_all[:1]), float))
    absum = np.empty(len(ms))
    for i, m in enumerate(ms):
        m = int(m)
        sel = (ks_all <= -m) & (ks_all >= min(-m, top) - depth)
        ks = ks_all[sel]
        w = w_all[sel]
        j = 1 - m
        gj = spectrum.multiplier(np.array([j]))[0]
        terms = w * spectrum.difference(ks, j)
        last = gj * p ** (-m * (gamma + n)) * closed
        out[i] = np.sum(terms) + last
        absum[i] = np.sum(np.abs(terms)) + abs(last)
    return (out, absum) if full_output else out


def fourier_value_at_zero(spectrum: SpectralRadial, gamma: float, eps: float = EPS_SERIES,
                          cap: int = SPHERE_CAP) -> complex:
    """Full two-sided sphere sum sum_k p^{k gamma} g(k) vol_k."""
    p, n = spectrum.prime, spectrum.n

    def term(ks):
        return spectrum.multiplier(ks) * ppow(p, ks * gamma) * sphere_volumes(p, n, ks)

    depth = min(_depth(p, gamma + n, eps), cap)
    top = 0 if spectrum.k_flat is None else min(0, spectrum.k_flat)
    ks = np.arange(top - depth, 1)
    low = np.sum(term(ks))
    try:
        high = sum_series(term, 1, 1, eps, cap)
    except ConvergenceError as exc:
        raise ConvergenceError(f"multiplier does not decay: {exc}") from exc
    return low + high


def apply_fourier_radial(spectrum: SpectralRadial, gamma: float, eps: float = EPS_SERIES,
                         cap: int = SPHERE_CAP) -> RadialFunction:
    """Radial function x -> (D^gamma f)(x) for f with spectral form ``spectrum``."""
    at0 = fourier_value_at_zero(spectrum, gamma, eps, cap)
    return RadialFunction.from_callable(
        spectrum.prime, spectrum.n, lambda ms: fourier_radial_values(spectrum, gamma, ms, eps, cap),
        value_at_zero=at0, eps=eps, cap=cap,
    )


def indicator_spectrum(p: int, n: int, atoms: Iterable[tuple[int, complex]]) -> SpectralRadial:
    """Multiplier of sum_j w_j 1_{B_{r_j}(0)}: the transform of 1_{B_r} is p^{rn} 1_{B_{-r}}."""
    atoms = tuple(atoms)

    def g(ks):
        ks = np.asarray(ks)
        out = np.zeros(ks.shape, dtype=complex if any(isinstance(w, complex) for _, w in atoms) else float)
        for r, w in atoms:
            out = out + np.where(ks <= -r, w * float(p) ** (r * n), 0.0)
        return out

    return SpectralRadial(p, n, g)


def radial_atoms(phi: LocallyConstantFunction) -> list[tuple[int, complex]]:
    """(radius_exp, weight) pairs writing a compact radial phi as nested ball indicators."""
    if phi.tail is None or not phi.is_compact():
        raise DomainError("spectral path needs a compactly supported function")
    r0, atoms = phi._decomposition
    out = []
    for ball, w in atoms:
        if not ball.is_centered():
            raise DomainError("spectral path needs a radial function (centered pieces)")
        out.append((ball.radius_exp, complex(w) if isinstance(w, complex) else float(w)))
    return out


@dataclass
class CrossCheckReport:
    points: list
    hypersingular: list
    spectral: list

    @property
    def max_deviation(self) -> float:
        if not self.points:
            return 0.0
        return float(max(abs(a - b) for a, b in zip(self.hypersingular, self.spectral)))


def operator_cross_check(phi: LocallyConstantFunction, params: OperatorParams,
                         samples: Iterable[PAdicPoint]) -> CrossCheckReport:
    """Evaluate D^gamma phi along both paths at every sample point."""
    samples = list(samples)
    if not samples:
        return CrossCheckReport([], [], [])
    spectrum = indicator_spectrum(params.prime, params.n, radial_atoms(phi))
    hyp, spe = [], []
    for x in samples:
        hyp.append(apply_hypersingular(phi, params, x))
        if x.is_zero:
            spe.append(complex(fourier_value_at_zero(spectrum, params.gamma, params.eps_series)))
        else:
            m = int(x.radius_exp())
            spe.append(complex(fourier_radial_values(spectrum, params.gamma, [m], params.eps_series)[0]))
    return CrossCheckReport(samples, hyp, spe)
