from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from padic_heat.errors import DomainError
from padic_heat.heat_kernel import KernelParams, kernel_slice, kernel_spectrum
from padic_heat.padic_core import Ball, PAdicPoint
from padic_heat.radial import (
    LocallyConstantFunction,
    RadialFunction,
    Tail,
    ball_indicator_lcf,
    compact_lcf,
    integrate_radial,
)
from padic_heat.taibleson import (
    OperatorParams,
    SpectralRadial,
    apply_fourier_radial,
    apply_hypersingular,
    apply_hypersingular_radial,
    fourier_radial_values,
    fourier_value_at_zero,
    hypersingular_constant,
    operator_cross_check,
)


def test_unit_ball_examples():
    phi = ball_indicator_lcf(2, 1, 0)
    op = OperatorParams(2, 1, 1.0)
    assert apply_hypersingular(phi, op, PAdicPoint.zero(2, 1)) == pytest.approx(2 / 3, abs=1e-15)
    assert apply_hypersingular(phi, op, PAdicPoint.axis(2, 1, 1)) == pytest.approx(-1 / 3, abs=1e-15)


def test_constant_region_only_sees_the_tail():
    # phi = 4 on B_3, zero outside: at points deep inside only the outside contributes
    p, n, g = 3, 2, 0.8
    phi = ball_indicator_lcf(p, n, 3, 4.0)
    c = hypersingular_constant(p, n, g)
    outside = (1 - p**-n) * sum(p ** (-k * g) for k in range(4, 400))
    for x in [PAdicPoint.zero(p, n), PAdicPoint.axis(p, n, 2), PAdicPoint.axis(p, n, -5)]:
        assert apply_hypersingular(phi, OperatorParams(p, n, g), x) == pytest.approx(-c * 4 * outside, rel=1e-13)


def test_spectral_examples():
    params = KernelParams(3, 1, 1.0, 0.5)
    t = 0.7
    spectrum = kernel_spectrum(params, t)
    # order zero recovers the kernel itself
    ms = np.arange(-5, 6)
    assert np.allclose(fourier_radial_values(spectrum, 0.0, ms), kernel_slice(params, t).values(ms), rtol=1e-12, atol=0)
    # multiplier 1 on ||xi|| <= 1 at the origin
    p, n, g = 2, 2, 1.5
    unit = SpectralRadial(p, n, lambda ks: np.where(np.asarray(ks) <= 0, 1.0, 0.0))
    assert fourier_value_at_zero(unit, g) == pytest.approx((1 - p**-n) / (1 - p ** (-n - g)), rel=1e-14)
    # vanishing integral for positive orders
    for gamma in (0.3, 1.0):
        assert abs(integrate_radial(apply_fourier_radial(spectrum, gamma))) < 1e-12


def test_cross_check_examples():
    op = OperatorParams(2, 1, 1.0)
    rep = operator_cross_check(ball_indicator_lcf(2, 1, 0), op, [])
    assert rep.points == [] and rep.max_deviation == 0.0
    diff = compact_lcf([(Ball(PAdicPoint.zero(3, 2), 1), 1.0), (Ball(PAdicPoint.zero(3, 2), -1), 0.0)],
                       loc_exp=1)
    samples = [PAdicPoint.zero(3, 2)] + [PAdicPoint.axis(3, 2, m) for m in range(-3, 5)]
    rep = operator_cross_check(diff, OperatorParams(3, 2, 0.6), samples)
    assert rep.max_deviation < 1e-10


def test_hypersingular_on_kernel_slice_matches_spectral():
    params = KernelParams(2, 2, 1.0, 1.0)
    sl = kernel_slice(params, 0.5)
    for gamma in (0.4, 1.0):
        ms = list(range(-4, 6))
        hyp = apply_hypersingular_radial(sl.radial, gamma, ms)
        spectrum = sl.dgamma(gamma).at(ms)
        assert np.max(np.abs(hyp - spectrum)) < 1e-8
        assert abs(apply_hypersingular_radial(sl.radial, gamma) - sl.dgamma(gamma).value_at_zero) < 1e-8


def test_order_must_exceed_growth():
    phi = LocallyConstantFunction((), RadialFunction(2, 1, tail_hi=Tail.power(1.0, 0.5),
                                                     tail_lo=Tail.constant(1.0), value_at_zero=1.0),
                                  loc_exp=0, growth_exp=0.5)
    with pytest.raises(DomainError):
        apply_hypersingular(phi, OperatorParams(2, 1, 0.4), PAdicPoint.zero(2, 1))
    with pytest.raises(DomainError):
        OperatorParams(2, 1, 0.0)


# -- properties ---------------------------------------------------------------

atoms = st.lists(st.tuples(st.integers(-2, 2), st.floats(-3, 3)), min_size=1, max_size=3,
                 unique_by=lambda a: a[0])


def radial_lcf(p, n, atom_list):
    pieces = [(Ball(PAdicPoint.zero(p, n), r), v) for r, v in atom_list]
    return compact_lcf(pieces, loc_exp=-min(r for r, _ in atom_list))


@given(st.sampled_from([2, 3]), st.integers(1, 2), atoms, st.floats(0.2, 2.0), st.integers(-4, 4))
def test_hypersingular_agrees_with_spectral(p, n, atom_list, gamma, m):
    phi = radial_lcf(p, n, atom_list)
    samples = [PAdicPoint.zero(p, n), PAdicPoint.axis(p, n, m)]
    assert operator_cross_check(phi, OperatorParams(p, n, gamma), samples).max_deviation < 1e-10


def dilate(phi: LocallyConstantFunction) -> LocallyConstantFunction:
    """x -> phi(p x) for a compactly supported phi."""
    pieces = [(Ball(pc.ball.center.scale(-1), pc.ball.radius_exp + 1), pc.value) for pc in phi.pieces]
    return compact_lcf(pieces, loc_exp=phi.loc_exp - 1)


@given(st.integers(0, 8), st.integers(-2, 2), st.floats(0.2, 2.0))
def test_dilation_scaling(num, shift, gamma):
    p = 3
    phi = compact_lcf([(Ball(PAdicPoint.zero(p, 1), 1), 1.0),
                       (Ball(PAdicPoint.from_rationals(p, [1]), -1), -2.0)], loc_exp=1)
    x = PAdicPoint.from_rationals(p, [Fraction(num, 3) * Fraction(p) ** shift])
    op = OperatorParams(p, 1, gamma)
    lhs = apply_hypersingular(dilate(phi), op, x)
    rhs = p ** (-gamma) * apply_hypersingular(phi, op, x.scale(1))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))


@given(st.floats(-5, 5), st.floats(0.2, 2.0))
def test_operator_is_linear(c, gamma):
    phi = ball_indicator_lcf(2, 2, 1)
    op = OperatorParams(2, 2, gamma)
    x = PAdicPoint.axis(2, 2, 2)
    assert abs(apply_hypersingular(phi.scaled(c), op, x) - c * apply_hypersingular(phi, op, x)) < 1e-12 * (1 + abs(c))
