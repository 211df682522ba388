from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from padic_heat.errors import DomainError
from padic_heat.gamma_riesz import (
    GammaArgs,
    gamma_p,
    norm_power_via_integral,
    riesz_delta_limit,
    riesz_pairing,
    riesz_pairing_negative,
)
from padic_heat.padic_core import Ball, PAdicPoint
from padic_heat.radial import ball_indicator_lcf, compact_lcf


def test_gamma_examples():
    assert gamma_p(GammaArgs(2, 1, 1)) == 0
    assert gamma_p(GammaArgs(3, 2, 1)) == 1
    assert gamma_p(GammaArgs(2, 2, -1)) == Fraction(-7, 8)
    with pytest.raises(DomainError):
        GammaArgs(2, 1, 0)


@pytest.mark.parametrize("p,n,alpha", [(2, 1, 0.5), (3, 2, 1.5), (5, 1, 2.5)])
def test_riesz_pairing_on_unit_ball(p, n, alpha):
    phi = ball_indicator_lcf(p, n, 0)
    expected = (1 - p**-n) / (1 - p ** (alpha - n))
    assert riesz_pairing(alpha, phi) == pytest.approx(expected, rel=1e-14)


def test_riesz_pairing_small_alpha_tends_to_delta():
    phi = compact_lcf([(Ball(PAdicPoint.zero(3, 1), 1), 2.0),
                       (Ball(PAdicPoint.zero(3, 1), -1), 7.0)], loc_exp=1)
    assert riesz_delta_limit(phi) == 7.0
    vals = [abs(riesz_pairing(a, phi) - 7.0) for a in (1e-2, 1e-3, 1e-4)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-2


def test_riesz_pairing_outer_sphere():
    # phi = 1 on the sphere ||x|| = p, 0 elsewhere; only the outer term remains
    p, n, alpha = 3, 1, 0.7
    phi = compact_lcf([(Ball(PAdicPoint.zero(p, n), 1), 1.0), (Ball(PAdicPoint.zero(p, n), 0), 0.0)],
                      loc_exp=0)
    sphere_integral = p ** (alpha - n) * (p**n - 1)  # ||x||^{alpha-n} vol(sphere)
    expected = (1 - p**-alpha) / (1 - p ** (alpha - n)) * sphere_integral
    assert riesz_pairing(alpha, phi) == pytest.approx(expected, rel=1e-14)


def test_riesz_negative_examples():
    phi = ball_indicator_lcf(2, 1, 0)
    assert riesz_pairing_negative(1.0, phi) == pytest.approx(2 / 3, rel=1e-14)
    # same value from the generic three-term formula at -alpha
    for alpha in (0.5, 1.0, 1.7):
        assert riesz_pairing(-alpha, phi) == pytest.approx(riesz_pairing_negative(alpha, phi), rel=1e-13)


def test_norm_power_examples():
    assert norm_power_via_integral(PAdicPoint.zero(2, 1), 1.0) == 0
    for p, n, alpha in [(2, 1, 1), (3, 2, 2), (5, 1, 0.5)]:
        assert norm_power_via_integral(PAdicPoint.axis(p, n, 0), alpha) == pytest.approx(1, rel=1e-14)
    assert norm_power_via_integral(PAdicPoint.axis(3, 1, 2), 0.5) == pytest.approx(3, rel=1e-14)


def test_norm_power_is_exact_for_integer_orders():
    for m in range(-3, 4):
        v = norm_power_via_integral(PAdicPoint.axis(3, 2, m), 2)
        assert v == Fraction(3) ** (2 * m)


@given(st.sampled_from([2, 3, 5]), st.integers(1, 3), st.integers(-6, 6),
       st.floats(0.1, 3.0))
def test_norm_power_identity(p, n, m, alpha):
    x = PAdicPoint.axis(p, n, m)
    assert float(norm_power_via_integral(x, alpha)) == pytest.approx(float(p) ** (m * alpha), rel=1e-10)
