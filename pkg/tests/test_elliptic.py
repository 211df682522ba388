from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from padic_heat.elliptic import (
    HomogeneousPoly,
    generate_strongly_elliptic,
    is_elliptic_mod_p,
    is_strongly_elliptic,
    non_powers,
    norm_identity_check,
    random_points,
)
from padic_heat.errors import ConstructionError
from padic_heat.padic_core import FiniteWindow, PAdicPoint, norm


def poly(p, terms):
    n = len(terms[0][0])
    d = sum(terms[0][0])
    return HomogeneousPoly(p, n, d, tuple(terms))


X2_M2Y2 = poly(3, [((2, 0), 1), ((0, 2), -2)])


def test_reduction_examples():
    assert is_elliptic_mod_p(X2_M2Y2)
    assert not is_elliptic_mod_p(poly(3, [((2, 0), 1), ((0, 2), -1)]))
    assert is_elliptic_mod_p(poly(5, [((1,), 1)]))


def test_strong_ellipticity_witness():
    res = is_strongly_elliptic(poly(2, [((2, 0), 1), ((1, 1), 1)]))
    assert not res and res.witness == ((1,), (0, 1))
    # no pure power of x2: the stratum of x2 alone is a root
    assert not is_strongly_elliptic(poly(5, [((2, 0), 1), ((1, 1), 2)]))
    assert is_strongly_elliptic(X2_M2Y2)


def test_generator_examples():
    assert str(generate_strongly_elliptic(3, 2)) == "x1^2 - 2*x2^2"
    f = generate_strongly_elliptic(5, 2, seed=1)
    coeffs = {e: f.signed(c) for e, c in f.monomials}
    assert coeffs[(2, 0)] == 1 and -coeffs[(0, 2)] in (2, 3)
    one = generate_strongly_elliptic(7, 1)
    assert one.d == 1 and one.monomials == (((1,), 1),)
    assert non_powers(5, 2) == [2, 3]


def test_generator_needs_odd_prime():
    with pytest.raises(ConstructionError):
        generate_strongly_elliptic(2, 2)


def test_norm_identity_examples():
    x = PAdicPoint.from_rationals(3, [3, 1])
    assert X2_M2Y2.evaluate(x).norm() == 1 == norm(x) ** 2
    assert norm_identity_check(X2_M2Y2, [PAdicPoint.zero(3, 2)]).ok
    y = PAdicPoint.from_rationals(3, [Fraction(1, 9), 6])
    assert X2_M2Y2.evaluate(y).norm() == 3**4


def test_norm_identity_fails_without_ellipticity():
    f = poly(3, [((2, 0), 1), ((0, 2), -1)])
    rep = norm_identity_check(f, [PAdicPoint.from_rationals(3, [2, 1])])
    assert not rep.ok and rep.violations[0][1] < rep.violations[0][2]


def test_norm_identity_on_a_window():
    rep = norm_identity_check(X2_M2Y2, window=FiniteWindow(3, 2, 1, 1))
    assert rep.ok and rep.checked == 3**4


def test_json_round_trip():
    f = generate_strongly_elliptic(5, 3, seed=2)
    g = HomogeneousPoly.from_json(f.to_json())
    assert g == f and str(g) == str(f)


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_generated_polynomials(p, n):
    f = generate_strongly_elliptic(p, n, seed=n)
    assert is_strongly_elliptic(f)
    assert norm_identity_check(f, random_points(p, n, 300, seed=p * 10 + n)).ok


@given(st.sampled_from([3, 5, 7, 11]), st.integers(0, 100))
def test_generated_quadratic_forms_are_elliptic(p, seed):
    assert is_strongly_elliptic(generate_strongly_elliptic(p, 2, seed))
