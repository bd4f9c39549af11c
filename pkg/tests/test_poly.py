import pytest
from hypothesis import given, strategies as st

from elimtemplate.poly import (GREVLEX, MAX_EXPONENT, MonomialOrder, Polynomial, degree, divides,
                               format_monomial, mono_div, mono_lcm, mono_mul,
                               monomials_up_to_degree, var)
from elimtemplate.zp_field import FieldSpec

F7 = FieldSpec(7)
F = FieldSpec(30011)
names = ["x", "y", "z"]
DEG2 = [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]


def test_grevlex_degree_two():
    got = [format_monomial(m, names) for m in GREVLEX.sort(DEG2)]
    assert got == ["x^2", "x*y", "y^2", "x*z", "y*z", "z^2"]


def test_grlex_degree_two():
    got = [format_monomial(m, names) for m in MonomialOrder("grlex").sort(DEG2)]
    assert got == ["x^2", "x*y", "x*z", "y^2", "y*z", "z^2"]


def test_lex_beats_degree():
    lex = MonomialOrder("lex")
    assert lex.compare((1, 0, 0), (0, 5, 5)) > 0
    assert GREVLEX.compare((1, 0, 0), (0, 5, 5)) < 0


def test_monomial_ops():
    assert mono_mul((1, 2), (3, 0)) == (4, 2)
    assert mono_div((4, 2), (3, 0)) == (1, 2)
    assert mono_lcm((1, 2), (3, 0)) == (3, 2)
    assert divides((1, 0), (1, 1)) and not divides((2, 0), (1, 1))
    assert degree((2, 1, 3)) == 6
    with pytest.raises(OverflowError):
        mono_mul((MAX_EXPONENT,), (1,))


def test_monomials_up_to_degree_count():
    # C(n + d, d)
    assert len(monomials_up_to_degree(3, 2)) == 10
    assert len(monomials_up_to_degree(3, 3)) == 20


def test_zp_arithmetic_worked():
    x = Polynomial.variable(0, 2, F7)
    y = Polynomial.variable(1, 2, F7)
    f = (x + y) * (x - y)
    assert f == x * x - y * y
    assert (f * 7).is_zero()
    assert f.leading_monomial() == (2, 0)
    assert (x * 3).monic() == x
    assert f.evaluate([3, 1]) == 8 % 7


def test_generic_float_coefficients():
    x = Polynomial.variable(0, 1)
    f = x * x * 0.5 - 2.0
    assert f.evaluate([2.0]) == 0.0
    assert f.total_degree() == 2


def test_constant_and_zero():
    assert Polynomial.zero(2, F7).is_zero()
    assert Polynomial.constant(7, 2, F7).is_zero()
    assert Polynomial.constant(3, 2, F7).leading_monomial() == (0, 0)


# -- properties ------------------------------------------------------------------------------

mono = st.tuples(*[st.integers(0, 4)] * 3)
poly = st.dictionaries(mono, st.integers(0, F.p - 1), max_size=6).map(
    lambda d: Polynomial(d, 3, F))


@given(mono, mono, mono)
def test_grevlex_is_monomial_order(a, b, c):
    key = GREVLEX.key
    assert (key(a) < key(b)) == (key(mono_mul(a, c)) < key(mono_mul(b, c)))
    assert key((0, 0, 0)) <= key(a)


@given(poly, poly, poly)
def test_ring_axioms(f, g, h):
    assert f + g == g + f
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f - f).is_zero()


@given(poly, poly, st.lists(st.integers(0, F.p - 1), min_size=3, max_size=3))
def test_evaluation_is_homomorphism(f, g, pt):
    p = F.p
    assert (f * g).evaluate(pt) == f.evaluate(pt) * g.evaluate(pt) % p
    assert (f + g).evaluate(pt) == (f.evaluate(pt) + g.evaluate(pt)) % p


@given(poly, mono)
def test_mul_by_monomial(f, m):
    assert f.mul_by_monomial(m) == f * Polynomial({m: 1}, 3, F)


def test_var_helper():
    assert var(1, 3) == (0, 1, 0)
