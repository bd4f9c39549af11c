import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elimtemplate.zp_field import (FieldSpec, NotInvertibleError, SamplingError, ZpMatrix, egcd,
                                   is_prime, zp_euler_is_residue, zp_inv, zp_nullspace,
                                   zp_quat_to_rotation, zp_rand_unit, zp_rank, zp_rref, zp_solve,
                                   zp_sqrt)

# brute-force tables, computed once by exhaustive search and frozen here
INV_MOD_7 = {1: 1, 2: 4, 3: 5, 4: 2, 5: 3, 6: 6}
INV_MOD_31 = {2: 16, 3: 21, 5: 25, 7: 9, 11: 17, 13: 12, 29: 15, 30: 30}
SQRT_FROZEN = {
    30011: {2: (), 3: (245, 29766), 5: (6583, 23428), 1234: (2122, 27889), 29999: ()},
    65537: {2: (4080, 61457), 3: (), 5: (), 1234: (17041, 48496), 65000: (13176, 52361)},
    13: {0: (0,), 1: (1, 12), 3: (4, 9), 4: (2, 11), 5: (), 10: (6, 7), 12: (5, 8)},
}
PRIMES = [7, 31, 30011]


@pytest.mark.parametrize("p,table", [(7, INV_MOD_7), (31, INV_MOD_31)])
def test_inverse_matches_bruteforce(p, table):
    for a, inv in table.items():
        assert zp_inv(a, FieldSpec(p)) == inv


def test_inverse_of_zero_raises():
    with pytest.raises(NotInvertibleError):
        zp_inv(0, FieldSpec(7))
    with pytest.raises(ZeroDivisionError):
        zp_inv(14, FieldSpec(7))


@pytest.mark.parametrize("p", sorted(SQRT_FROZEN))
def test_sqrt_frozen(p):
    for z, roots in SQRT_FROZEN[p].items():
        assert zp_sqrt(z, FieldSpec(p)) == roots
        assert zp_euler_is_residue(z, FieldSpec(p)) == bool(roots)


def test_field_spec_validation():
    with pytest.raises(ValueError):
        FieldSpec(30012)
    with pytest.raises(ValueError):
        FieldSpec(2)
    with pytest.raises(ValueError):
        FieldSpec(4294967311)          # prime, but too large
    assert FieldSpec().p == 30011


def test_is_prime_small():
    primes = [n for n in range(2, 100) if is_prime(n)]
    assert primes == [n for n in range(2, 100) if all(n % d for d in range(2, n))]


def test_field_elem_ops():
    F = FieldSpec(7)
    a, b = F(3), F(5)
    assert int(a + b) == 1
    assert int(a * b) == 1
    assert int(a / b) == 3 * 3 % 7
    assert int(-a) == 4


def test_rref_worked_example():
    m = ZpMatrix([[2, 4, 6], [1, 3, 5]], FieldSpec(7))
    red, piv = zp_rref(m)
    assert piv == [0, 1]
    assert red.tolist() == [[1, 0, 6], [0, 1, 2]]       # [1 0 -1; 0 1 2]


def test_nullspace_and_solve():
    F = FieldSpec(31)
    m = ZpMatrix([[1, 2, 3, 4], [2, 4, 6, 9]], F)
    n = zp_nullspace(m)
    assert n.shape == (4, 2)
    assert (m @ n) == ZpMatrix.zeros(2, 2, F)
    x = zp_solve(m, [1, 2])
    assert m.matvec(x) == [1, 2]
    assert zp_solve(ZpMatrix([[1, 1], [1, 1]], F), [0, 1]) is None


def test_det_matches_rank():
    F = FieldSpec(7)
    assert ZpMatrix([[1, 2], [2, 4]], F).det() == 0
    assert ZpMatrix([[1, 2], [3, 4]], F).det() == (4 - 6) % 7


def test_rand_unit_rejection_bound():
    class Never:
        def integers(self, lo, hi, size):
            return np.zeros(size, dtype=np.int64)
    with pytest.raises(SamplingError):
        zp_rand_unit(3, FieldSpec(7), Never())


def test_rotation_requires_unit_quaternion():
    with pytest.raises(ValueError):
        zp_quat_to_rotation([1, 1, 0, 0], FieldSpec(31))


@pytest.mark.parametrize("p", PRIMES)
def test_rotation_orthogonal_det_one(p):
    F = FieldSpec(p)
    rng = np.random.default_rng(p)
    for _ in range(50):
        R = zp_quat_to_rotation(zp_rand_unit(4, F, rng), F)
        assert R.T @ R == ZpMatrix.identity(3, F)
        assert R.det() == 1


# -- properties ----------------------------------------------------------------------------

primes = st.sampled_from(PRIMES + [65537])


@given(primes, st.integers(min_value=1, max_value=10**9))
def test_inverse_property(p, z):
    F = FieldSpec(p)
    if z % p == 0:
        return
    assert z * zp_inv(z, F) % p == 1


@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=10**6))
def test_egcd_bezout(a, b):
    g, x, y = egcd(a, b)
    assert a * x + b * y == g
    assert a % g == 0 and b % g == 0


@given(primes, st.integers(min_value=0, max_value=10**9))
def test_sqrt_agrees_with_euler(p, z):
    F = FieldSpec(p)
    roots = zp_sqrt(z, F)
    assert bool(roots) == zp_euler_is_residue(z, F)
    for r in roots:
        assert r * r % p == z % p


@settings(max_examples=50, deadline=None)
@given(primes, st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_rref_idempotent_and_rank(p, rows, cols, seed):
    F = FieldSpec(p)
    m = ZpMatrix.random(rows, cols, F, np.random.default_rng(seed))
    red, piv = zp_rref(m)
    red2, piv2 = zp_rref(red)
    assert red2 == red and piv2 == piv
    assert zp_rank(m) == zp_rank(m.T)
    n = zp_nullspace(m)
    assert n.cols == cols - len(piv)
    if n.cols:
        assert m @ n == ZpMatrix.zeros(rows, n.cols, F)
