from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exp_diag
from kpgive.errors import NonInvertibleFlatMap, NonUnitConstantTerm, StructuralError, TrustExceeded
from kpgive.rings import Dual, parse_coeff, format_coeff, scalar
from kpgive.series import (MatrixSeries, TruncPoly, invert_coordinate_map, matrix_mul,
                           negate_z_transpose, poly_invert, poly_mul,
                           restrict_vars, substitute_series, univariate)


def x(color, level=1, n=2, W=4):
    return TruncPoly.var(color, level, n=n, trust=W)


def one(n=2, W=4):
    return TruncPoly.one(n, W)


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6).map(scalar)
duals = st.builds(Dual, rationals, rationals)


# ---------------------------------------------------------------------------
# scalars and dual numbers


def test_scalar_lowest_terms_and_no_float_rounding():
    assert scalar("6/8") == mpq(3, 4)
    assert scalar(Fraction(-2, 4)) == mpq(-1, 2)
    assert scalar(0.25) == mpq(1, 4)
    with pytest.raises(ValueError):
        scalar(0.1)
    with pytest.raises(TypeError):
        scalar(True)


@given(duals, duals, duals)
def test_dual_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a - a == 0


def test_eps_squared_is_zero():
    eps = Dual(0, 1)
    assert eps * eps == 0
    assert Dual(2, 3) * Dual(5, 7) == Dual(10, 29)


def test_dual_division_inverts_units():
    u = Dual(2, mpq(1, 3))
    assert u * (1 / u) == 1
    with pytest.raises(ZeroDivisionError):
        1 / Dual(0, 1)


def test_coefficient_json_round_trip():
    for c in (mpq(-7, 3), Dual(1, mpq(-1, 2))):
        assert parse_coeff(format_coeff(c)) == c


# ---------------------------------------------------------------------------
# polynomials


def test_difference_of_squares():
    p = (one(1, 2) + x(1, n=1, W=2)) * (one(1, 2) - x(1, n=1, W=2))
    assert p == one(1, 2) - x(1, n=1, W=2) ** 2


def test_product_beyond_trust_vanishes():
    assert (x(1, 2, n=1, W=3) * x(1, 2, n=1, W=3)).is_zero()


def test_multinomial_square():
    p = (one(2, 2) + x(1, W=2) + x(2, W=2)) ** 2
    expected = {"1": 1, "x[1,1]": 2, "x[2,1]": 2, "x[1,1]^2": 1, "x[1,1]*x[2,1]": 2,
                "x[2,1]^2": 1}
    assert {k: int(v) for k, v in p.to_json()["terms"].items()} == expected


def test_mismatched_colors_rejected():
    with pytest.raises(StructuralError):
        poly_mul(x(1, n=1), x(1, n=2))


def test_product_trust_is_min():
    assert (x(1, W=3) * x(2, W=5)).trust == 3


def test_invert_examples():
    assert poly_invert(one(1, 3)) == one(1, 3)
    p = one(1, 2) + x(1, n=1, W=2)
    assert poly_invert(p) == one(1, 2) - x(1, n=1, W=2) + x(1, n=1, W=2) ** 2
    q = one(1, 2) + x(1, n=1, W=2) + x(1, 2, n=1, W=2)
    expected = one(1, 2) - x(1, n=1, W=2) - x(1, 2, n=1, W=2) + x(1, n=1, W=2) ** 2
    assert poly_invert(q) == expected


def test_invert_needs_unit_constant():
    with pytest.raises(NonUnitConstantTerm):
        poly_invert(TruncPoly.const(mpq(2), 1, 3))
    with pytest.raises(NonUnitConstantTerm):
        poly_invert(x(1))


def test_invert_dual_unit():
    p = TruncPoly.const(Dual(1, 3), 1, 3) + x(1, n=1, W=3)
    assert p * poly_invert(p) == TruncPoly.const(Dual(1, 0), 1, 3)


monomial_keys = st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2), (1, 3), (2, 3)])


@st.composite
def unit_polys(draw, W=4):
    p = one(2, W)
    for _ in range(draw(st.integers(0, 5))):
        c, l = draw(monomial_keys)
        p = p + TruncPoly.var(c, l, n=2, trust=W) * draw(rationals) ** draw(st.integers(1, 2))
    return p


@settings(max_examples=100, deadline=None)
@given(unit_polys())
def test_invert_round_trip(p):
    assert p * poly_invert(p) == one(2, 4)


def test_coefficient_beyond_trust_raises():
    with pytest.raises(TrustExceeded):
        x(1, W=2).coefficient("x[1,3]")


def test_restrict_vars():
    assert restrict_vars(x(1, 2), "odd").is_zero()
    p = x(1) * x(2, 3)
    assert restrict_vars(p, "odd") == p
    assert restrict_vars(x(1) + x(1, 3), "x1") == x(1)


def test_poly_json_round_trip():
    p = (one() + x(1) * mpq(1, 3) - x(2, 2)) ** 3
    assert TruncPoly.from_json(p.to_json()) == p


# ---------------------------------------------------------------------------
# matrix series


def _const_series(mats, W=3):
    n = len(mats[0])
    return MatrixSeries([[[TruncPoly.const(mpq(v), n, W) for v in row] for row in M] for M in mats], n)


def test_identity_is_neutral():
    M = _const_series([[[1, 2], [3, 4]], [[0, 1], [5, 0]]])
    I = MatrixSeries.identity(2, 1, 3)
    assert matrix_mul(I, M) == M
    assert matrix_mul(M, I) == M


def test_binomial_square_of_nilpotent():
    M = _const_series([[[1, 0], [0, 1]], [[0, 1], [0, 0]], [[0, 0], [0, 0]]])
    assert matrix_mul(M, M) == _const_series([[[1, 0], [0, 1]], [[0, 2], [0, 0]], [[0, 0], [0, 0]]])


def test_negate_z_transpose_examples():
    I = MatrixSeries.identity(2, 2, 3)
    assert negate_z_transpose(I) == I
    E12 = _const_series([[[0, 0], [0, 0]], [[0, 1], [0, 0]]])
    assert negate_z_transpose(E12) == _const_series([[[0, 0], [0, 0]], [[0, 0], [-1, 0]]])
    M = _const_series([[[1, 2], [3, 4]], [[5, 6], [7, 8]], [[9, 1], [2, 3]]])
    assert negate_z_transpose(negate_z_transpose(M)) == M


def test_negate_z_transpose_reverses_products():
    M = _const_series([[[1, 2], [3, 4]], [[5, 6], [7, 8]], [[9, 1], [2, 3]]])
    N = _const_series([[[0, 1], [1, 1]], [[2, 0], [1, 3]], [[1, 1], [0, 2]]])
    lhs = negate_z_transpose(matrix_mul(M, N))
    rhs = matrix_mul(negate_z_transpose(N), negate_z_transpose(M))
    assert lhs == rhs


def test_diagonal_exponentials_cancel():
    P = exp_diag(2, 4, 4)
    assert matrix_mul(P, negate_z_transpose(P)).map_entries(lambda p: p.restrict("odd")) \
        == MatrixSeries.identity(2, 4, 4)


# ---------------------------------------------------------------------------
# substitution and inversion


def t(i, n=1, W=3):
    return TruncPoly.var(i, n=n, trust=W, symbol="t")


def test_substitute_examples():
    X = x(1, n=1, W=3)
    assert substitute_series(t(1), [X]) == X
    assert substitute_series(t(1) ** 2, [X + X ** 2]) == X ** 2 + X ** 3 * 2


def test_invert_coordinate_map_examples():
    X = x(1, n=1, W=3)
    T = t(1)
    assert invert_coordinate_map([X]) == [T]
    assert invert_coordinate_map([X * 2]) == [T * mpq(1, 2)]
    assert invert_coordinate_map([X + X ** 2]) == [T - T ** 2 + T ** 3 * 2]


def test_singular_flat_map():
    X = x(1, n=2, W=3)
    with pytest.raises(NonInvertibleFlatMap):
        invert_coordinate_map([X, X])


def _lagrange_coefficients(a, order):
    """Series reversion of t = x + a2 x^2 + a3 x^3 + ... by undetermined coefficients."""
    b = [Fraction(0), Fraction(1)] + [Fraction(0)] * (order - 1)
    for d in range(2, order + 1):
        # coefficient of t^d in sum_k a_k x(t)^k must vanish for d >= 2
        acc = Fraction(0)
        for k in range(2, d + 1):
            acc += a[k] * _power_coeff(b, k, d)
        b[d] = -acc
    return b


def _power_coeff(b, k, d):
    poly = [Fraction(1)]
    for _ in range(k):
        nxt = [Fraction(0)] * (len(poly) + len(b))
        for i, u in enumerate(poly):
            for j, v in enumerate(b):
                nxt[i + j] += u * v
        poly = nxt
    return poly[d] if d < len(poly) else Fraction(0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.fractions(-3, 3, max_denominator=4), min_size=2, max_size=2))
def test_inversion_matches_lagrange_oracle(tail):
    a = [Fraction(0), Fraction(1)] + tail
    tmap = univariate([0, 1] + [scalar(c) for c in tail], 3)
    inv = invert_coordinate_map([tmap])[0]
    expected = _lagrange_coefficients(a, 3)
    for d in range(4):
        key = "1" if d == 0 else ("t[1]" if d == 1 else f"t[1]^{d}")
        assert inv.coefficient(key) == scalar(expected[d])
    assert substitute_series(tmap.rename("t"), [inv], symbol="t") == t(1)


def test_inversion_round_trip_two_variables():
    W = 4
    X1, X2 = (TruncPoly.var(i, n=2, trust=W) for i in (1, 2))
    tmap = [X1 + X1 * X2 * mpq(1, 2) - X2 ** 3, X2 + X1 ** 2 * 3]
    inv = invert_coordinate_map(tmap)
    back = [substitute_series(g.rename("t"), inv, symbol="t") for g in tmap]
    assert back == [TruncPoly.var(i, n=2, trust=W, symbol="t") for i in (1, 2)]


def test_substitute_requires_recentering():
    X = x(1, n=1, W=3)
    with pytest.raises(TrustExceeded):
        substitute_series(t(1), [X + 1])
