from __future__ import annotations

from fractions import Fraction

import flint
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import polynomials
from unistar.numeric import (
    DimensionError,
    PolyParseError,
    PolyRing,
    RatMatrix,
    exact_einsum,
    in_span,
    integer_matrix,
    nullspace,
    obj_array,
    obj_scalar,
    poly_arith,
    poly_partial,
    rank,
    rational,
)

R2 = PolyRing(2)
R3 = PolyRing(3)


def test_rational_coercion():
    assert rational(3) == flint.fmpq(3)
    assert rational("-5/10") == flint.fmpq(-1, 2)
    assert rational(Fraction(2, 6)) == flint.fmpq(1, 3)
    with pytest.raises(TypeError):
        rational(0.5)


def test_parse_and_format_roundtrip():
    p = R3.parse("-x1*x2*x3 + 3/2*x1^2 - (x2 - 1)^2")
    assert p == -R3.x(1) * R3.x(2) * R3.x(3) + rational("3/2") * R3.x(1) ** 2 - (R3.x(2) - 1) ** 2
    assert R3.parse(R3.format(p)) == p
    assert R3.format(R3.zero) == "0"


@pytest.mark.parametrize("text, column", [("x1 +", 5), ("x1 $ x2", 4), ("x9", 1), ("1/0", 1), ("", 1)])
def test_parse_errors_carry_a_column(text, column):
    with pytest.raises(PolyParseError) as info:
        R2.parse(text)
    assert info.value.column == column


def test_partial_and_dimension_checks():
    p = R2.parse("x1^3*x2 + x2^2")
    assert poly_partial(R2, p, 1) == R2.parse("3*x1^2*x2")
    assert poly_partial(R2, p, 2) == R2.parse("x1^3 + 2*x2")
    with pytest.raises(DimensionError):
        poly_partial(R2, p, 3)
    with pytest.raises(DimensionError):
        poly_arith(R2.x(1), R3.x(1), "add")
    with pytest.raises(DimensionError):
        PolyRing(0)


def test_params_are_not_coordinates():
    ring = R2.with_params(("t",))
    t = ring.param("t")
    p = ring.lift(R2.x(1)) * t ** 2 + t
    assert ring.param_coefficient(p, "t", 2, R2) == R2.x(1)
    assert ring.param_coefficient(p, "t", 1, R2) == R2.one
    assert ring.partial(p, 0) == t ** 2


def test_monomials_up_to_counts():
    assert len(R2.monomials_up_to(3)) == 10
    assert len(PolyRing(4).monomials_up_to(2)) == 15
    assert len(PolyRing(4).monomials_up_to(2, include_constant=False)) == 14


@given(polynomials(R2), polynomials(R2), polynomials(R2))
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    # Leibniz rule for the coordinate derivatives
    assert (a * b).derivative(0) == a.derivative(0) * b + a * b.derivative(0)


@given(polynomials(R2))
def test_format_parse_roundtrip_property(p):
    assert R2.parse(R2.format(p)) == p


def test_rank_and_nullspace_hand_example():
    M = RatMatrix.from_rows([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert rank(M) == 2
    basis = nullspace(M)
    assert len(basis) == 1
    assert M.matvec(basis[0]) == [0, 0, 0]


def test_in_span_returns_coefficients():
    basis = [[1, 0, 1], [0, 1, 1]]
    ok, coeffs = in_span([2, 3, 5], basis)
    assert ok and coeffs == [2, 3]
    assert in_span([0, 0, 1], basis) == (False, None)
    assert in_span([0, 0, 0], []) == (True, [])


matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.fractions(max_denominator=5).map(lambda f: f.limit_denominator(5)),
                                min_size=n, max_size=n), min_size=1, max_size=4))


@given(matrices)
def test_rank_nullity(rows):
    M = RatMatrix.from_rows(rows)
    basis = nullspace(M)
    assert rank(M) + len(basis) == M.cols
    for v in basis:
        assert all(x == 0 for x in M.matvec(v))


def test_integer_matrix_scales_columns():
    cols = [{"a": rational("1/2"), "b": 1}, {"b": rational("2/3")}]
    M, keys = integer_matrix(cols)
    assert keys == {"a": 0, "b": 1}
    assert [[M[i, j] for j in range(2)] for i in range(2)] == [[1, 0], [2, 2]]


def test_exact_einsum_full_contraction_is_wrapped():
    a = obj_array((2,), R2.zero)
    a[0], a[1] = R2.x(1), R2.x(2)
    out = exact_einsum("i,i,j,j->", a, a, a, a)
    assert isinstance(out, np.ndarray) and out.ndim == 0
    assert out[()] == (R2.x(1) ** 2 + R2.x(2) ** 2) ** 2


def test_exact_einsum_matches_plain_einsum():
    rng = np.random.default_rng(0)
    A = obj_array((3, 3), R3.zero)
    B = obj_array((3, 3, 3), R3.zero)
    for idx in np.ndindex(A.shape):
        A[idx] = R3.x(1 + int(rng.integers(3))) * int(rng.integers(-2, 3))
    for idx in np.ndindex(B.shape):
        B[idx] = R3.const(int(rng.integers(-2, 3)))
    fast = exact_einsum("ij,jkl,lm->ikm", A, B, A)
    slow = np.einsum("ij,jkl,lm->ikm", A, B, A)
    assert np.all(fast == slow)


def test_obj_scalar_multiplies_entrywise():
    arr = obj_array((2,), R2.one)
    p = R2.x(1) + R2.x(2)
    out = arr * obj_scalar(p)
    assert out.shape == (2,) and out[0] == p
