from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import polynomials
from unistar import PolyRing
from unistar.brackets import (
    CochainError,
    PolyVector,
    bivector_from_array,
    chevalley_differential,
    function_polyvector,
    graded_jacobi_defect,
    hochschild_differential,
    jacobi_check,
    multiplication,
    polyvector_cochain,
    schouten,
    skew,
    vector_field,
    wedge,
)
from unistar.conventions import KAPPA, Q_SIGN, derive_kappa, derive_q_sign
from unistar.tensor import Cochain

R2 = PolyRing(2)
R3 = PolyRing(3)
x1, x2 = R2.x(1), R2.x(2)


def test_vector_fields_acting_on_functions():
    X = vector_field(R2, [x2, x1 ** 2])
    f = x1 ** 3 * x2
    assert schouten(X, function_polyvector(R2, f)).coeffs == {(): x2 * f.derivative(0) + x1 ** 2 * f.derivative(1)}
    assert schouten(function_polyvector(R2, f), X).coeffs == {(): -(x2 * f.derivative(0) + x1 ** 2 * f.derivative(1))}


def test_lie_bracket_of_vector_fields():
    X = vector_field(R2, [x2, x1 ** 2])
    Y = vector_field(R2, [x1 * x2, R2.one])
    # [X, Y]^j = X(Y^j) - Y(X^j), computed by hand
    assert schouten(X, Y).equals(vector_field(R2, [x1 ** 3 + x2 ** 2 - 1, -2 * x1 ** 2 * x2]))


def test_bivector_with_function():
    P = PolyVector(R2, 2, {(0, 1): x1})
    f = x1 ** 3 * x2
    # [P, f]^j = P^{ji} d_i f
    assert schouten(P, function_polyvector(R2, f)).equals(vector_field(R2, [x1 ** 4, -3 * x1 ** 3 * x2]))


def test_polyvector_index_validation():
    with pytest.raises(ValueError):
        PolyVector(R2, 2, {(1, 0): x1})
    with pytest.raises(ValueError):
        PolyVector(R2, 2, {(1, 1): x1})


def test_component_sign():
    P = PolyVector(R3, 2, {(0, 2): R3.x(2)})
    assert P.component((2, 0)) == -R3.x(2)
    assert P.component((1, 1)) == 0


def test_jacobi_on_known_structures(so3, r4, r7):
    for g in (so3, r4, r7):
        assert jacobi_check(bivector_from_array(g.ring, g.P))
    bad = PolyVector(R3, 2, {(0, 1): R3.x(3), (1, 2): R3.x(2)})
    assert not jacobi_check(bad)
    with pytest.raises(ValueError):
        jacobi_check(vector_field(R3, [R3.one, R3.zero, R3.zero]))


def test_wedge_is_graded_commutative():
    X = vector_field(R3, [R3.x(1), R3.x(2), R3.one])
    Y = vector_field(R3, [R3.x(3), R3.zero, R3.x(1) ** 2])
    assert (wedge(X, Y) + wedge(Y, X)).is_zero()


def _polyvectors(ring: PolyRing, degree: int):
    keys = list(itertools.combinations(range(ring.d), degree))
    return st.lists(polynomials(ring, max_degree=2, max_terms=2), min_size=len(keys), max_size=len(keys)).map(
        lambda vals: PolyVector(ring, degree, {k: v for k, v in zip(keys, vals) if v != 0}))


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.data())
def test_graded_jacobi(a, b, c, data):
    A = data.draw(_polyvectors(R3, a))
    B = data.draw(_polyvectors(R3, b))
    C = data.draw(_polyvectors(R3, c))
    assert graded_jacobi_defect(A, B, C).is_zero()


@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_graded_antisymmetry(a, b, data):
    A = data.draw(_polyvectors(R3, a))
    B = data.draw(_polyvectors(R3, b))
    sign = -1 if ((a - 1) * (b - 1)) % 2 else 1
    assert (schouten(A, B) + schouten(B, A).scale(sign)).is_zero()


FUNCS = [x1, x2, x1 * x2, x1 ** 2 + x2]


def test_hochschild_kills_multiplication_and_squares_to_zero():
    dm = hochschild_differential(multiplication())
    C = Cochain(2, lambda f, g: f.derivative(0) * g.derivative(1) * x1 + f * g.derivative(0))
    ddC = hochschild_differential(hochschild_differential(C))
    for args in itertools.product(FUNCS, repeat=3):
        assert dm(*args) == 0
    for args in itertools.product(FUNCS[:3], repeat=4):
        assert ddC(*args) == 0


def test_chevalley_squares_to_zero(so3):
    ring = so3.ring
    fs = [ring.x(1), ring.x(2), ring.x(3) ** 2, ring.x(1) * ring.x(2)]
    C = polyvector_cochain(vector_field(ring, [ring.x(2) ** 2, ring.x(1) * ring.x(3), ring.one]))
    dd = chevalley_differential(so3.poisson_bracket, chevalley_differential(so3.poisson_bracket, C))
    for args in itertools.combinations(fs, 3):
        assert dd(*args) == 0


def test_printed_first_sum_sign_does_not_square_to_zero(so3):
    # with (-1)^i in the first sum, dd f(u, v) = 2 {{u, v}, f}
    ring = so3.ring
    f = ring.x(1) * ring.x(3)
    C = Cochain(0, lambda: f)
    br = so3.poisson_bracket
    dd = chevalley_differential(br, chevalley_differential(br, C, printed_sign=True), printed_sign=True)
    u, v = ring.x(1), ring.x(2)
    assert dd(u, v) == 2 * br(br(u, v), f)
    assert dd(u, v) != 0
    std = chevalley_differential(br, chevalley_differential(br, C))
    assert std(u, v) == 0


def test_chevalley_input_checks(so3):
    ring = so3.ring
    fs = [ring.x(1), ring.x(2)]
    not_skew = Cochain(2, lambda a, b: a.derivative(0) * b.derivative(0))
    with pytest.raises(CochainError, match="skew"):
        chevalley_differential(so3.poisson_bracket, not_skew, check_args=fs)
    second_order = Cochain(1, lambda a: a.derivative(0).derivative(0))
    with pytest.raises(CochainError, match="order 1"):
        chevalley_differential(so3.poisson_bracket, second_order, check_args=fs)


def test_skew_is_a_projection():
    C = Cochain(2, lambda f, g: f.derivative(0) * g)
    S = skew(C)
    SS = skew(S)
    for f, g in itertools.product(FUNCS, repeat=2):
        assert S(f, g) == -S(g, f)
        assert SS(f, g) == S(f, g)


def test_frozen_conventions_rederive():
    assert derive_kappa() == KAPPA
    assert derive_q_sign() == Q_SIGN
