from __future__ import annotations

import itertools

import pytest
from hypothesis import given

from conftest import flat_constant, polynomials
from unistar import PolyRing, flat_geometry
from unistar.brackets import vector_field
from unistar.numeric import obj_array, obj_scalar, rational
from unistar.star3 import (
    PoissonVariation,
    ScaledStar,
    StarProduct3,
    cyclic_cocycle_defect,
    moyal_coefficients,
    order_defect,
    star_p_directional,
    transport_derivative,
)
from unistar.tensor import op_apply

MOYAL = flat_constant(2)
R2 = MOYAL.ring


@pytest.fixture(scope="module")
def star_r4(r4):
    return StarProduct3(r4)


@pytest.fixture(scope="module")
def star_so3(so3):
    return StarProduct3(so3)


def test_moyal_hand_values():
    star = StarProduct3(MOYAL)
    x1, x2 = R2.x(1), R2.x(2)
    assert star.c2_tilde(x1 ** 2, x2 ** 2) == 2
    assert star.c3_tilde(x1 ** 3, x2 ** 3) == 6
    assert star.c1(x1, x2) == 1


@given(polynomials(R2), polynomials(R2))
def test_flat_constant_product_is_moyal(f, h):
    star = StarProduct3(MOYAL)
    assert star.star(f, h) == moyal_coefficients(R2, MOYAL.P, f, h)


def test_first_order_is_the_bracket(star_r4, r4):
    f, h = r4.ring.parse("x1*x3 + x2^2"), r4.ring.parse("x4*x1")
    assert star_r4.c1(f, h) == r4.poisson_bracket(f, h)


def test_c2_operator_route_agrees(star_r4, r4):
    # tensors in the symmetrised covariant basis versus the direct contraction
    op = star_r4.c2_operator()
    mons = r4.ring.monomials_up_to(2, include_constant=False)
    for f, h in itertools.product(mons[:8], repeat=2):
        assert op_apply(op, r4, [f, h]) == star_r4.c2_tilde(f, h)


def test_associator_vanishes_on_so3(star_so3, so3):
    mons = so3.ring.monomials_up_to(2)
    for f, h, k in itertools.product(mons[:7], repeat=3):
        assert star_so3.associator(f, h, k).is_zero()


def test_other_c2_sign_fails_at_order_three(r4):
    star = StarProduct3(r4, third_term_sign=1)
    x1 = r4.ring.x(1)
    a = star.associator(x1, x1, x1)
    assert a.first_nonzero() == 3
    assert StarProduct3(r4).associator(x1, x1, x1).is_zero()
    with pytest.raises(ValueError):
        StarProduct3(r4, third_term_sign=0)


def test_cyclic_cocycle_identity_so3(star_so3, so3):
    mons = so3.ring.monomials_up_to(2, include_constant=False)
    for u, v, w in itertools.combinations(mons, 3):
        assert cyclic_cocycle_defect(star_so3, u, v, w) == 0


@pytest.mark.parametrize("r", [1, 2, 3])
def test_homogeneity_in_p(star_r4, r4, r):
    scaled = ScaledStar.build(star_r4)
    f, h = r4.ring.parse("x1*x2 + x3"), r4.ring.parse("x4^2 + x1*x3")
    assert scaled.homogeneity_defect(r, f, h) == 0


@pytest.mark.parametrize("r", [1, 2, 3])
def test_component_order_is_at_most_r(star_r4, r4, r):
    ring = r4.ring
    op = lambda f, h: star_r4.component(r, f, h)  # noqa: E731
    f, h = ring.parse("x1^2*x2 + x3"), ring.parse("x2*x4 + x1^3")
    coords = [ring.x(1), ring.x(2), ring.x(4), ring.x(3)][: r + 1]
    for slot in (0, 1):
        assert order_defect(op, slot, r, coords, f, h) == 0
    # order r is reached: r commutators do not all vanish
    lower = [order_defect(op, 0, r - 1, [ring.x(i)] * r, ring.x(i) ** r, ring.x(j) ** r)
             for i in (1, 2, 3, 4) for j in (1, 2, 3, 4)]
    assert any(v != 0 for v in lower)


def test_d_operator_flat_linear_field():
    star = StarProduct3(MOYAL)
    X = vector_field(R2, [R2.x(2), 3 * R2.x(1)]).to_tensor()
    h = R2.parse("x1^2*x2")
    D = star.d_operator(X, h)
    assert D.coeffs == (R2.x(2) * h.derivative(0) + 3 * R2.x(1) * h.derivative(1), 0, 0, 0)
    assert star.d_operator(X, R2.const(5)).coeffs[2] == 0


def test_d_operator_inner_derivation(star_so3, so3):
    ring = so3.ring
    for f in (ring.x(1) * ring.x(2), ring.x(3) ** 2 + ring.x(1)):
        Xf = so3.hamiltonian_field(f)
        for h in ring.monomials_up_to(2):
            assert star_so3.d_operator(Xf, h) == star_so3.inner_derivation(f, h)


def test_directional_derivative_trivial_cases(star_r4, r4):
    ring = r4.ring
    f, h = ring.parse("x1*x2"), ring.parse("x3*x4 + x2")
    zero = obj_array((4, 4), ring.zero)
    assert star_p_directional(star_r4, zero, f, h).is_zero()
    euler = star_p_directional(star_r4, r4.P, f, h)
    for r in range(4):
        assert euler[r] == star_r4.component(r, f, h) * r


def test_derivation_identity_so3(star_so3, so3):
    ring = so3.ring
    X = vector_field(ring, [ring.x(2) ** 2, ring.x(1), ring.x(1) * ring.x(3)]).to_tensor()
    var = PoissonVariation(star_so3, transport_derivative(so3, X))
    args = [ring.x(1), ring.x(2) * ring.x(3), ring.x(3) ** 2]
    for f, h in itertools.product(args, repeat=2):
        assert star_so3.derivation_defect(X, f, h, var).is_zero()


def test_derivation_identity_needs_the_right_q_sign(star_so3, so3):
    ring = so3.ring
    X = vector_field(ring, [ring.x(2) ** 2, ring.x(1), ring.x(1) * ring.x(3)]).to_tensor()
    Q = transport_derivative(so3, X) * obj_scalar(ring.const(-1))
    var = PoissonVariation(star_so3, Q)
    defect = star_so3.derivation_defect(X, ring.x(1), ring.x(2) * ring.x(3), var)
    assert defect.first_nonzero() == 1


def test_moyal_oracle_general_constant_p():
    ring = PolyRing(3)
    P = obj_array((3, 3), ring.zero)
    P[0, 1], P[1, 0] = ring.const(2), ring.const(-2)
    P[1, 2], P[2, 1] = ring.const(rational("1/3")), ring.const(rational("-1/3"))
    star = StarProduct3(flat_geometry(ring, P))
    f, h = ring.parse("x1^2*x2 + x3^3"), ring.parse("x2^2*x3 + x1*x2*x3")
    assert star.star(f, h) == moyal_coefficients(ring, P, f, h)
