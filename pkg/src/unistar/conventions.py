"""Sign and normalisation conventions, frozen after being determined once.

The frozen values are re-derived by :func:`derive_kappa` and
:func:`derive_q_sign`; the test-suite checks that derivation and table agree.
"""

from __future__ import annotations

import itertools

# delta_P C = KAPPA[p] * ([P, c]_SN as a cochain) for C(u_1..u_p) = c(du_1, .., du_p),
# with delta_P in the Chevalley-Eilenberg sign (first sum (-1)^{i+1}, 1-based).
KAPPA = {0: 1, 1: 1, 2: 1}

# Q = d/dt|_0 of the transported Poisson structure equals Q_SIGN * L_X P.
Q_SIGN = 1

# skew() averages over permutations with weight 1/p!.
SKEW_NORMALISED = True

# Hochschild: (dC)(u0..up) = u0 C(u1..up) + sum_i (-1)^{i+1} C(.., u_i u_{i+1}, ..)
#             + (-1)^{p+1} C(u0..u_{p-1}) u_p; the order-r associativity defect
#             of m + sum nu^s C_s is dC_r + sum_{a+b=r} (C_a(C_b(f,g),h) - C_a(f,C_b(g,h))).


def _witness():
    from .brackets import PolyVector, bivector_from_array
    from .geometry import Geometry
    from .numeric import PolyRing, obj_array

    ring = PolyRing(3)
    x1, x2, x3 = (ring.x(i) for i in (1, 2, 3))
    P = obj_array((3, 3), ring.zero)
    # Lie-Poisson structure of so(3)
    P[0, 1], P[1, 0] = x3, -x3
    P[1, 2], P[2, 1] = x1, -x1
    P[2, 0], P[0, 2] = x2, -x2
    g = Geometry(ring, P, obj_array((3, 3, 3), ring.zero))
    samples = {
        0: PolyVector(ring, 0, {(): x1 * x2 + x3 ** 2}),
        1: PolyVector(ring, 1, {(0,): x2 ** 2, (1,): x1 * x3, (2,): x1}),
        2: PolyVector(ring, 2, {(0, 2): x2 ** 2, (1, 2): x1 ** 2, (0, 1): x2 * x3}),
    }
    return ring, g, bivector_from_array(ring, P), samples


def derive_kappa() -> dict:
    """Recompute KAPPA[p] by comparing delta_P with [P, .]_SN on sample data."""
    from .brackets import chevalley_differential, polyvector_cochain, schouten

    ring, g, Pv, samples = _witness()
    funcs = [ring.x(1), ring.x(2), ring.x(3), ring.x(1) * ring.x(2)]
    out = {}
    for p, c in samples.items():
        lhs = chevalley_differential(g.poisson_bracket, polyvector_cochain(c))
        rhs = polyvector_cochain(schouten(Pv, c))
        found = set()
        for args in itertools.product(funcs, repeat=p + 1):
            a, b = lhs(*args), rhs(*args)
            if b == 0:
                if a != 0:
                    found.add(None)
                continue
            found.add(1 if a == b else (-1 if a == -b else None))
        if len(found) != 1 or None in found:
            raise ArithmeticError(f"delta_P is not a fixed multiple of [P, .] in arity {p}")
        out[p] = found.pop()
    return out


def derive_q_sign() -> int:
    """Fix the sign of Q against L_X P from the order-nu part of the D_X identity.

    At order nu the identity reads X{f,g} - {Xf,g} - {f,Xg} = Q(df, dg), and the
    left side is (L_X P)(df, dg).
    """
    from .brackets import vector_field
    from .tensor import UP, TensorField

    ring, g, _, _ = _witness()
    x1, x2, x3 = (ring.x(i) for i in (1, 2, 3))
    X = vector_field(ring, [x2 ** 2, x1 * x3, x1]).to_tensor()
    LP = g.lie_derivative_bivector(X)
    f, h = x1 * x2, x3 + x1 ** 2
    lhs = (
        _apply(X, g.poisson_bracket(f, h))
        - g.poisson_bracket(_apply(X, f), h)
        - g.poisson_bracket(f, _apply(X, h))
    )
    rhs = TensorField(ring, (UP, UP), LP.data)
    value = _pair(rhs, f, h)
    if lhs == value:
        return 1
    if lhs == -value:
        return -1
    raise ArithmeticError("order-nu identity fixes no sign")


def _apply(X, f):
    total = f * 0
    for i in range(X.d):
        total = total + X.data[i] * f.derivative(i)
    return total


def _pair(B, f, h):
    total = f * 0
    for i in range(B.d):
        for j in range(B.d):
            total = total + B.data[i, j] * f.derivative(i) * h.derivative(j)
    return total
