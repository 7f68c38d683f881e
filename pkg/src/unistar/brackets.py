"""Schouten-Nijenhuis bracket, Hochschild and Chevalley-Poisson differentials.

A polyvector of degree a is stored as ``{(i1 < ... < ia): coefficient}``,
meaning sum c^{I} d_{i1} ^ ... ^ d_{ia}.  The matching fully antisymmetric
component array T has T[i1, .., ia] = c^{I} for increasing I, so that
c(du_1, .., du_a) = T^{i1..ia} d_{i1}u_1 ... d_{ia}u_a.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numeric import PolyRing, PolyScalar, factorial, obj_array, rational
from .tensor import UP, Cochain, TensorField


@dataclass(frozen=True, eq=False)
class PolyVector:
    ring: PolyRing
    degree: int
    coeffs: dict  # increasing index tuple -> nonzero polynomial

    def __post_init__(self):
        for key in self.coeffs:
            if len(key) != self.degree or list(key) != sorted(set(key)):
                raise ValueError(f"bad polyvector index {key}")

    def __add__(self, other: "PolyVector") -> "PolyVector":
        return _combine(self, other, 1)

    def __sub__(self, other: "PolyVector") -> "PolyVector":
        return _combine(self, other, -1)

    def scale(self, c) -> "PolyVector":
        c = self.ring.coerce(c) if not isinstance(c, int) else c
        return _clean(self.ring, self.degree, {k: v * c for k, v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def equals(self, other: "PolyVector") -> bool:
        return self.degree == other.degree and (self - other).is_zero()

    def component(self, idx: Sequence[int]) -> PolyScalar:
        """Antisymmetric component T^{idx} for arbitrary (0-based) index order."""
        if len(set(idx)) < len(idx):
            return self.ring.zero
        order = sorted(range(len(idx)), key=lambda n: idx[n])
        sign = _perm_sign(order)
        val = self.coeffs.get(tuple(sorted(idx)), self.ring.zero)
        return val if sign > 0 else -val

    def to_tensor(self) -> TensorField:
        arr = obj_array((self.ring.d,) * self.degree, self.ring.zero)
        for key, val in self.coeffs.items():
            for perm in itertools.permutations(range(self.degree)):
                idx = tuple(key[p] for p in perm)
                arr[idx] = val if _perm_sign(perm) > 0 else -val
        sym = (((tuple(range(self.degree))), "anti"),) if self.degree > 1 else ()
        if self.degree == 0:
            arr = np.empty((), dtype=object)
            arr[()] = self.coeffs.get((), self.ring.zero)
        return TensorField(self.ring, (UP,) * self.degree, arr, sym)

    def coefficient_vector(self) -> dict:
        """Sparse map (component, monomial) -> rational coefficient."""
        out = {}
        for key, val in self.coeffs.items():
            for mono, c in val.to_dict().items():
                out[(key, mono)] = c
        return out


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _clean(ring: PolyRing, degree: int, coeffs: dict) -> PolyVector:
    return PolyVector(ring, degree, {k: v for k, v in coeffs.items() if v != 0})


def _combine(a: PolyVector, b: PolyVector, sign: int) -> PolyVector:
    if a.ring != b.ring or a.degree != b.degree:
        raise ValueError("polyvectors of different rings or degrees")
    out = dict(a.coeffs)
    for k, v in b.coeffs.items():
        out[k] = out.get(k, a.ring.zero) + (v if sign > 0 else -v)
    return _clean(a.ring, a.degree, out)


def polyvector_from_tensor(T: TensorField) -> PolyVector:
    """Read off the increasing components of an antisymmetric contravariant tensor."""
    if any(k != UP for k in T.kinds):
        raise ValueError("polyvectors have contravariant slots only")
    deg = len(T.kinds)
    if deg == 0:
        return _clean(T.ring, 0, {(): T.data[()]})
    coeffs = {}
    for key in itertools.combinations(range(T.d), deg):
        coeffs[key] = T.data[key]
    return _clean(T.ring, deg, coeffs)


def bivector_from_array(ring: PolyRing, P: np.ndarray) -> PolyVector:
    return _clean(ring, 2, {(i, j): P[i, j] for i in range(ring.d) for j in range(i + 1, ring.d)})


def vector_field(ring: PolyRing, comps: Sequence[PolyScalar]) -> PolyVector:
    return _clean(ring, 1, {(i,): ring.coerce(c) for i, c in enumerate(comps)})


def function_polyvector(ring: PolyRing, f: PolyScalar) -> PolyVector:
    return _clean(ring, 0, {(): ring.coerce(f)})


def _wedge_keys(I: tuple, J: tuple) -> tuple[int, tuple]:
    """xi_I xi_J = sign * xi_K with K sorted; sign 0 if I and J overlap."""
    if set(I) & set(J):
        return 0, ()
    seq = list(I) + list(J)
    inversions = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def _right_xi_derivative(A: PolyVector, i: int) -> dict:
    out = {}
    for key, val in A.coeffs.items():
        if i in key:
            m = key.index(i)
            sign = -1 if (len(key) - 1 - m) % 2 else 1
            out[key[:m] + key[m + 1:]] = val if sign > 0 else -val
    return out


def _left_xi_derivative(A: PolyVector, i: int) -> dict:
    out = {}
    for key, val in A.coeffs.items():
        if i in key:
            m = key.index(i)
            out[key[:m] + key[m + 1:]] = val if m % 2 == 0 else -val
    return out


def _product(ring: PolyRing, a: dict, b: dict, acc: dict) -> None:
    for I, u in a.items():
        for J, v in b.items():
            sign, K = _wedge_keys(I, J)
            if sign == 0:
                continue
            term = u * v
            acc[K] = acc.get(K, ring.zero) + (term if sign > 0 else -term)


def schouten(A: PolyVector, B: PolyVector) -> PolyVector:
    """[A, B] = sum_i (A d/dxi_i <-)(d_{x^i} B) - (d_{x^i} A)(-> d/dxi_i B).

    With this convention [X, Y] is the Lie bracket of vector fields,
    [X, f] = X(f) and [X, B] = L_X B.
    """
    if A.ring != B.ring:
        raise ValueError("polyvectors live over different rings")
    ring = A.ring
    acc: dict = {}
    for i in range(ring.d):
        rA = _right_xi_derivative(A, i)
        if rA:
            dB = {k: v.derivative(i) for k, v in B.coeffs.items()}
            _product(ring, rA, {k: v for k, v in dB.items() if v != 0}, acc)
        lB = _left_xi_derivative(B, i)
        if lB:
            dA = {k: -v.derivative(i) for k, v in A.coeffs.items()}
            _product(ring, {k: v for k, v in dA.items() if v != 0}, lB, acc)
    return _clean(ring, A.degree + B.degree - 1, acc)


def jacobi_check(P: PolyVector) -> bool:
    """True iff [P, P]_SN vanishes identically."""
    if P.degree != 2:
        raise ValueError("Jacobi check applies to bivectors")
    return schouten(P, P).is_zero()


def graded_jacobi_defect(A: PolyVector, B: PolyVector, C: PolyVector) -> PolyVector:
    """[A, [B, C]] - [[A, B], C] - (-1)^{(a-1)(b-1)} [B, [A, C]]."""
    sign = -1 if ((A.degree - 1) * (B.degree - 1)) % 2 else 1
    rhs = schouten(schouten(A, B), C) + schouten(B, schouten(A, C)).scale(sign)
    return schouten(A, schouten(B, C)) - rhs


def wedge(A: PolyVector, B: PolyVector) -> PolyVector:
    acc: dict = {}
    _product(A.ring, A.coeffs, B.coeffs, acc)
    return _clean(A.ring, A.degree + B.degree, acc)


# ---------------------------------------------------------------------------
# Cochains on the algebra of polynomials


def polyvector_cochain(c: PolyVector) -> Cochain:
    """The skew first-order cochain C(u1..ua) = c(du1, .., dua)."""
    ring = c.ring
    T = c.to_tensor().data

    def fn(*args):
        if c.degree == 0:
            return T[()]
        grads = []
        for u in args:
            g = obj_array((ring.d,), ring.zero)
            for i in range(ring.d):
                g[i] = u.derivative(i)
            grads.append(g)
        letters = "abcdefgh"[: c.degree]
        expr = letters + "," + ",".join(letters) + "->"
        return np.einsum(expr, T, *grads)

    return Cochain(c.degree, fn)


def hochschild_differential(C: Cochain) -> Cochain:
    """(dC)(u0..up) = u0 C(u1..up) + sum_i (-1)^{i+1} C(.., u_i u_{i+1}, ..) + (-1)^{p+1} C(u0..u_{p-1}) u_p.

    With this sign choice dm = 0 for the multiplication m and d d = 0.
    """
    p = C.arity

    def fn(*u):
        total = u[0] * C(*u[1:])
        for i in range(p):
            merged = u[:i] + (u[i] * u[i + 1],) + u[i + 2:]
            term = C(*merged)
            total = total + term if (i + 1) % 2 == 0 else total - term
        last = C(*u[:p]) * u[p]
        return total + last if (p + 1) % 2 == 0 else total - last

    return Cochain(p + 1, fn)


def chevalley_differential(bracket: Callable[[PolyScalar, PolyScalar], PolyScalar], C: Cochain,
                           *, check_args: Sequence[PolyScalar] | None = None,
                           printed_sign: bool = False) -> Cochain:
    """Coboundary of the adjoint representation of the Poisson algebra (1-based):

    dC(u_1..u_{m+1}) = sum_i (-1)^{i+1} {u_i, C(..^u_i..)}
                       + sum_{i<j} (-1)^{i+j} C({u_i, u_j}, ..^u_i..^u_j..)

    ``printed_sign=True`` uses (-1)^i in the first sum instead.  That variant
    still kills the bracket itself but does not square to zero: on a function
    it gives dd f(u, v) = 2 {{u, v}, f}.

    When ``check_args`` is given, C is first verified to be skew and a
    derivation in each argument on those test functions.
    """
    m = C.arity
    if check_args is not None:
        _check_skew_first_order(C, list(check_args))
    first_parity = 0 if printed_sign else 1

    def fn(*u):
        total = None
        for i in range(m + 1):
            rest = u[:i] + u[i + 1:]
            term = bracket(u[i], C(*rest))
            term = term if (i + 1 + first_parity) % 2 == 0 else -term
            total = term if total is None else total + term
        for i in range(m + 1):
            for j in range(i + 1, m + 1):
                rest = tuple(w for n, w in enumerate(u) if n not in (i, j))
                term = C(bracket(u[i], u[j]), *rest)
                total = total + term if (i + j) % 2 == 0 else total - term
        return total

    return Cochain(m + 1, fn)


class CochainError(ValueError):
    pass


def _check_skew_first_order(C: Cochain, funcs: list) -> None:
    m = C.arity
    if m == 0:
        return
    for args in itertools.product(funcs, repeat=m):
        base = C(*args)
        for a in range(m):
            for b in range(a + 1, m):
                swapped = list(args)
                swapped[a], swapped[b] = swapped[b], swapped[a]
                if C(*swapped) != -base:
                    raise CochainError("cochain is not skewsymmetric")
    for args in itertools.product(funcs, repeat=m + 1):
        # derivation in the first slot: C(uv, ...) = u C(v, ...) + v C(u, ...)
        u, v, rest = args[0], args[1], args[2:]
        if C(u * v, *rest) != u * C(v, *rest) + v * C(u, *rest):
            raise CochainError("cochain is not of order 1 in its arguments")


def skew(C: Cochain) -> Cochain:
    """Alternation over argument permutations, normalised by 1/p!."""
    p = C.arity
    norm = rational(1) / factorial(p)
    perms = [(perm, _perm_sign(perm)) for perm in itertools.permutations(range(p))]

    def fn(*u):
        total = None
        for perm, sign in perms:
            term = C(*(u[k] for k in perm))
            term = term if sign > 0 else -term
            total = term if total is None else total + term
        return total * norm

    return Cochain(p, fn)


def multiplication() -> Cochain:
    return Cochain(2, lambda f, g: f * g)
