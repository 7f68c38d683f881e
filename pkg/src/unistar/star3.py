"""The order-3 universal star product built from a Poisson tensor and a
torsionfree connection, its associator, and the operator D_X.

    f * g = fg + nu {f, g} + nu^2 C2(f, g) + nu^3 C3(f, g)

    C2(f, g) = 1/2 P^{kr} P^{ls} f_{;kl} g_{;rs}
             + 1/3 P^{kr} nabla_r P^{ls} (f_{;kl} g_{;s} + f_{;s} g_{;kl})
             - 1/6 nabla_l P^{kr} nabla_k P^{ls} f_{;r} g_{;s}
    C3(f, g) = S3(f, g) / 6,  S3(f, g) = -P^{ls} (L_{X_f} nabla)^j_{kl} (L_{X_g} nabla)^k_{js}

The last C2 term is symmetric and of order one in each argument, hence a
Hochschild cocycle: its coefficient is invisible to associativity at order 2
and is pinned at order 3, where only -1/6 works together with C3 = S3/6.
``third_term_sign=+1`` reproduces the other sign for comparison.

All operators are linear in each argument, so derived tensors of the
arguments are assembled from per-monomial caches.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .conventions import Q_SIGN
from .geometry import Geometry
from .numeric import PolyScalar, factorial, obj_array, obj_scalar, rational
from .tensor import UP, MultiDiffOp, NuSeries, TensorField, symmetrize

ORDER = 3
_HALF = rational(1) / 2
_THIRD = rational(1) / 3
_SIXTH = rational(1) / 6


class StarProduct3:
    def __init__(self, geometry: Geometry, *, third_term_sign: int = -1, jet_cache: dict | None = None):
        if third_term_sign not in (1, -1):
            raise ValueError("third_term_sign must be +1 or -1")
        self.geometry = geometry
        self.third_term_sign = third_term_sign
        self._t3 = _SIXTH * third_term_sign
        self.ring = geometry.ring
        self._P = geometry.P
        self._dP = geometry.nabla_P(1).data  # [r, l, s] = nabla_r P^{ls}
        # jets of arguments depend on the connection only, so they may be shared
        self._mono_jet: dict = {} if jet_cache is None else jet_cache
        self._products: dict = {}
        self._lifted: dict = {}
        self._mono_lie: dict = {}
        self._d_kernels: dict = {}
        self._d_mono: dict = {}

    # -- linear assembly over monomials ----------------------------------

    def _assemble(self, f: PolyScalar, cache: dict, key, build: Callable[[PolyScalar], np.ndarray]):
        ring = self.ring
        acc = None
        for exps, c in f.to_dict().items():
            k = (key, exps)
            arr = cache.get(k)
            if arr is None:
                arr = build(ring.ctx.from_dict({exps: 1}))
                cache[k] = arr
            term = arr * obj_scalar(c) if arr.ndim else obj_scalar(arr[()] * c)
            acc = term if acc is None else acc + term
        return acc

    def jet(self, f: PolyScalar, m: int) -> np.ndarray:
        """nabla^m f as an array (m >= 1)."""
        if f == 0:
            return obj_array((self.ring.d,) * m, self.ring.zero)
        return self._assemble(f, self._mono_jet, m, lambda mono: self.geometry.nabla_power(mono, m).data)

    def lie_hamiltonian(self, f: PolyScalar) -> np.ndarray:
        """(L_{X_f} nabla)^j_{kl} as an array [j, k, l]."""
        if f == 0:
            return obj_array((self.ring.d,) * 3, self.ring.zero)
        return self._assemble(f, self._mono_lie, "lie",
                              lambda mono: self.geometry.lie_derivative_hamiltonian(mono).data)

    # -- components ------------------------------------------------------

    def c1(self, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        if f == 0 or h == 0:
            return self.ring.zero
        return np.einsum("i,ij,j->", self.jet(f, 1), self._P, self.jet(h, 1))

    def c2_tilde(self, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        if f == 0 or h == 0:
            return self.ring.zero
        P, dP = self._P, self._dP
        f1, f2 = self.jet(f, 1), self.jet(f, 2)
        h1, h2 = self.jet(h, 1), self.jet(h, 2)
        PdP = np.einsum("kr,rls->kls", P, dP)
        t1 = np.einsum("kr,ls,kl,rs->", P, P, f2, h2)
        t2 = np.einsum("kls,kl,s->", PdP, f2, h1) + np.einsum("kls,s,kl->", PdP, f1, h2)
        t3 = np.einsum("lkr,kls,r,s->", dP, dP, f1, h1)
        return t1 * _HALF + t2 * _THIRD + t3 * self._t3

    def s3(self, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        if f == 0 or h == 0:
            return self.ring.zero
        return -np.einsum("ls,jkl,kjs->", self._P, self.lie_hamiltonian(f), self.lie_hamiltonian(h))

    def c3_tilde(self, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        return self.s3(f, h) * _SIXTH

    def component(self, r: int, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        if r == 0:
            return f * h
        return (self.c1, self.c2_tilde, self.c3_tilde)[r - 1](f, h)

    # -- products --------------------------------------------------------

    def star(self, f: PolyScalar, h: PolyScalar) -> NuSeries:
        key = (str(f), str(h))
        hit = self._products.get(key)
        if hit is None:
            hit = NuSeries(tuple(self.component(r, f, h) for r in range(ORDER + 1)))
            self._products[key] = hit
        return hit

    def lifted(self, param: str = "t"):
        """(ring, geometry, jet cache) over Q[x, param], built once."""
        hit = self._lifted.get(param)
        if hit is None:
            ring = self.ring.with_params(self.ring.params + (param,))
            hit = (ring, self.geometry.over_ring(ring), {})
            self._lifted[param] = hit
        return hit

    def star_series(self, F: NuSeries, H: NuSeries) -> NuSeries:
        """Product of two truncated series, bilinear in nu."""
        out = [self.ring.zero] * (ORDER + 1)
        for a, b in itertools.product(range(ORDER + 1), repeat=2):
            if a + b > ORDER or F[a] == 0 or H[b] == 0:
                continue
            for r in range(ORDER + 1 - a - b):
                out[a + b + r] = out[a + b + r] + self.component(r, F[a], H[b])
        return NuSeries(tuple(out))

    def lift(self, f: PolyScalar) -> NuSeries:
        return NuSeries.constant(self.ring, f, ORDER)

    def associator(self, f: PolyScalar, h: PolyScalar, k: PolyScalar) -> NuSeries:
        left = self.star_series(self.star(f, h), self.lift(k))
        right = self.star_series(self.lift(f), self.star(h, k))
        return left - right

    # -- D_X -------------------------------------------------------------

    def d_operator(self, X: TensorField, h: PolyScalar) -> NuSeries:
        """D_X h = X h - nu^2/6 P^{ls} (L_X nabla)^j_{kl} (L_{X_h} nabla)^k_{js}."""
        if X.kinds != (UP,):
            raise ValueError("D_X needs a vector field")
        zero = self.ring.zero
        if h == 0:
            return NuSeries((zero,) * (ORDER + 1))
        key, W = self._d_kernel(X)
        Xh, nu2 = zero, zero
        for exps, c in h.to_dict().items():
            mk = (key, exps)
            hit = self._d_mono.get(mk)
            if hit is None:
                mono = self.ring.ctx.from_dict({exps: 1})
                hit = (np.einsum("i,i->", X.data, self.jet(mono, 1)),
                       np.einsum("kjs,kjs->", W, self.lie_hamiltonian(mono)))
                self._d_mono[mk] = hit
            Xh = Xh + hit[0] * c
            nu2 = nu2 + hit[1] * c
        return NuSeries((Xh, zero, nu2, zero))

    def _d_kernel(self, X: TensorField):
        """W[k, j, s] = -1/6 P^{ls} (L_X nabla)^j_{kl}, so that the nu^2 part is W . L_{X_h}."""
        key = tuple(str(c) for c in X.data)
        hit = self._d_kernels.get(key)
        if hit is None:
            LX = self.geometry.lie_derivative_connection(X).data
            W = np.einsum("ls,jkl->kjs", self._P, LX) * obj_scalar(self.ring.const(-_SIXTH))
            hit = (key, W)
            self._d_kernels[key] = hit
        return hit

    def d_operator_series(self, X: TensorField, H: NuSeries) -> NuSeries:
        """D_X extended nu-linearly to truncated series."""
        out = NuSeries((self.ring.zero,) * (ORDER + 1))
        for a in range(ORDER + 1):
            if H[a] != 0:
                out = out + self.d_operator(X, H[a]).shift(a)
        return out

    def inner_derivation(self, f: PolyScalar, h: PolyScalar) -> NuSeries:
        """(f * h - h * f) / (2 nu) computed from the truncated product.

        The nu^3 coefficient would involve an order-4 term; with the product
        truncated at nu^3 it is zero.
        """
        diff = self.star(f, h) - self.star(h, f)
        return diff.shift(-1).scale(_HALF)

    def derivation_defect(self, X: TensorField, f: PolyScalar, h: PolyScalar,
                          variation: "PoissonVariation") -> NuSeries:
        """D_X(f*h) - (D_X f)*h - f*(D_X h) - d/dt f *_{P + tQ} h."""
        lhs = (
            self.d_operator_series(X, self.star(f, h))
            - self.star_series(self.d_operator(X, f), self.lift(h))
            - self.star_series(self.lift(f), self.d_operator(X, h))
        )
        return lhs - variation.derivative(f, h)

    # -- cross-check ------------------------------------------------------

    def c2_operator(self) -> MultiDiffOp:
        """C2 as a bidifferential operator in the symmetrised-covariant basis."""
        ring, P, dP = self.ring, self._P, self._dP
        PdP = np.einsum("kr,rls->kls", P, dP)

        def tensor(arr, blocks):
            T = TensorField(ring, (UP,) * arr.ndim, arr)
            for block in blocks:
                T = symmetrize(T, block)
            return T

        t22 = np.einsum("kr,ls->klrs", P, P) * obj_scalar(ring.const(_HALF))
        t21 = np.einsum("kls->kls", PdP) * obj_scalar(ring.const(_THIRD))
        t12 = np.einsum("kls->skl", PdP) * obj_scalar(ring.const(_THIRD))
        t11 = np.einsum("lkr,kls->rs", dP, dP) * obj_scalar(ring.const(self._t3))
        return MultiDiffOp(2, {
            (2, 2): tensor(t22, [(0, 1), (2, 3)]),
            (2, 1): tensor(t21, [(0, 1)]),
            (1, 2): tensor(t12, [(1, 2)]),
            (1, 1): tensor(t11, []),
        })


class PoissonVariation:
    """d/dt at t = 0 of the star product for P + tQ, coefficientwise.

    Each C_r is a polynomial of degree r in P, so the t-linear part of the
    product over Q[x, t] is the exact directional derivative.
    """

    def __init__(self, star: StarProduct3, Q: np.ndarray, param: str = "t"):
        base = star.geometry
        self.base_ring = base.ring
        self.param = param
        ring, lifted, jets = star.lifted(param)
        t = ring.param(param)
        Qt = np.empty(Q.shape, dtype=object)
        for idx in np.ndindex(Q.shape):
            Qt[idx] = ring.lift(base.ring.coerce(Q[idx])) * t
        self.ring = ring
        self.star = StarProduct3(lifted.with_poisson(lifted.P + Qt), third_term_sign=star.third_term_sign,
                                 jet_cache=jets)

    def derivative(self, f: PolyScalar, h: PolyScalar) -> NuSeries:
        lf, lh = self.ring.lift(f), self.ring.lift(h)
        coeffs = []
        for r in range(ORDER + 1):
            val = self.star.component(r, lf, lh) if r else self.ring.zero
            coeffs.append(self.ring.param_coefficient(val, self.param, 1, self.base_ring))
        return NuSeries(tuple(coeffs))


def star_p_directional(star: StarProduct3, Q: np.ndarray, f: PolyScalar, h: PolyScalar) -> NuSeries:
    return PoissonVariation(star, Q).derivative(f, h)


def transport_derivative(geometry: Geometry, X: TensorField) -> np.ndarray:
    """The Q entering the D_X identity: Q_SIGN * L_X P."""
    LP = geometry.lie_derivative_bivector(X).data
    return LP if Q_SIGN > 0 else -LP


@dataclass
class ScaledStar:
    """The star product for t P over Q[x, t], for homogeneity checks."""

    star: StarProduct3
    base: StarProduct3
    param: str = "t"

    @classmethod
    def build(cls, star: StarProduct3, param: str = "t") -> "ScaledStar":
        ring, lifted, jets = star.lifted(param)
        t = obj_scalar(ring.param(param))
        return cls(StarProduct3(lifted.with_poisson(lifted.P * t), third_term_sign=star.third_term_sign,
                                jet_cache=jets), star, param)

    def homogeneity_defect(self, r: int, f: PolyScalar, h: PolyScalar) -> PolyScalar:
        """C_r^{tP}(f, h) - t^r C_r^P(f, h); zero when C_r has degree r in P."""
        ring = self.star.ring
        t = ring.param(self.param)
        lf, lh = ring.lift(f), ring.lift(h)
        return self.star.component(r, lf, lh) - ring.lift(self.base.component(r, f, h)) * t ** r


def order_defect(op: Callable[[PolyScalar, PolyScalar], PolyScalar], slot: int, order: int,
                 coords: Sequence[PolyScalar], f: PolyScalar, h: PolyScalar) -> PolyScalar:
    """(order+1)-fold commutator of ``op`` with multiplication by ``coords`` in one slot.

    A differential operator of order <= ``order`` in that slot gives zero
    for every choice of coordinates and arguments.
    """
    if len(coords) != order + 1:
        raise ValueError("need order + 1 multipliers")
    total = f * 0
    n = len(coords)
    for mask in range(1 << n):
        outside = f * 0 + 1
        inside = f * 0 + 1
        bits = 0
        for i in range(n):
            if mask >> i & 1:
                outside = outside * coords[i]
                bits += 1
            else:
                inside = inside * coords[i]
        args = (inside * f, h) if slot == 0 else (f, inside * h)
        term = outside * op(*args)
        total = total + term if bits % 2 == 0 else total - term
    return total


def moyal_coefficients(ring, P: np.ndarray, f: PolyScalar, h: PolyScalar, order: int = ORDER) -> NuSeries:
    """Moyal product for constant P: nu^r/r! P^{i1 j1}..P^{ir jr} d_I f d_J h.

    Brute-force index loops over partial derivatives; independent of the
    covariant machinery.
    """
    d = ring.d
    coeffs = []
    for r in range(order + 1):
        total = ring.zero
        for I in itertools.product(range(d), repeat=r):
            fI = f
            for i in I:
                fI = fI.derivative(i)
            if fI == 0:
                continue
            for J in itertools.product(range(d), repeat=r):
                w = ring.one
                for i, j in zip(I, J):
                    w = w * P[i, j]
                if w == 0:
                    continue
                hJ = h
                for j in J:
                    hJ = hJ.derivative(j)
                total = total + w * fI * hJ
        coeffs.append(total * (rational(1) / factorial(r)))
    return NuSeries(tuple(coeffs))


def cyclic_cocycle_defect(star: StarProduct3, u: PolyScalar, v: PolyScalar, w: PolyScalar) -> PolyScalar:
    """Sum over cyclic permutations of {S3(u, v), w} + S3({u, v}, w)."""
    br = star.geometry.poisson_bracket
    total = star.ring.zero
    for a, b, c in ((u, v, w), (v, w, u), (w, u, v)):
        total = total + br(star.s3(a, b), c) + star.s3(br(a, b), c)
    return total
