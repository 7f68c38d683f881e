"""Torsionfree connections with polynomial Christoffel symbols on a chart,
Poisson bivectors, curvature and covariant derivative calculus.

Conventions (all indices 0-based in arrays):

* ``gamma[k, i, j]`` is Gamma^k_{ij}, symmetric in (i, j).
* ``P[i, j]`` is P^{ij}; {f, g} = P^{ij} d_i f d_j g.
* Covariant differentiation prepends one covariant axis: (nabla T)[m, ...]
  is nabla_m T.  Hence nabla^2 P has axes (k, l, i, j) = nabla_k nabla_l P^{ij}.
* ``R[l, i, j, k]`` is R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik}
  + G^l_{im} G^m_{jk} - G^l_{jm} G^m_{ik}, skew in (i, j), so that
  nabla_k nabla_l w_j - nabla_l nabla_k w_j = -R^s_{klj} w_s.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .numeric import PolyRing, PolyScalar, obj_array, obj_scalar, poly_key
from .tensor import LOW, UP, TensorField, gradient, symmetrize


class GeometryError(ValueError):
    pass


def _deriv_array(ring: PolyRing, data: np.ndarray, i: int) -> np.ndarray:
    out = np.empty(data.shape, dtype=object)
    flat_in = data.reshape(-1)
    flat_out = out.reshape(-1)
    for n, p in enumerate(flat_in):
        flat_out[n] = p.derivative(i)
    return out


class Geometry:
    """Chart data (P, Gamma) plus lazily computed derived tensors.

    Instances are immutable; derived tensors are cached on first use.
    """

    def __init__(self, ring: PolyRing, P: np.ndarray, gamma: np.ndarray, *, name: str = "",
                 validate: bool = True):
        d = ring.d
        P = np.asarray(P, dtype=object)
        gamma = np.asarray(gamma, dtype=object)
        if P.shape != (d, d) or gamma.shape != (d, d, d):
            raise GeometryError(f"expected P of shape {(d, d)} and Gamma of shape {(d, d, d)}")
        self.ring = ring
        self.name = name
        self.P = _coerce_array(ring, P)
        self.gamma = _coerce_array(ring, gamma)
        if not np.all(self.gamma == self.gamma.transpose(0, 2, 1)):
            raise GeometryError("Christoffel symbols are not symmetric in their lower indices (torsion)")
        if not np.all(self.P == -self.P.T):
            raise GeometryError("Poisson tensor is not antisymmetric")
        if validate:
            from .brackets import bivector_from_array, jacobi_check

            if not jacobi_check(bivector_from_array(ring, self.P)):
                raise GeometryError("Poisson tensor fails the Jacobi identity [P,P]_SN = 0")
        self._nonzero_gamma = [
            (k, i, j, self.gamma[k, i, j])
            for k, i, j in itertools.product(range(d), repeat=3)
            if self.gamma[k, i, j] != 0
        ]
        self._jet_cache: dict = {}

    @property
    def d(self) -> int:
        return self.ring.d

    def with_poisson(self, P: np.ndarray, *, validate: bool = False) -> "Geometry":
        """Same connection, new Poisson tensor; jets of functions are shared."""
        g = Geometry(self.ring, P, self.gamma, name=self.name, validate=validate)
        g._jet_cache = self._jet_cache
        return g

    def over_ring(self, ring: PolyRing) -> "Geometry":
        """The same data viewed in a ring with extra parameter variables."""
        P = _map_array(self.P, ring.lift)
        G = _map_array(self.gamma, ring.lift)
        return Geometry(ring, P, G, name=self.name, validate=False)

    def is_flat(self) -> bool:
        return not self._nonzero_gamma

    # -- tensors ---------------------------------------------------------

    def poisson_tensor(self) -> TensorField:
        return TensorField(self.ring, (UP, UP), self.P, (((0, 1), "anti"),))

    def christoffel(self) -> TensorField:
        return TensorField(self.ring, (UP, LOW, LOW), self.gamma, (((1, 2), "sym"),))

    def covariant_derivative(self, T: TensorField) -> TensorField:
        """nabla T with the new covariant slot in first position."""
        return TensorField(self.ring, (LOW,) + T.kinds, self._nabla(T.data, T.kinds))

    def _nabla(self, data: np.ndarray, kinds: tuple) -> np.ndarray:
        d = self.d
        rank = len(kinds)
        out = np.empty((d,) + data.shape, dtype=object)
        if rank == 0:
            for m in range(d):
                out[m] = data[()].derivative(m)
            return out
        for m in range(d):
            out[m] = _deriv_array(self.ring, data, m)
        full = (slice(None),) * rank
        for k, m, s, g in self._nonzero_gamma:
            if rank > 1:
                g = obj_scalar(g)
            for a, kind in enumerate(kinds):
                if kind == UP:
                    # + Gamma^k_{ms} T^{..s..} lands on index k of slot a
                    dst = (m,) + full[:a] + (k,) + full[a + 1:]
                    src = full[:a] + (s,) + full[a + 1:]
                    out[dst] = out[dst] + data[src] * g
                else:
                    # - Gamma^k_{m s} T_{..k..} lands on index s of slot a
                    dst = (m,) + full[:a] + (s,) + full[a + 1:]
                    src = full[:a] + (k,) + full[a + 1:]
                    out[dst] = out[dst] - data[src] * g
        return out

    @cached_property
    def curvature(self) -> TensorField:
        """R^l_{ijk} as an array R[l, i, j, k]."""
        d = self.d
        G = self.gamma
        R = obj_array((d, d, d, d), self.ring.zero)
        dG = [_deriv_array(self.ring, G, i) for i in range(d)]
        for l, i, j, k in itertools.product(range(d), repeat=4):
            if i >= j:
                continue
            val = dG[i][l, j, k] - dG[j][l, i, k]
            for m in range(d):
                val = val + G[l, i, m] * G[m, j, k] - G[l, j, m] * G[m, i, k]
            R[l, i, j, k] = val
            R[l, j, i, k] = -val
        return TensorField(self.ring, (UP, LOW, LOW, LOW), R, (((1, 2), "anti"),))

    @lru_cache(maxsize=None)
    def nabla_P(self, order: int) -> TensorField:
        """nabla^order P, axes (derivatives..., i, j)."""
        if order == 0:
            return TensorField(self.ring, (UP, UP), self.P)
        return self.covariant_derivative(self.nabla_P(order - 1))

    @lru_cache(maxsize=None)
    def nabla_R(self, order: int) -> TensorField:
        """nabla^order R, axes (derivatives..., l, i, j, k)."""
        if order == 0:
            return self.curvature
        return self.covariant_derivative(self.nabla_R(order - 1))

    # -- scalar calculus -------------------------------------------------

    def nabla_power(self, f: PolyScalar, m: int) -> TensorField:
        """nabla^m f with nabla^m f(X1..Xm) = (nabla_{X1} nabla^{m-1} f)(X2..Xm)."""
        if m == 0:
            arr = np.empty((), dtype=object)
            arr[()] = self.ring.coerce(f)
            return TensorField(self.ring, (), arr)
        key = (poly_key(f), m)
        hit = self._jet_cache.get(key)
        if hit is not None:
            return hit
        if m == 1:
            T = gradient(self.ring, self.ring.coerce(f))
        else:
            T = self.covariant_derivative(self.nabla_power(f, m - 1))
        self._jet_cache[key] = T
        return T

    def sym_covariant(self, f: PolyScalar, m: int) -> TensorField:
        """Fully symmetrised nabla^m f (1/m! normalisation)."""
        T = self.nabla_power(f, m)
        if m < 2:
            return T
        return symmetrize(T, range(m))

    def hamiltonian_field(self, f: PolyScalar) -> TensorField:
        """X_f^j = d_i f P^{ij}."""
        df = gradient(self.ring, self.ring.coerce(f)).data
        return TensorField(self.ring, (UP,), np.einsum("i,ij->j", df, self.P))

    def poisson_bracket(self, f: PolyScalar, g: PolyScalar) -> PolyScalar:
        df = gradient(self.ring, f).data
        dg = gradient(self.ring, g).data
        return np.einsum("i,ij,j->", df, self.P, dg)

    def lie_derivative_connection(self, X: TensorField) -> TensorField:
        """(L_X nabla)^j_{kl} = nabla_k nabla_l X^j + R^j_{mkl} X^m, as array [j, k, l]."""
        if X.kinds != (UP,):
            raise GeometryError("expected a vector field")
        ddX = self.covariant_derivative(self.covariant_derivative(X)).data  # [k, l, j]
        R = self.curvature.data
        out = np.einsum("klj->jkl", ddX) + np.einsum("jmkl,m->jkl", R, X.data)
        return TensorField(self.ring, (UP, LOW, LOW), out)

    def lie_derivative_hamiltonian(self, f: PolyScalar) -> TensorField:
        """(L_{X_f} nabla)^j_{kl} from the expansion in nabla P and nabla^m f:

        P^{ij} f_{;kli} + nabla_k P^{ij} f_{;li} + nabla_l P^{ij} f_{;ki}
        + nabla^2_{kl} P^{ij} f_{;i} + R^j_{ikl} P^{si} f_{;s}.
        """
        f1 = self.nabla_power(f, 1).data
        f2 = self.nabla_power(f, 2).data
        f3 = self.nabla_power(f, 3).data
        P = self.P
        dP = self.nabla_P(1).data
        ddP = self.nabla_P(2).data
        R = self.curvature.data
        out = (
            np.einsum("ij,kli->jkl", P, f3)
            + np.einsum("kij,li->jkl", dP, f2)
            + np.einsum("lij,ki->jkl", dP, f2)
            + np.einsum("klij,i->jkl", ddP, f1)
            + np.einsum("jikl,si,s->jkl", R, P, f1)
        )
        return TensorField(self.ring, (UP, LOW, LOW), out)

    def lie_derivative_bivector(self, X: TensorField) -> TensorField:
        """(L_X P)^{ij} = X^m d_m P^{ij} - P^{mj} d_m X^i - P^{im} d_m X^j."""
        d = self.d
        dP = np.stack([_deriv_array(self.ring, self.P, m) for m in range(d)])  # [m, i, j]
        dX = np.stack([_deriv_array(self.ring, X.data, m) for m in range(d)])  # [m, i]
        out = (
            np.einsum("m,mij->ij", X.data, dP)
            - np.einsum("mj,mi->ij", self.P, dX)
            - np.einsum("im,mj->ij", self.P, dX)
        )
        return TensorField(self.ring, (UP, UP), out)


def _map_array(arr: np.ndarray, fn) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = fn(arr[idx])
    return out


def _coerce_array(ring: PolyRing, arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = ring.coerce(arr[idx])
    return out


def covariant_derivative(g: Geometry, T: TensorField) -> TensorField:
    return g.covariant_derivative(T)


def curvature(g: Geometry) -> TensorField:
    return g.curvature


def sym_covariant(g: Geometry, f: PolyScalar, m: int) -> TensorField:
    return g.sym_covariant(f, m)


def hamiltonian_field(g: Geometry, f: PolyScalar) -> TensorField:
    return g.hamiltonian_field(f)


def lie_derivative_connection(g: Geometry, X: TensorField) -> TensorField:
    return g.lie_derivative_connection(X)


def lie_derivative_connection_coordinates(g: Geometry, X: TensorField) -> TensorField:
    """Coordinate formula for L_X Gamma using only partial derivatives:

    d_k d_l X^j + X^m d_m G^j_{kl} - G^m_{kl} d_m X^j + G^j_{ml} d_k X^m + G^j_{km} d_l X^m.
    """
    ring, d = g.ring, g.d
    G = g.gamma
    dX = np.stack([_deriv_array(ring, X.data, m) for m in range(d)])  # [m, j]
    ddX = np.stack([np.stack([_deriv_array(ring, dX[l], k) for l in range(d)]) for k in range(d)])  # [k, l, j]
    dG = np.stack([_deriv_array(ring, G, m) for m in range(d)])  # [m, j, k, l]
    out = (
        np.einsum("klj->jkl", ddX)
        + np.einsum("m,mjkl->jkl", X.data, dG)
        - np.einsum("mkl,mj->jkl", G, dX)
        + np.einsum("jml,km->jkl", G, dX)
        + np.einsum("jkm,lm->jkl", G, dX)
    )
    return TensorField(ring, (UP, LOW, LOW), out)


@dataclass
class BianchiReport:
    first_failures: list = field(default_factory=list)
    second_failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.first_failures and not self.second_failures


def bianchi_check(g: Geometry) -> BianchiReport:
    """First (cyclic) and second (differential) Bianchi identities."""
    R = g.curvature.data
    dR = g.nabla_R(1).data  # [m, l, i, j, k]
    report = BianchiReport()
    first = R + np.einsum("ljki->lijk", R) + np.einsum("lkij->lijk", R)
    for idx in np.ndindex(first.shape):
        if first[idx] != 0:
            report.first_failures.append((tuple(i + 1 for i in idx), first[idx]))
    # nabla_m R^l_{ijk} + nabla_i R^l_{jmk} + nabla_j R^l_{mik}
    second = dR + np.einsum("iljmk->mlijk", dR) + np.einsum("jlmik->mlijk", dR)
    for idx in np.ndindex(second.shape):
        if second[idx] != 0:
            report.second_failures.append((tuple(i + 1 for i in idx), second[idx]))
    return report


def commutation_defect(g: Geometry, f: PolyScalar, p: int) -> list:
    """Residuals of (nabla^{p+2} f)_{kl J} - (nabla^{p+2} f)_{lk J} + sum_r R^s_{k l j_r} (nabla^p f)_{..s..}."""
    hi = g.nabla_power(f, p + 2).data
    lo = g.nabla_power(f, p).data
    R = g.curvature.data
    diff = hi - hi.swapaxes(0, 1)
    for r in range(p):
        # R^s_{k l j_r} (nabla^p f)_{j_1 .. s .. j_p}
        lo_moved = np.moveaxis(lo, r, 0)  # [s, others...]
        term = np.tensordot(R, lo_moved, axes=([0], [0]))  # [k, l, j_r, others...]
        term = np.moveaxis(term, 2, 2 + r)
        diff = diff + term
    return [(idx, diff[idx]) for idx in np.ndindex(diff.shape) if diff[idx] != 0]


def flat_geometry(ring: PolyRing, P: np.ndarray | None = None, *, name: str = "flat") -> Geometry:
    d = ring.d
    if P is None:
        P = obj_array((d, d), ring.zero)
    return Geometry(ring, P, obj_array((d, d, d), ring.zero), name=name)
