"""Dense tensor fields with polynomial entries, multidifferential operators
and truncated formal series in the deformation parameter."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numeric import PolyRing, PolyScalar, factorial, obj_array, obj_scalar, rational

UP, LOW = "u", "l"


class SlotError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class TensorField:
    """Components T[a0, a1, ...] with one axis per slot.

    ``kinds[a]`` is ``"u"`` (contravariant) or ``"l"`` (covariant). Declared
    symmetries are ``(slots, "sym" | "anti")`` pairs and are checked on
    construction.
    """

    ring: PolyRing
    kinds: tuple
    data: np.ndarray
    symmetries: tuple = ()

    def __post_init__(self):
        d = self.ring.d
        if self.data.shape != (d,) * len(self.kinds):
            raise SlotError(f"shape {self.data.shape} does not match {len(self.kinds)} slots in dimension {d}")
        for k in self.kinds:
            if k not in (UP, LOW):
                raise SlotError(f"unknown slot kind {k!r}")
        for slots, kind in self.symmetries:
            if not holds_symmetry(self.data, slots, kind):
                raise SymmetryError(f"declared {kind} symmetry in slots {slots} fails")

    @property
    def d(self) -> int:
        return self.ring.d

    @property
    def valence(self) -> tuple[int, int]:
        return self.kinds.count(UP), self.kinds.count(LOW)

    def __getitem__(self, idx):
        return self.data[idx]

    def __add__(self, other: "TensorField") -> "TensorField":
        _same_shape(self, other)
        return TensorField(self.ring, self.kinds, self.data + other.data)

    def __sub__(self, other: "TensorField") -> "TensorField":
        _same_shape(self, other)
        return TensorField(self.ring, self.kinds, self.data - other.data)

    def __neg__(self) -> "TensorField":
        return TensorField(self.ring, self.kinds, -self.data, self.symmetries)

    def scale(self, c) -> "TensorField":
        c = self.ring.coerce(c) if not isinstance(c, int) else c
        return TensorField(self.ring, self.kinds, self.data * obj_scalar(c), self.symmetries)

    def equals(self, other: "TensorField") -> bool:
        return self.kinds == other.kinds and bool(np.all(self.data == other.data))

    def is_zero(self) -> bool:
        return all(p == 0 for p in self.data.flat)

    def components(self) -> list[tuple[tuple, PolyScalar]]:
        """Nonzero components as (index tuple, polynomial), indices 1-based."""
        out = []
        for idx in np.ndindex(self.data.shape):
            val = self.data[idx]
            if val != 0:
                out.append((tuple(i + 1 for i in idx), val))
        return out

    def describe(self, name: str = "T") -> str:
        lines = []
        for idx, val in self.components():
            up = "".join(str(i) for i, k in zip(idx, self.kinds) if k == UP)
            low = "".join(str(i) for i, k in zip(idx, self.kinds) if k == LOW)
            label = name + (f"^{up}" if up else "") + (f"_{low}" if low else "")
            lines.append(f"{label} = {self.ring.format(val)}")
        return "\n".join(lines) if lines else f"{name} = 0"


def _same_shape(a: TensorField, b: TensorField) -> None:
    if a.ring != b.ring or a.kinds != b.kinds:
        raise SlotError("tensors have different slot structure")


def holds_symmetry(data: np.ndarray, slots: Sequence[int], kind: str) -> bool:
    slots = list(slots)
    for a, b in itertools.combinations(slots, 2):
        perm = list(range(data.ndim))
        perm[a], perm[b] = perm[b], perm[a]
        swapped = data.transpose(perm)
        target = swapped if kind == "sym" else -swapped
        if not np.all(data == target):
            return False
    return True


def zeros(ring: PolyRing, kinds: Sequence[str]) -> TensorField:
    return TensorField(ring, tuple(kinds), obj_array((ring.d,) * len(kinds), ring.zero))


def scalar_field(ring: PolyRing, p: PolyScalar) -> TensorField:
    arr = np.empty((), dtype=object)
    arr[()] = ring.coerce(p)
    return TensorField(ring, (), arr)


def from_function(ring: PolyRing, kinds: Sequence[str], fn: Callable[..., object]) -> TensorField:
    """Build a tensor from ``fn(*indices)`` with 0-based indices."""
    kinds = tuple(kinds)
    arr = obj_array((ring.d,) * len(kinds), ring.zero)
    for idx in np.ndindex(arr.shape):
        arr[idx] = ring.coerce(fn(*idx))
    return TensorField(ring, kinds, arr)


def kronecker(ring: PolyRing) -> TensorField:
    """The identity (1,1)-tensor delta^i_j."""
    return from_function(ring, (UP, LOW), lambda i, j: 1 if i == j else 0)


def gradient(ring: PolyRing, f: PolyScalar) -> TensorField:
    arr = obj_array((ring.d,), ring.zero)
    for i in range(ring.d):
        arr[i] = f.derivative(i)
    return TensorField(ring, (LOW,), arr)


def contract(T: TensorField, up_slot: int, low_slot: int) -> TensorField:
    """Trace over one contravariant and one covariant slot."""
    if T.kinds[up_slot] != UP or T.kinds[low_slot] != LOW:
        raise SlotError("contraction must pair a contravariant slot with a covariant slot")
    data = np.trace(T.data, axis1=up_slot, axis2=low_slot)
    if not isinstance(data, np.ndarray):
        arr = np.empty((), dtype=object)
        arr[()] = data
        data = arr
    kinds = tuple(k for a, k in enumerate(T.kinds) if a not in (up_slot, low_slot))
    return TensorField(T.ring, kinds, data)


def tensor_product(A: TensorField, B: TensorField) -> TensorField:
    if A.ring != B.ring:
        raise SlotError("tensors live over different rings")
    data = np.multiply.outer(A.data, B.data)
    if not isinstance(data, np.ndarray):
        arr = np.empty((), dtype=object)
        arr[()] = data
        data = arr
    return TensorField(A.ring, A.kinds + B.kinds, data)


def _permutation_average(T: TensorField, slots: Sequence[int], signed: bool) -> TensorField:
    slots = list(slots)
    kinds = {T.kinds[s] for s in slots}
    if len(kinds) > 1:
        raise SlotError("cannot (anti)symmetrize over mixed slot kinds")
    if len(slots) < 2:
        return T
    total = obj_array(T.data.shape, T.ring.zero)
    for perm in itertools.permutations(range(len(slots))):
        axes = list(range(T.data.ndim))
        for src, dst in zip(slots, perm):
            axes[src] = slots[dst]
        term = T.data.transpose(axes)
        if signed and _perm_sign(perm) < 0:
            total = total - term
        else:
            total = total + term
    norm = rational(1) / factorial(len(slots))
    return TensorField(T.ring, T.kinds, total * obj_scalar(T.ring.const(norm)))


def symmetrize(T: TensorField, slots: Sequence[int]) -> TensorField:
    """Average over all permutations of the given slots (a projection)."""
    return _permutation_average(T, slots, signed=False)


def alternate(T: TensorField, slots: Sequence[int]) -> TensorField:
    """Signed average over all permutations of the given slots."""
    return _permutation_average(T, slots, signed=True)


# ---------------------------------------------------------------------------
# Multidifferential operators


@dataclass(frozen=True, eq=False)
class MultiDiffOp:
    """Op(f1..fk) = sum over shapes of Op^{J1..Jk} nabla^sym_{J1} f1 ... nabla^sym_{Jk} fk.

    ``tensors`` maps a shape ``(|J1|, ..., |Jk|)`` to a contravariant tensor
    whose slots are the concatenated blocks; each block must be symmetric.
    """

    arity: int
    tensors: dict = field(default_factory=dict)

    def __post_init__(self):
        for shape, T in self.tensors.items():
            if len(shape) != self.arity:
                raise SlotError(f"shape {shape} does not match arity {self.arity}")
            if len(T.kinds) != sum(shape) or any(k != UP for k in T.kinds):
                raise SlotError(f"tensor for shape {shape} must have {sum(shape)} contravariant slots")
            start = 0
            for size in shape:
                block = list(range(start, start + size))
                if size > 1 and not holds_symmetry(T.data, block, "sym"):
                    raise SymmetryError(f"tensor for shape {shape} is not symmetric within block {block}")
                start += size

    def vanishes_on_constants(self) -> bool:
        return all(min(shape) >= 1 for shape in self.tensors)

    def max_orders(self) -> tuple:
        orders = [0] * self.arity
        for shape in self.tensors:
            orders = [max(a, b) for a, b in zip(orders, shape)]
        return tuple(orders)

    def bind(self, geometry) -> "Cochain":
        return Cochain(self.arity, lambda *args: op_apply(self, geometry, args))


def op_apply(op: MultiDiffOp, geometry, args: Sequence[PolyScalar]) -> PolyScalar:
    if len(args) != op.arity:
        raise ValueError(f"operator of arity {op.arity} applied to {len(args)} arguments")
    ring = geometry.ring
    total = ring.zero
    for shape, T in op.tensors.items():
        operands = [T.data]
        for size, f in zip(shape, args):
            operands.append(geometry.sym_covariant(f, size).data)
        letters = iter("abcdefghijklmnopqrstuvwxyz")
        first = "".join(next(letters) for _ in range(sum(shape)))
        subs = [first]
        pos = 0
        for size in shape:
            subs.append(first[pos:pos + size])
            pos += size
        expr = ",".join(subs) + "->"
        value = np.einsum(expr, *operands) if operands[0].ndim else None
        if value is None:
            value = T.data[()]
            for f in args:
                value = value * f
        total = total + value
    return total


@dataclass(frozen=True)
class Cochain:
    """A multilinear operator on polynomials, given by evaluation."""

    arity: int
    fn: Callable[..., PolyScalar]

    def __call__(self, *args: PolyScalar) -> PolyScalar:
        if len(args) != self.arity:
            raise ValueError(f"cochain of arity {self.arity} called with {len(args)} arguments")
        return self.fn(*args)


# ---------------------------------------------------------------------------
# Truncated series in nu


@dataclass(frozen=True)
class NuSeries:
    """c0 + c1 nu + ... + cN nu^N; products truncate at nu^N."""

    coeffs: tuple

    @classmethod
    def of(cls, coeffs: Sequence[PolyScalar]) -> "NuSeries":
        return cls(tuple(coeffs))

    @classmethod
    def constant(cls, ring: PolyRing, p: PolyScalar, order: int) -> "NuSeries":
        return cls((ring.coerce(p),) + (ring.zero,) * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, r: int) -> PolyScalar:
        return self.coeffs[r]

    def _check(self, other: "NuSeries") -> None:
        if other.order != self.order:
            raise ValueError("series truncated at different orders")

    def __add__(self, other: "NuSeries") -> "NuSeries":
        self._check(other)
        return NuSeries(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "NuSeries") -> "NuSeries":
        self._check(other)
        return NuSeries(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "NuSeries":
        return NuSeries(tuple(-a for a in self.coeffs))

    def __mul__(self, other: "NuSeries") -> "NuSeries":
        self._check(other)
        n = self.order
        out = []
        for r in range(n + 1):
            acc = self.coeffs[0] * other.coeffs[r]
            for i in range(1, r + 1):
                acc = acc + self.coeffs[i] * other.coeffs[r - i]
            out.append(acc)
        return NuSeries(tuple(out))

    def scale(self, c) -> "NuSeries":
        return NuSeries(tuple(a * c for a in self.coeffs))

    def shift(self, k: int) -> "NuSeries":
        """Multiply by nu^k (k may be negative when the low coefficients vanish)."""
        zero = self.coeffs[0] * 0
        if k >= 0:
            return NuSeries((zero,) * k + self.coeffs[: len(self.coeffs) - k])
        if any(c != 0 for c in self.coeffs[:-k]):
            raise ValueError("cannot divide by nu: low-order coefficients are nonzero")
        return NuSeries(self.coeffs[-k:] + (zero,) * (-k))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def first_nonzero(self) -> int | None:
        for r, c in enumerate(self.coeffs):
            if c != 0:
                return r
        return None
