"""Exact rationals, multivariate polynomials and dense rational linear algebra.

Polynomials are ``flint.fmpq_mpoly`` values living in a :class:`PolyRing`.
A ring has ``d`` chart coordinates ``x1..xd`` and, optionally, extra
parameter variables (for instance a symbolic scaling ``t``) that are never
differentiated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Sequence

import flint
import numpy as np

Rational = flint.fmpq
PolyScalar = flint.fmpq_mpoly


class DimensionError(ValueError):
    pass


class PolyParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.column = pos + 1


def rational(value) -> Rational:
    """Coerce ints, Fractions, ``"p/q"`` strings and fmpq values to fmpq."""
    if isinstance(value, flint.fmpq):
        return value
    if isinstance(value, Fraction):
        return flint.fmpq(value.numerator, value.denominator)
    if isinstance(value, str):
        f = Fraction(value)
        return flint.fmpq(f.numerator, f.denominator)
    if isinstance(value, (int, flint.fmpz)):
        return flint.fmpq(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


class PolyRing:
    """Polynomial ring Q[x1..xd, params] with exact coefficients."""

    def __init__(self, d: int, params: Sequence[str] = ()):
        if d < 1:
            raise DimensionError("dimension must be positive")
        self.d = d
        self.params = tuple(params)
        self.names = tuple(f"x{i}" for i in range(1, d + 1)) + self.params
        self.ctx = flint.fmpq_mpoly_ctx.get(self.names, "deglex")
        self.zero = self.ctx.from_dict({})
        self.one = self.ctx.from_dict({(0,) * self.nvars: 1})

    @property
    def nvars(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"PolyRing(d={self.d}, params={self.params})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyRing) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def x(self, i: int) -> PolyScalar:
        """Coordinate function x_i, 1-based."""
        if not 1 <= i <= self.d:
            raise DimensionError(f"coordinate index {i} out of range 1..{self.d}")
        return self.var(i - 1)

    def var(self, k: int) -> PolyScalar:
        e = [0] * self.nvars
        e[k] = 1
        return self.ctx.from_dict({tuple(e): 1})

    def param(self, name: str) -> PolyScalar:
        return self.var(self.d + self.params.index(name))

    def const(self, c) -> PolyScalar:
        return self.ctx.from_dict({(0,) * self.nvars: rational(c)})

    def monomial(self, exps: Sequence[int], coeff=1) -> PolyScalar:
        exps = tuple(exps) + (0,) * (self.nvars - len(exps))
        return self.ctx.from_dict({exps: rational(coeff)})

    def from_dict(self, terms: dict) -> PolyScalar:
        return self.ctx.from_dict({tuple(e): rational(c) for e, c in terms.items() if c != 0})

    def owns(self, p) -> bool:
        return isinstance(p, flint.fmpq_mpoly) and p.context() is self.ctx

    def coerce(self, p) -> PolyScalar:
        if isinstance(p, flint.fmpq_mpoly):
            if p.context() is not self.ctx:
                raise DimensionError("polynomial belongs to a different ring")
            return p
        return self.const(p)

    def partial(self, p: PolyScalar, i: int) -> PolyScalar:
        """d/dx_i with a 0-based coordinate index."""
        if not 0 <= i < self.d:
            raise DimensionError(f"coordinate index {i} out of range")
        return p.derivative(i)

    def monomials_up_to(self, degree: int, include_constant: bool = True) -> list[PolyScalar]:
        """All coordinate monomials of total degree <= degree, graded order."""
        out = []
        for deg in range(0 if include_constant else 1, degree + 1):
            for exps in _compositions(deg, self.d):
                out.append(self.monomial(exps))
        return out

    def parse(self, text: str) -> PolyScalar:
        return _Parser(self, text).parse()

    def format(self, p: PolyScalar) -> str:
        return format_poly(p, self.names)

    def with_params(self, params: Sequence[str]) -> "PolyRing":
        """Same coordinates with the given extra parameter variables."""
        return PolyRing(self.d, tuple(params))

    def lift(self, p: PolyScalar) -> PolyScalar:
        """Embed a polynomial from a ring with the same coordinates and a
        subset of this ring's parameters."""
        if self.owns(p):
            return p
        src_names = _ctx_names(p.context())
        pos = [self.names.index(n) for n in src_names]
        out = {}
        for e, c in p.to_dict().items():
            full = [0] * self.nvars
            for k, v in zip(pos, e):
                full[k] = v
            out[tuple(full)] = c
        return self.ctx.from_dict(out)

    def param_coefficient(self, p: PolyScalar, name: str, k: int, target: "PolyRing") -> PolyScalar:
        """Coefficient of name^k in p, as a polynomial of ``target`` (which lacks ``name``)."""
        slot = self.names.index(name)
        pos = [target.names.index(n) for i, n in enumerate(self.names) if i != slot]
        out = {}
        for e, c in p.to_dict().items():
            if e[slot] != k:
                continue
            full = [0] * target.nvars
            for tp, v in zip(pos, (v for i, v in enumerate(e) if i != slot)):
                full[tp] = v
            out[tuple(full)] = c
        return target.ctx.from_dict(out)

    def eval_at(self, p: PolyScalar, point: Sequence) -> PolyScalar:
        """Substitute coordinates x_i -> point[i]; parameters are kept."""
        vals = [self.const(v) for v in point] + [self.var(self.d + k) for k in range(len(self.params))]
        return p.compose(*vals)


def _ctx_names(ctx) -> tuple:
    return tuple(ctx.names())


def _compositions(total: int, parts: int):
    """Exponent vectors of the given total degree, in reverse-lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def poly_key(p: PolyScalar) -> str:
    """Hashable canonical key (flint polys are unhashable)."""
    return str(p)


def poly_arith(a: PolyScalar, b: PolyScalar, op: str) -> PolyScalar:
    if a.context() is not b.context():
        raise DimensionError("operands live in different polynomial rings")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def poly_partial(ring: PolyRing, p: PolyScalar, i: int) -> PolyScalar:
    """Formal partial derivative d/dx_i, 1-based index."""
    if not 1 <= i <= ring.d:
        raise DimensionError(f"coordinate index {i} out of range 1..{ring.d}")
    return ring.coerce(p).derivative(i - 1)


def _format_coeff(c: Rational) -> str:
    return str(c)


def format_poly(p: PolyScalar, names: Sequence[str]) -> str:
    items = p.to_dict()
    if not items:
        return "0"
    order = sorted(items, key=lambda e: (-sum(e), tuple(-v for v in e)))
    parts = []
    for idx, e in enumerate(order):
        c = items[e]
        neg = c < 0
        mag = -c if neg else c
        factors = []
        for name, k in zip(names, e):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        if not factors:
            body = _format_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_coeff(mag) + "*" + "*".join(factors)
        if idx == 0:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


_TOKEN = re.compile(r"\s*(?:(\d+)(?:\s*/\s*(\d+))?|([A-Za-z_][A-Za-z_0-9]*)|(.))")


class _Parser:
    """Recursive descent for: expr := term (('+'|'-') term)*,
    term := unary ('*' unary)*, unary := '-' unary | power,
    power := atom ('^' INT)?, atom := RATIONAL | VAR | '(' expr ')'."""

    def __init__(self, ring: PolyRing, text: str):
        self.ring = ring
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            start = m.end() - len(m.group(0).lstrip())
            if m.group(1) is not None:
                num = int(m.group(1))
                den = int(m.group(2)) if m.group(2) is not None else 1
                if den == 0:
                    raise PolyParseError("zero denominator", text, start)
                self.tokens.append(("num", flint.fmpq(num, den), start))
            elif m.group(3) is not None:
                self.tokens.append(("name", m.group(3), start))
            elif m.group(4) is not None:
                ch = m.group(4)
                if ch not in "+-*^()":
                    raise PolyParseError(f"unexpected character {ch!r}", text, start)
                self.tokens.append(("op", ch, start))
            pos = m.end()
        self.tokens.append(("end", None, len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str):
        raise PolyParseError(message, self.text, self.peek()[2])

    def parse(self) -> PolyScalar:
        if self.peek()[0] == "end":
            self.error("empty polynomial")
        value = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            value = value * self.unary()
        return value

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, _ = self.peek()
            if kind != "num" or val.q != 1:
                self.error("exponent must be a nonnegative integer")
            self.take()
            return base ** int(val.p)
        return base

    def atom(self):
        kind, val, _ = self.peek()
        if kind == "num":
            self.take()
            return self.ring.const(val)
        if kind == "name":
            if val not in self.ring.names:
                self.error(f"unknown variable {val!r}")
            self.take()
            return self.ring.var(self.ring.names.index(val))
        if kind == "op" and val == "(":
            self.take()
            value = self.expr()
            if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
                self.error("expected ')'")
            self.take()
            return value
        self.error("expected a number, variable or '('")


# ---------------------------------------------------------------------------
# Dense rational matrices


@dataclass(frozen=True)
class RatMatrix:
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "RatMatrix":
        rows = [list(r) for r in rows]
        ncols = cols if cols is not None else (len(rows[0]) if rows else 0)
        for r in rows:
            if len(r) != ncols:
                raise DimensionError("ragged rows")
        return cls(len(rows), ncols, tuple(rational(v) for r in rows for v in r))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int | None = None) -> "RatMatrix":
        if not columns:
            return cls(rows or 0, 0, ())
        nrows = len(columns[0])
        return cls.from_rows([[c[i] for c in columns] for i in range(nrows)], len(columns))

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_flint(self) -> flint.fmpq_mat:
        return flint.fmpq_mat(self.rows, self.cols, list(self.entries))

    def matvec(self, v: Sequence) -> list:
        if len(v) != self.cols:
            raise DimensionError("vector length does not match column count")
        v = [rational(x) for x in v]
        return [sum((a * b for a, b in zip(self.row(i), v)), flint.fmpq(0)) for i in range(self.rows)]


def _as_flint(M) -> flint.fmpq_mat:
    if isinstance(M, flint.fmpq_mat):
        return M
    if isinstance(M, RatMatrix):
        return M.to_flint()
    raise TypeError("expected RatMatrix or fmpq_mat")


def rank(M) -> int:
    F = _as_flint(M)
    if F.nrows() == 0 or F.ncols() == 0:
        return 0
    return F.rref()[1]


def _nullspace_from_rref(R: flint.fmpq_mat, r: int, cols: int) -> list[list[Rational]]:
    pivots = []
    row = 0
    for c in range(cols):
        if row < r and R[row, c] != 0:
            pivots.append(c)
            row += 1
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [flint.fmpq(0)] * cols
        v[f] = flint.fmpq(1)
        for i, pc in enumerate(pivots):
            v[pc] = -R[i, f]
        basis.append(v)
    return basis


def nullspace(M) -> list[list[Rational]]:
    """Exact basis of the right nullspace {v : M v = 0}."""
    F = _as_flint(M)
    cols = F.ncols()
    if F.nrows() == 0:
        return [[flint.fmpq(int(i == j)) for i in range(cols)] for j in range(cols)]
    R, r = F.rref()
    return _nullspace_from_rref(R, r, cols)


def in_span(v: Sequence, basis: Sequence[Sequence]) -> tuple[bool, list[Rational] | None]:
    """Decide v in span(basis); on success also return expansion coefficients."""
    v = [rational(x) for x in v]
    for b in basis:
        if len(b) != len(v):
            raise DimensionError("basis vector length does not match")
    if all(x == 0 for x in v):
        return True, [flint.fmpq(0)] * len(basis)
    if not basis:
        return False, None
    n = len(v)
    k = len(basis)
    aug = flint.fmpq_mat(n, k + 1, [x for i in range(n) for x in ([rational(b[i]) for b in basis] + [v[i]])])
    R, r = aug.rref()
    pivots = []
    row = 0
    for c in range(k + 1):
        if row < r and R[row, c] != 0:
            pivots.append(c)
            row += 1
    if k in pivots:
        return False, None
    coeffs = [flint.fmpq(0)] * k
    for i, pc in enumerate(pivots):
        coeffs[pc] = R[i, k]
    return True, coeffs


def integer_matrix(columns: Iterable[dict], row_keys: dict | None = None) -> tuple[flint.fmpz_mat, dict]:
    """Assemble sparse rational columns {row_key: value} into an integer matrix.

    Each column is scaled by the lcm of its denominators, which preserves
    rank, nullspace and column-span membership questions column by column.
    """
    columns = list(columns)
    keys = dict(row_keys) if row_keys else {}
    for col in columns:
        for k in col:
            if k not in keys:
                keys[k] = len(keys)
    M = flint.fmpz_mat(len(keys), len(columns))
    for j, col in enumerate(columns):
        den = 1
        for val in col.values():
            den = _lcm(den, int(rational(val).q))
        for k, val in col.items():
            val = rational(val) * den
            M[keys[k], j] = int(val.p)
    return M, keys


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def obj_array(shape: tuple, fill) -> np.ndarray:
    """Object array filled with one (immutable) flint value.

    ``np.full`` cannot be used: numpy treats flint polynomials as sequences.
    """
    arr = np.empty(shape, dtype=object)
    arr.fill(fill)
    return arr


def obj_scalar(value) -> np.ndarray:
    """Wrap a flint value as a 0-d object array so that ``array * value``
    multiplies entrywise instead of iterating over polynomial terms."""
    arr = np.empty((), dtype=object)
    arr[()] = value
    return arr


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return 1 if n <= 1 else n * factorial(n - 1)


def exact_einsum(spec: str, *operands: np.ndarray) -> np.ndarray:
    """``np.einsum`` over object arrays along a greedy pairwise path.

    numpy's own optimised einsum hands 0-d intermediates back as bare flint
    values, which it then iterates as sequences; here every intermediate is
    re-wrapped.  The result is always an ndarray (0-d for a full contraction).
    """
    inputs, out = spec.split("->")
    subs = inputs.split(",")
    ops = [op if isinstance(op, np.ndarray) else obj_scalar(op) for op in operands]
    if len(ops) == 1:
        return _wrap(np.einsum(f"{subs[0]}->{out}", ops[0]))
    path = np.einsum_path(spec, *ops, optimize="greedy")[0][1:]
    for pair in path:
        picked = sorted(pair, reverse=True)
        taken = [(subs.pop(k), ops.pop(k)) for k in picked]
        rest = set(out).union(*subs)
        letters = "".join(taken[i][0] for i in range(len(taken)))
        keep = "".join(sorted({c for c in letters if c in rest}))
        sub = ",".join(s for s, _ in taken) + "->" + keep
        ops.append(_wrap(np.einsum(sub, *(o for _, o in taken))))
        subs.append(keep)
    return _wrap(np.einsum(f"{subs[0]}->{out}", ops[0]))


def _wrap(value) -> np.ndarray:
    return value if isinstance(value, np.ndarray) else obj_scalar(value)
