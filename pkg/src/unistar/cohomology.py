"""Universal Poisson-related tensors as index-wiring patterns, and an
evaluation-based probe of universal Poisson 2-cohomology.

A factor is one of ``P0, P1, P2, ...`` (the a-th covariant derivative of P)
or ``R0, R1, R2`` (covariant derivatives of the curvature).  Slot layout:

* ``Pa``: a covariant derivative slots, then the two contravariant slots of P.
* ``Ra``: a covariant derivative slots, then R^l_{ijk} as (up, low, low, low).

A pattern contracts every covariant slot with a contravariant slot and leaves
``arity`` contravariant slots free; the free slots are the outputs, which are
alternated.  Patterns are identified up to permutations of equal factors,
the antisymmetry of P and of R in (i, j), and (for arity 2) the output swap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Sequence

import flint
import numpy as np

from .brackets import PolyVector, bivector_from_array, jacobi_check, polyvector_from_tensor, schouten
from .conventions import KAPPA
from .geometry import Geometry
from .numeric import exact_einsum, rational
from .scenario import load_shipped
from .tensor import UP, TensorField

OUT = "o"
CON = "c"


@lru_cache(maxsize=None)
def factor_slots(kind: str) -> tuple:
    """Slot kinds of a factor, e.g. ``P1`` -> ('l', 'u', 'u')."""
    base, order = kind[0], int(kind[1:])
    if base == "P":
        return ("l",) * order + ("u", "u")
    if base == "R":
        return ("l",) * order + ("u", "l", "l", "l")
    raise ValueError(f"unknown factor {kind!r}")


@lru_cache(maxsize=None)
def factor_antisymmetries(kind: str) -> tuple:
    """Slot pairs in which the factor is antisymmetric."""
    order = int(kind[1:])
    if kind[0] == "P":
        return ((order, order + 1),)
    return ((order + 1, order + 2),)


def p_degree(factors: Sequence[str]) -> int:
    return sum(1 for f in factors if f[0] == "P")


@dataclass(frozen=True)
class TermPattern:
    """``labels[f][s]`` is ("o", n) for output n or ("c", m) for contraction m."""

    factors: tuple
    labels: tuple
    arity: int

    def __post_init__(self):
        counts: dict = {}
        outs = set()
        for f, kind in enumerate(self.factors):
            slots = factor_slots(kind)
            if len(self.labels[f]) != len(slots):
                raise ValueError("label count does not match factor slots")
            for s, (tag, n) in enumerate(self.labels[f]):
                if tag == OUT:
                    if slots[s] != "u":
                        raise ValueError("outputs must be contravariant slots")
                    if n in outs:
                        raise ValueError("output used twice")
                    outs.add(n)
                else:
                    counts.setdefault(n, []).append(slots[s])
        if outs != set(range(self.arity)):
            raise ValueError("free slots do not match the arity")
        for n, kinds in counts.items():
            if sorted(kinds) != ["l", "u"]:
                raise ValueError(f"contraction {n} does not pair an upper with a lower slot")

    @property
    def degree(self) -> int:
        return p_degree(self.factors)

    def describe(self) -> str:
        letters = "abcdefghmnpqrstuvwz"
        parts = []
        for kind, labs in zip(self.factors, self.labels):
            names = [("IJK"[n] if tag == OUT else letters[n]) for tag, n in labs]
            order = int(kind[1:])
            derivs = "".join(names[:order])
            rest = names[order:]
            nab = f"nabla_{derivs}" if order else ""
            if kind[0] == "P":
                parts.append(f"{nab}P^{rest[0]}{rest[1]}")
            else:
                parts.append(f"{nab}R^{rest[0]}_{''.join(rest[1:])}")
        return " ".join(parts)


def has_loop(t: TermPattern) -> bool:
    """True iff some contraction pairs two slots of the same factor."""
    for labs in t.labels:
        ids = [n for tag, n in labs if tag == CON]
        if len(ids) != len(set(ids)):
            return True
    return False


# ---------------------------------------------------------------------------
# Canonical forms


def _relabel(factors: tuple, labels: tuple) -> tuple:
    mapping: dict = {}
    out = []
    for labs in labels:
        row = []
        for tag, n in labs:
            if tag == CON:
                if n not in mapping:
                    mapping[n] = len(mapping)
                row.append((CON, mapping[n]))
            else:
                row.append((OUT, n))
        out.append(tuple(row))
    return tuple(out)


def _sorted_form(factors: tuple, labels: tuple) -> tuple:
    """Key after sorting factors of equal kind is left to the orbit search."""
    return (factors, _relabel(factors, labels))


def _moves(factors: tuple, labels: tuple, arity: int):
    """Generators of the identification group, each with its sign."""
    n = len(factors)
    for a in range(n - 1):
        if factors[a] == factors[a + 1]:
            lab = list(labels)
            lab[a], lab[a + 1] = lab[a + 1], lab[a]
            yield tuple(lab), 1
    for f, kind in enumerate(factors):
        for s1, s2 in factor_antisymmetries(kind):
            row = list(labels[f])
            row[s1], row[s2] = row[s2], row[s1]
            lab = list(labels)
            lab[f] = tuple(row)
            yield tuple(lab), -1
    if arity == 2:
        swap = {0: 1, 1: 0}
        yield tuple(tuple((OUT, swap[m]) if tag == OUT else (tag, m) for tag, m in row) for row in labels), -1


def canonical(factors: tuple, labels: tuple, arity: int) -> tuple[tuple | None, int, set]:
    """(canonical labels, sign, orbit keys).

    The sign s satisfies term = s * canonical term; s = 0 when the orbit
    identifies the term with its own negative, i.e. it vanishes identically.
    """
    start = _relabel(factors, labels)
    seen = {start: 1}
    frontier = [start]
    zero = False
    while frontier:
        nxt = []
        for lab in frontier:
            sign = seen[lab]
            for moved, s in _moves(factors, lab, arity):
                key = _relabel(factors, moved)
                val = sign * s
                if key in seen:
                    if seen[key] != val:
                        zero = True
                    continue
                seen[key] = val
                nxt.append(key)
        frontier = nxt
    best = min(seen)
    if zero:
        return best, 0, set(seen)
    return best, seen[best], set(seen)


# ---------------------------------------------------------------------------
# Enumeration

DEGREE2_FAMILIES = (("P1", "P1"), ("P0", "P2"), ("P0", "P0", "R0"))
DEGREE3_NO_LOOP_FAMILIES = (
    ("P0", "P0", "P0", "R2"),
    ("P0", "P0", "P0", "R0", "R0"),
    ("P0", "P1", "P1", "R0"),
    ("P0", "P0", "P1", "R1"),
    ("P0", "P0", "P2", "R0"),
    ("P0", "P2", "P2"),
    ("P1", "P1", "P2"),
)
COBOUNDARY_FAMILIES = {
    1: (("P1",),),
    2: (("P0", "P0", "R1"), ("P0", "P1", "R0")),
}


def enumerate_family(factors: Sequence[str], arity: int, no_loop: bool,
                     include_vanishing: bool = False) -> list[TermPattern]:
    """All wirings of one factor family, one per orbit, in a deterministic
    order.  Orbits that vanish identically (after alternation) are dropped
    unless ``include_vanishing``."""
    factors = tuple(sorted(factors, key=lambda k: (k[0] != "P", k)))
    ups, lows = [], []
    for f, kind in enumerate(factors):
        for s, sk in enumerate(factor_slots(kind)):
            (ups if sk == "u" else lows).append((f, s))
    if len(ups) - len(lows) != arity:
        return []
    seen: set = set()
    found: dict = {}
    for outs in itertools.permutations(ups, arity):
        rest = [u for u in ups if u not in outs]
        for perm in itertools.permutations(rest):
            if no_loop and any(u[0] == l[0] for u, l in zip(perm, lows)):
                continue
            labels = [[None] * len(factor_slots(k)) for k in factors]
            for n, (f, s) in enumerate(outs):
                labels[f][s] = (OUT, n)
            for m, ((fu, su), (fl, sl)) in enumerate(zip(perm, lows)):
                labels[fu][su] = (CON, m)
                labels[fl][sl] = (CON, m)
            key = _relabel(factors, tuple(tuple(r) for r in labels))
            if key in seen:
                continue
            best, sign, orbit = canonical(factors, key, arity)
            seen |= orbit
            if sign != 0 or include_vanishing:
                found[best] = TermPattern(factors, best, arity)
    return [found[k] for k in sorted(found)]


def enumerate_terms(degree_in_p: int, arity: int = 2, no_loop: bool = False,
                    include_vanishing: bool = False) -> list[TermPattern]:
    if arity != 2:
        raise ValueError("only arity 2 is supported")
    if degree_in_p == 2:
        families = DEGREE2_FAMILIES
    elif degree_in_p == 3:
        families = DEGREE3_NO_LOOP_FAMILIES
    else:
        raise ValueError("degree in P must be 2 or 3")
    out = []
    for fam in families:
        out.extend(enumerate_family(fam, arity, no_loop, include_vanishing))
    return out


def coboundary_generators(degree_in_p: int) -> list[TermPattern]:
    if degree_in_p not in COBOUNDARY_FAMILIES:
        raise ValueError("coboundary generators exist for degree 1 or 2 in P")
    out = []
    for fam in COBOUNDARY_FAMILIES[degree_in_p]:
        out.extend(enumerate_family(fam, 1, no_loop=False))
    return out


# ---------------------------------------------------------------------------
# Evaluation


class MissingOrderError(ValueError):
    pass


def _factor_array(g: Geometry, kind: str, max_order: int | None) -> np.ndarray:
    order = int(kind[1:])
    if max_order is not None and order > max_order:
        raise MissingOrderError(f"{kind} needs derivative order {order} > {max_order}")
    return (g.nabla_P(order) if kind[0] == "P" else g.nabla_R(order)).data


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def evaluate_raw(t: TermPattern, g: Geometry, max_order: int | None = None) -> np.ndarray:
    """The contracted tensor with free slots in output order (not alternated)."""
    ops, subs = [], []
    for kind, labs in zip(t.factors, t.labels):
        ops.append(_factor_array(g, kind, max_order))
        subs.append("".join(_LETTERS[n] if tag == CON else _LETTERS[-1 - n] for tag, n in labs))
    out = "".join(_LETTERS[-1 - n] for n in range(t.arity))
    return exact_einsum(",".join(subs) + "->" + out, *ops)


def evaluate_term(t: TermPattern, g: Geometry, max_order: int | None = None) -> PolyVector:
    """Exact evaluation, alternated over the free slots (1/2 for arity 2)."""
    T = evaluate_raw(t, g, max_order)
    if t.arity == 2:
        T = (T - T.T) * _half_array()
    return polyvector_from_tensor(TensorField(g.ring, (UP,) * t.arity, T))


def _half_array():
    arr = np.empty((), dtype=object)
    arr[()] = rational(1) / 2
    return arr


# ---------------------------------------------------------------------------
# Witnesses


@dataclass
class WitnessGeometry:
    name: str
    geometry: Geometry
    warnings: list = field(default_factory=list)

    def validate(self) -> None:
        g = self.geometry
        if not jacobi_check(bivector_from_array(g.ring, g.P)):
            raise ValueError(f"witness {self.name}: Jacobi identity fails")
        if not np.all(g.gamma == g.gamma.transpose(0, 2, 1)):
            raise ValueError(f"witness {self.name}: Christoffel symbols not symmetric")

    @property
    def poisson(self) -> PolyVector:
        return bivector_from_array(self.geometry.ring, self.geometry.P)


def _witness(name: str, dup_mode: str) -> WitnessGeometry:
    scn, g = load_shipped(name, dup_mode)
    return WitnessGeometry(f"{scn.name}[{dup_mode}]", g, list(scn.warnings))


def witness_r4(dup_mode: str = "last") -> WitnessGeometry:
    return _witness("r4_paper", dup_mode)


def witness_r7(dup_mode: str = "last") -> WitnessGeometry:
    return _witness("r7_paper", dup_mode)


# ---------------------------------------------------------------------------
# Probe


def _vector(pv: PolyVector, tag: str) -> dict:
    return {(tag,) + k: c for k, c in pv.coefficient_vector().items()}


class _Columns:
    """Sparse rational columns assembled into an integer matrix on demand."""

    def __init__(self):
        self.rows: dict = {}
        self.cols: list = []

    def add(self, col: dict) -> None:
        for k in col:
            if k not in self.rows:
                self.rows[k] = len(self.rows)
        self.cols.append(col)

    def matrix(self, cols: Sequence[dict] | None = None) -> flint.fmpz_mat:
        """Integer matrix with each row cleared of denominators.

        Row scaling keeps both rank and nullspace, so null vectors of the
        result are null vectors of the rational matrix."""
        cols = self.cols if cols is None else cols
        den = [1] * len(self.rows)
        for col in cols:
            for k, v in col.items():
                r = self.rows[k]
                q = int(v.q)
                den[r] = den[r] * q // gcd(den[r], q)
        M = flint.fmpz_mat(len(self.rows), len(cols))
        for j, col in enumerate(cols):
            for k, v in col.items():
                r = self.rows[k]
                M[r, j] = int((v * den[r]).p)
        return M


def pivot_columns(M: flint.fmpz_mat) -> list[int]:
    if M.nrows() == 0 or M.ncols() == 0:
        return []
    R, _, r = M.rref()
    piv = []
    c = 0
    for i in range(r):
        while R[i, c] == 0:
            c += 1
        piv.append(c)
        c += 1
    return piv


def _rank(M: flint.fmpz_mat) -> int:
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return M.rank()


@dataclass
class ProbeReport:
    degree: int
    no_loop: bool
    constraint_witnesses: list
    measure_witnesses: list
    n_patterns: int
    evaluated_rank: int
    cocycle_dim: int
    coboundary_rank: int
    residual: int
    cocycle_in_span: list
    cocycles: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.residual == 0:
            return "vanishing cohomology (evaluated)"
        return f"residual dimension {self.residual}"

    def summary(self) -> dict:
        return {
            "degree": self.degree,
            "no_loop": self.no_loop,
            "constraint_witnesses": self.constraint_witnesses,
            "measure_witnesses": self.measure_witnesses,
            "patterns": self.n_patterns,
            "evaluated_rank": self.evaluated_rank,
            "cocycle_dim": self.cocycle_dim,
            "coboundary_rank": self.coboundary_rank,
            "residual": self.residual,
            "verdict": self.verdict,
        }


def cohomology_probe(degree_in_p: int, no_loop: bool, witnesses: Sequence[WitnessGeometry],
                     measure: Sequence[WitnessGeometry] = (), patterns: Sequence[TermPattern] | None = None
                     ) -> ProbeReport:
    """Evaluated universal Poisson 2-cohomology of the given degree in P.

    The cocycle condition [P, c]_SN = 0 is imposed on ``witnesses``.  Cochains,
    cocycles and coboundaries are compared through their coefficient vectors
    stacked over ``witnesses`` followed by ``measure`` (extra witnesses that
    only serve to tell universal terms apart).  The residual is the dimension
    of the evaluated cocycle space modulo the evaluated coboundaries.
    """
    all_w = list(witnesses) + [w for w in measure if w.name not in {v.name for v in witnesses}]
    for w in all_w:
        w.validate()
    if patterns is None:
        patterns = enumerate_terms(degree_in_p, 2, no_loop)
    patterns = list(patterns)

    # evaluations stacked over all witnesses; remember per-witness pieces
    evals = _Columns()
    per_w: list = []
    for t in patterns:
        col, parts = {}, {}
        for w in all_w:
            pv = evaluate_term(t, w.geometry)
            parts[w.name] = pv
            col.update(_vector(pv, w.name))
        evals.add(col)
        per_w.append(parts)
    E = evals.matrix()
    basis = pivot_columns(E)

    # cocycle condition on the independent patterns
    cons = _Columns()
    for idx in basis:
        col = {}
        for w in witnesses:
            col.update(_vector(schouten(w.poisson, per_w[idx][w.name]), w.name))
        cons.add(col)
    if cons.rows:
        N, nullity = cons.matrix().nullspace()
        Z = [[N[i, j] for i in range(N.nrows())] for j in range(nullity)]
    else:
        Z = [[1 if i == j else 0 for i in range(len(basis))] for j in range(len(basis))]

    # evaluated cocycles
    cocycle_cols = []
    for z in Z:
        col: dict = {}
        for coeff, idx in zip(z, basis):
            if coeff == 0:
                continue
            for k, v in evals.cols[idx].items():
                col[k] = col.get(k, flint.fmpq(0)) + v * int(coeff)
        cocycle_cols.append({k: v for k, v in col.items() if v != 0})

    # coboundaries kappa [P, b]_SN of the degree-(k-1) universal 1-tensors
    bound = _Columns()
    for b in coboundary_generators(degree_in_p - 1):
        col = {}
        for w in all_w:
            pv = schouten(w.poisson, evaluate_term(b, w.geometry)).scale(KAPPA[1])
            col.update(_vector(pv, w.name))
        bound.add(col)

    table = _Columns()
    for col in bound.cols:
        table.add(col)
    for col in cocycle_cols:
        table.add(col)
    nb = len(bound.cols)
    full = table.matrix()
    Bm = table.matrix(bound.cols)
    rank_b = _rank(Bm)
    rank_all = _rank(full)
    rank_z = _rank(table.matrix(cocycle_cols))
    in_span = []
    for col in cocycle_cols:
        in_span.append(_rank(table.matrix(bound.cols + [col])) == rank_b)
    return ProbeReport(
        degree=degree_in_p,
        no_loop=no_loop,
        constraint_witnesses=[w.name for w in witnesses],
        measure_witnesses=[w.name for w in all_w],
        n_patterns=len(patterns),
        evaluated_rank=len(basis),
        cocycle_dim=rank_z,
        coboundary_rank=rank_b,
        residual=rank_all - rank_b,
        cocycle_in_span=in_span,
        cocycles=[[(patterns[idx], c) for c, idx in zip(z, basis) if c != 0] for z in Z],
    )


def homogeneity_defect(t: TermPattern, g: Geometry, param: str = "t") -> PolyVector:
    """evaluate(t, g with tP) - t^degree evaluate(t, g); zero for homogeneous terms."""
    ring = g.ring.with_params(g.ring.params + (param,))
    lifted = g.over_ring(ring)
    tt = np.empty((), dtype=object)
    tt[()] = ring.param(param)
    scaled = lifted.with_poisson(lifted.P * tt)
    lhs = evaluate_term(t, scaled)
    rhs = evaluate_term(t, lifted).scale(ring.param(param) ** t.degree)
    return lhs - rhs
