from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unistar import PolyRing, flat_geometry
from unistar.brackets import schouten
from unistar.cohomology import (
    DEGREE3_NO_LOOP_FAMILIES,
    MissingOrderError,
    TermPattern,
    WitnessGeometry,
    canonical,
    coboundary_generators,
    cohomology_probe,
    enumerate_family,
    enumerate_terms,
    evaluate_raw,
    evaluate_term,
    has_loop,
    homogeneity_defect,
)
from unistar.geometry import Geometry
from unistar.numeric import obj_array

O0, O1 = ("o", 0), ("o", 1)


def c(n):
    return ("c", n)


# nabla_r P^{is} nabla_s P^{jr}; slot order of P1 is (derivative, up, up)
CROSS = TermPattern(("P1", "P1"), ((c(0), O0, c(1)), (c(1), O1, c(0))), 2)
# nabla_t P^{ti}
TRACE = TermPattern(("P1",), ((c(0), c(0), O0),), 1)
# R^r_{str} P^{si} P^{tj}
RICCI_LIKE = TermPattern(("P0", "P0", "R0"), ((c(1), O0), (c(2), O1), (c(0), c(1), c(2), c(0))), 2)

# the four degree-2 generators as printed, with factors listed P first
GENERATORS_2 = [
    CROSS,
    # nabla^2_{rs} P^{ir} P^{js}
    TermPattern(("P0", "P2"), ((O1, c(1)), (c(0), c(1), O0, c(0))), 2),
    # P^{ir} P^{st} R^j_{rst}
    TermPattern(("P0", "P0", "R0"), ((O0, c(0)), (c(1), c(2)), (O1, c(0), c(1), c(2))), 2),
    # P^{ri} P^{sj} R^t_{rst}
    TermPattern(("P0", "P0", "R0"), ((c(0), O0), (c(1), O1), (c(2), c(0), c(1), c(2))), 2),
]


def _key(t: TermPattern):
    return t.factors, canonical(t.factors, t.labels, t.arity)[0]


def test_loop_examples():
    assert not has_loop(CROSS)
    assert has_loop(TRACE)
    assert has_loop(RICCI_LIKE)


def test_pattern_validation():
    with pytest.raises(ValueError, match="upper with a lower"):
        TermPattern(("P0", "P0"), ((c(0), O0), (c(0), O1)), 2)
    with pytest.raises(ValueError, match="arity"):
        TermPattern(("P0",), ((O0, O1),), 1)
    with pytest.raises(ValueError, match="contravariant"):
        TermPattern(("P1",), ((O0, c(0), c(0)),), 1)
    with pytest.raises(ValueError):
        TermPattern(("Q0",), ((O0, O1),), 2)


def test_printed_degree_2_generators_are_enumerated():
    found = {_key(t) for t in enumerate_terms(2, include_vanishing=True)}
    for g in GENERATORS_2:
        assert _key(g) in found, g.describe()
    # two orbits (CROSS and the product of two traces) are symmetric in the outputs
    assert len(found) == 13
    assert len(enumerate_terms(2)) == 11


def test_first_printed_generator_vanishes_after_alternation():
    # symmetric in (i, j): canonical sign 0, dropped by default
    assert canonical(CROSS.factors, CROSS.labels, 2)[1] == 0
    assert _key(CROSS) not in {_key(t) for t in enumerate_terms(2)}


def test_hand_oracle_first_generator():
    ring = PolyRing(2)
    P = obj_array((2, 2), ring.zero)
    P[0, 1], P[1, 0] = ring.x(1), -ring.x(1)
    g = flat_geometry(ring, P)
    raw = evaluate_raw(CROSS, g)
    assert [[raw[i, j] for j in range(2)] for i in range(2)] == [[0, 0], [0, 1]]
    assert evaluate_term(CROSS, g).is_zero()


def test_no_loop_filter():
    full = enumerate_terms(2)
    no_loop = enumerate_terms(2, no_loop=True)
    assert all(not has_loop(t) for t in no_loop)
    assert {_key(t) for t in no_loop} == {_key(t) for t in full if not has_loop(t)}
    assert len(no_loop) == 3


def test_degree_3_enumeration_is_no_loop_and_deterministic():
    a = enumerate_terms(3, no_loop=True)
    b = enumerate_terms(3, no_loop=True)
    assert [t.labels for t in a] == [t.labels for t in b]
    assert all(not has_loop(t) and t.degree == 3 for t in a)
    assert {t.factors for t in a} == {tuple(sorted(f, key=lambda k: (k[0] != "P", k)))
                                     for f in DEGREE3_NO_LOOP_FAMILIES}
    assert len(a) == 161


def test_coboundary_generators():
    (only,) = coboundary_generators(1)
    assert _key(only) == _key(TRACE)
    assert all(t.degree == 2 and t.arity == 1 for t in coboundary_generators(2))
    with pytest.raises(ValueError):
        coboundary_generators(3)
    with pytest.raises(ValueError):
        enumerate_terms(4)


@given(st.permutations(range(3)), st.booleans())
def test_relabeling_invariance(perm, swap):
    # renaming contraction ids and swapping the equal P factors changes nothing
    t = RICCI_LIKE
    rename = {n: perm[n] for n in range(3)}
    labels = [tuple(("c", rename[n]) if tag == "c" else (tag, n) for tag, n in row) for row in t.labels]
    if swap:
        labels[0], labels[1] = labels[1], labels[0]
    moved = TermPattern(t.factors, tuple(labels), t.arity)
    assert has_loop(moved) == has_loop(t)
    best, sign, _ = canonical(moved.factors, moved.labels, 2)
    assert best == canonical(t.factors, t.labels, 2)[0]
    assert sign == 1


def test_zero_poisson_and_flat_connection(r4):
    ring = r4.ring
    zero_p = Geometry(ring, obj_array((4, 4), ring.zero), r4.gamma)
    for t in enumerate_terms(2):
        assert evaluate_term(t, zero_p).is_zero()
    flat = flat_geometry(ring, r4.P)
    for t in enumerate_terms(2):
        if any(f[0] == "R" for f in t.factors):
            assert evaluate_term(t, flat).is_zero()


def test_coboundary_of_trace_is_the_loop_generator(r4):
    b = evaluate_term(TRACE, r4)
    P = WitnessGeometry("r4", r4).poisson
    db = schouten(P, b)
    gen = evaluate_term(GENERATORS_2[3], r4)
    assert not db.is_zero()
    # db = lambda * gen for one rational lambda
    k = next(iter(gen.coeffs))
    lam = db.coeffs[k] / gen.coeffs[k]
    assert lam.is_constant()
    assert db.equals(gen.scale(lam))
    # and [P, [P, b]] = 0 since P is Poisson
    assert schouten(P, db).is_zero()


def test_missing_order_error(r4):
    (t,) = [t for t in enumerate_terms(2) if "P2" in t.factors][:1]
    with pytest.raises(MissingOrderError):
        evaluate_raw(t, r4, max_order=1)


def test_homogeneity_of_terms(so3):
    for t in enumerate_terms(2):
        assert homogeneity_defect(t, so3).is_zero()
    for fam in DEGREE3_NO_LOOP_FAMILIES[:3]:
        for t in enumerate_family(fam, 2, no_loop=True)[:2]:
            assert homogeneity_defect(t, so3).is_zero()


def test_probe_degree_2_single_witness(r4):
    w = WitnessGeometry("r4", r4)
    nl = cohomology_probe(2, True, [w])
    assert nl.cocycle_dim == 0 and nl.residual == 0
    full = cohomology_probe(2, False, [w])
    assert full.cocycle_dim >= 1
    assert all(full.cocycle_in_span) and full.residual == 0
    assert full.verdict == "vanishing cohomology (evaluated)"


def test_more_witnesses_never_add_cocycles(r4, so3):
    a = WitnessGeometry("so3", so3)
    b = WitnessGeometry("r4", r4)
    one = cohomology_probe(2, False, [a], measure=[b])
    two = cohomology_probe(2, False, [a, b])
    assert two.cocycle_dim <= one.cocycle_dim
    assert two.residual <= one.residual


def test_probe_rejects_bad_witness():
    ring = PolyRing(3)
    P = obj_array((3, 3), ring.zero)
    P[0, 1], P[1, 0] = ring.x(3), -ring.x(3)
    P[1, 2], P[2, 1] = ring.x(2), -ring.x(2)
    g = Geometry(ring, P, obj_array((3, 3, 3), ring.zero), validate=False)
    with pytest.raises(ValueError, match="Jacobi"):
        cohomology_probe(2, True, [WitnessGeometry("bad", g)])
