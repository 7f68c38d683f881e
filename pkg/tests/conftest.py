from __future__ import annotations

import warnings

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from unistar import PolyRing, flat_geometry
from unistar.geometry import Geometry
from unistar.numeric import obj_array
from unistar.scenario import DuplicateAssignmentWarning, load_shipped

# polynomial arithmetic is exact but not cheap
settings.register_profile("unistar", max_examples=25, deadline=None)
settings.load_profile("unistar")


def _shipped(name: str) -> Geometry:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateAssignmentWarning)
        return load_shipped(name)[1]


@pytest.fixture(scope="session")
def r4() -> Geometry:
    return _shipped("r4_paper")


@pytest.fixture(scope="session")
def r7() -> Geometry:
    return _shipped("r7_paper")


@pytest.fixture(scope="session")
def moyal2() -> Geometry:
    return _shipped("flat2_moyal")


@pytest.fixture(scope="session")
def so3() -> Geometry:
    """Lie-Poisson structure of so(3) with a non-flat torsionfree connection."""
    ring = PolyRing(3)
    x1, x2, x3 = (ring.x(i) for i in (1, 2, 3))
    P = obj_array((3, 3), ring.zero)
    P[0, 1], P[1, 0] = x3, -x3
    P[1, 2], P[2, 1] = x1, -x1
    P[2, 0], P[0, 2] = x2, -x2
    G = obj_array((3, 3, 3), ring.zero)
    G[0, 1, 1] = x3
    G[2, 0, 1] = G[2, 1, 0] = x1 + 1
    return Geometry(ring, P, G, name="so3")


def flat_constant(d: int = 2):
    ring = PolyRing(d)
    P = obj_array((d, d), ring.zero)
    P[0, 1], P[1, 0] = ring.one, -ring.one
    return flat_geometry(ring, P)


def polynomials(ring: PolyRing, max_degree: int = 3, max_terms: int = 4, coeff: int = 3):
    """Strategy for small polynomials with integer coefficients."""
    exps = st.tuples(*[st.integers(0, max_degree) for _ in range(ring.d)]).filter(
        lambda e: sum(e) <= max_degree)
    terms = st.dictionaries(exps, st.integers(-coeff, coeff), max_size=max_terms)
    return terms.map(lambda t: ring.from_dict(t))
