"""Exact-arithmetic workbench for star products built from a Poisson tensor and
a connection, universal Poisson cohomology probes and the jet-bundle resolution
of functions."""

from .numeric import PolyRing, RatMatrix, in_span, nullspace, rank
from .tensor import Cochain, MultiDiffOp, NuSeries, TensorField
from .geometry import Geometry, flat_geometry

__all__ = [
    "Cochain",
    "Geometry",
    "MultiDiffOp",
    "NuSeries",
    "PolyRing",
    "RatMatrix",
    "TensorField",
    "flat_geometry",
    "in_span",
    "nullspace",
    "rank",
]
__version__ = "0.1.0"
