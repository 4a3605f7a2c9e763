"""Numerical pseudohermitian geometry on the CR sphere and Heisenberg group.

Truncated-Taylor (jet) automatic differentiation drives an exact-to-
roundoff computation of adapted coframes, connection and torsion,
curvature, conformal transformation laws, a divergence identity for
conformal factors of constant scalar curvature, comparison formulas for
the adapted Riemannian metric, and the sharp Sobolev-type quotient with a
projected-gradient minimizer.
"""

__version__ = "0.1.0"

from . import adapted, conformal, contact, engine, harness, jerison_lee
from . import jets, yamabe

__all__ = [
    "adapted",
    "conformal",
    "contact",
    "engine",
    "harness",
    "jerison_lee",
    "jets",
    "yamabe",
    "__version__",
]
