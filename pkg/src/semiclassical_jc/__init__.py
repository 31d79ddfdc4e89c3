"""Exact and semiclassical propagators for the Jaynes-Cummings model.

The package computes <final| U(T) |initial> four ways: exactly (invariant
subspace blocks cross-checked against a dense matrix exponential), in the
dominant-path approximation (complexified boundary-value problem with a
Weierstrass-elliptic closed form), linearized about the two fixed points,
and with the Gaussian fluctuation correction that restores spontaneous
emission at the north pole.
"""

from .model import (
    CanonicalCoherentState,
    ConservedPair,
    ModelParams,
    PhasePoint,
    PropagatorElement,
    SpinCoherentState,
)

__all__ = [
    "CanonicalCoherentState",
    "ConservedPair",
    "ModelParams",
    "PhasePoint",
    "PropagatorElement",
    "SpinCoherentState",
    "__version__",
]

__version__ = "0.1.0"
