"""Asymptotic capacity, eigenvalue and volume-growth invariants of warped products."""

from .errors import (AsygeoError, DomainError, InvariantViolation, ParabolicError,
                     ToleranceNotMet)
from .manifold import WarpedManifold, load_manifold, make_model, rescale

__version__ = "0.1.0"

__all__ = ["AsygeoError", "DomainError", "InvariantViolation", "ParabolicError",
           "ToleranceNotMet", "WarpedManifold", "load_manifold", "make_model", "rescale",
           "__version__"]
