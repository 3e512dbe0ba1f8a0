"""Solitary waves of FPU-type chains near the hard-sphere limit."""

from .potential import SingularPotential, SingularityError, SINGULARITY_GUARD

__all__ = ["SingularPotential", "SingularityError", "SINGULARITY_GUARD"]

__version__ = "0.1.0"
