"""One-parameter family of singular nearest-neighbor interaction potentials.

The bond energy blows up at unit compression, which is what produces
hard-sphere-like waves at high energy.  All evaluators accept scalars or
numpy arrays and are pure functions of an immutable parameter record.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Arguments this close to the pole are rejected instead of silently
# returning astronomically large finite numbers: a solver that gets here
# has violated its constraints and must hear about it.
SINGULARITY_GUARD = 1e-12


class SingularityError(ValueError):
    """An evaluation point entered the excluded neighborhood of r = 1."""


@dataclass(frozen=True)
class SingularPotential:
    """Bond potential ((1-r)^(-m) - m*r - 1) / (m*(m+1)) with exponent m > 1.

    Normalized so that phi(0) = dphi(0) = 0 and ddphi(0) = 1.
    """

    m: float

    def __post_init__(self):
        m = float(self.m)
        if not m > 1.0:
            raise ValueError(f"potential exponent must satisfy m > 1, got {self.m!r}")
        object.__setattr__(self, "m", m)

    def _checked(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r >= 1.0 - SINGULARITY_GUARD):
            raise SingularityError(
                "potential argument reached the singularity guard at r = 1"
            )
        return r

    def phi(self, r):
        """Bond energy.  Convex, nonnegative, phi(0) = 0."""
        m = self.m
        r = self._checked(r)
        # expm1/log1p form: the naive difference loses all digits for
        # small r where phi ~ r^2/2.
        out = (np.expm1(-m * np.log1p(-r)) - m * r) / (m * (m + 1.0))
        return out if out.ndim else float(out)

    def dphi(self, r):
        """Bond force ((1-r)^(-(m+1)) - 1) / (m+1); increasing, dphi(0) = 0."""
        m = self.m
        r = self._checked(r)
        out = np.expm1(-(m + 1.0) * np.log1p(-r)) / (m + 1.0)
        return out if out.ndim else float(out)

    def ddphi(self, r):
        """Bond stiffness (1-r)^(-(m+2)); at least 1 on [0, 1)."""
        m = self.m
        r = self._checked(r)
        out = np.exp(-(m + 2.0) * np.log1p(-r))
        return out if out.ndim else float(out)

    def psi(self, s):
        """Regularized singularity factor dphi(1-s) * s^(m+1) on [0, 1].

        Evaluated through the algebraically simplified form
        (1 - s^(m+1)) / (m+1), which is finite at s = 0 where the raw
        product degenerates to 0 * inf; psi(0) = 1/(m+1), psi(1) = 0.
        """
        m = self.m
        s = np.asarray(s, dtype=float)
        if np.any((s < 0.0) | (s > 1.0)):
            raise ValueError("psi is defined on 0 <= s <= 1")
        out = (1.0 - s ** (m + 1.0)) / (m + 1.0)
        return out if out.ndim else float(out)
