"""Turning-rate law for the two-speed run-and-tumble model.

Cells move at speed ``c`` and reverse direction at a rate that depends on
the chemoattractant slope they perceive.  The rate is built from an odd
quintic saturation profile

    s(u) = (15 u - 10 u^3 + 3 u^5) / 8,   clamped to sign(u) for |u| > 1,

which is C^2, nondecreasing and saturates exactly at |u| = 1.  The rate,
the induced bulk drift velocity and its antiderivative are then

    rate(x)            = phi0 * (5/8 - 3/8 * s(x / alpha)),
    drift_velocity(g)  = (4/5) c (rate(-c g) - rate(c g))
                       = (3/5) c phi0 * s(c g / alpha),
    drift_potential(g) = (3/5) phi0 * alpha * S5(c g / alpha),

with S5 the antiderivative of s, S5(u) = u^2 (15 - 5 u^2 + u^4) / 16 on
[-1, 1] and |u| - 5/16 beyond.  The rate profile pairs to a constant,
rate(x) + rate(-x) = (5/4) phi0, which fixes the relaxation rate of the
kinetic collision operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _sat(u):
    """Odd quintic saturation profile, clamped to +-1 outside [-1, 1]."""
    u = np.asarray(u, dtype=float)
    v = np.clip(u, -1.0, 1.0)
    return v * (15.0 - 10.0 * v * v + 3.0 * v ** 4) / 8.0


def _sat_antiderivative(u):
    """Antiderivative of ``_sat`` vanishing at 0 (even function)."""
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    v = np.minimum(a, 1.0)
    v2 = v * v
    inner = v2 * (15.0 - 5.0 * v2 + v2 * v2) / 16.0
    return np.where(a <= 1.0, inner, a - 5.0 / 16.0)


@dataclass(frozen=True)
class TurningModel:
    """Immutable bundle of the three model constants.

    phi0:  base turning rate (rate at strongly adverse slope).
    alpha: saturation threshold of the perceived slope.
    c:     cell speed.
    """

    phi0: float = 1.0
    alpha: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        for name in ("phi0", "alpha", "c"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    # ------------------------------------------------------------------
    # pointwise laws (accept scalars or arrays)
    # ------------------------------------------------------------------

    def rate(self, x):
        """Turning rate as a function of the perceived slope ``x``.

        Nonincreasing, equal to phi0 for x <= -alpha and phi0/4 for
        x >= alpha; rate(x) + rate(-x) == (5/4) phi0 for all x.
        """
        return self.phi0 * (0.625 - 0.375 * _sat(np.asarray(x, dtype=float) / self.alpha))

    def drift_velocity(self, sigma):
        """Bulk drift velocity induced by a chemoattractant slope ``sigma``.

        Odd and nondecreasing, saturating at +-(3/5) c phi0 once
        |sigma| >= alpha / c.
        """
        return 0.6 * self.c * self.phi0 * _sat(self.c * np.asarray(sigma, dtype=float) / self.alpha)

    def drift_potential(self, sigma):
        """Antiderivative of :meth:`drift_velocity` vanishing at 0."""
        u = self.c * np.asarray(sigma, dtype=float) / self.alpha
        return 0.6 * self.phi0 * self.alpha * _sat_antiderivative(u)

    # ------------------------------------------------------------------
    # derived constants
    # ------------------------------------------------------------------

    @property
    def rate_pair_sum(self) -> float:
        """rate(x) + rate(-x), constant in x."""
        return 1.25 * self.phi0

    @property
    def max_rate_slope(self) -> float:
        """Largest |d rate/dx|, attained at x = 0: (45/64) phi0 / alpha."""
        return 45.0 / 64.0 * self.phi0 / self.alpha

    @property
    def max_drift_slope(self) -> float:
        """Largest |d drift_velocity/d sigma|: (9/8) c^2 phi0 / alpha."""
        return 1.125 * self.c * self.c * self.phi0 / self.alpha

    @property
    def max_drift(self) -> float:
        """Saturated drift speed (3/5) c phi0."""
        return 0.6 * self.c * self.phi0

    def drift_secant_min(self, radius: float) -> float:
        """Smallest secant slope drift_velocity(g)/g over 0 < |g| <= radius.

        The ratio is even and decreasing in |g|, so the minimum sits at
        the endpoint.  Used as the coercivity constant in the energy
        growth estimate, with radius = half the total mass (the a priori
        bound on the slope of the chemoattractant).
        """
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        return float(self.drift_velocity(radius)) / radius
