"""Closed-form approximants and scaling laws built from the limit profile.

Everything here is an explicit function of the limit profile and its
moment constants; no wave data enters.  The distance approximant has a
tip branch, a foot branch and a zero branch; the velocity approximant is
a single rescaled transition layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .limit_ode import AsymptoticConstants, LimitProfile


def w0(lp, xt):
    """Limit transition layer (S'(x) + mu_bar)/2; increasing from 0 to mu_bar."""
    return 0.5 * (lp.eval_Sp(xt) + lp.mu_bar)


def t0(lp, consts, xt):
    """Limit foot layer (S(x) + mu_bar*x + kappa_bar)/2; decays for x -> -inf."""
    xt = np.asarray(xt, dtype=float)
    out = 0.5 * (lp.eval_S(xt) + lp.mu_bar * xt + consts.kappa_bar)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Approximant:
    """Wave approximant at amplitude gap eps, with its scale parameters."""

    eps: float
    consts: AsymptoticConstants
    lp: LimitProfile
    mu_hat: float = field(init=False)
    sigma_hat: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")
        denom = 1.0 + self.eps * (self.consts.kappa_bar - 1.0)
        if denom <= 0.0:
            raise ValueError("eps too large: scale denominator not positive")
        m = self.consts.m
        mu_hat = self.consts.mu_bar * self.eps / denom
        object.__setattr__(self, "mu_hat", mu_hat)
        object.__setattr__(self, "sigma_hat", self.eps ** (-m - 2.0) * mu_hat**2)


def r_hat(app, x):
    """Three-branch distance approximant: tip, foot, zero."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    eps, mu = app.eps, app.mu_hat
    tip = 1.0 - eps - eps * app.lp.eval_S(np.where(ax < 0.5, ax, 0.5) / mu)
    foot = eps * t0(app.lp, app.consts,
                    (1.0 - np.where((ax >= 0.5) & (ax < 1.5), ax, 1.0)) / mu)
    out = np.where(ax < 0.5, tip, np.where(ax < 1.5, foot, 0.0))
    return out if out.ndim else float(out)


def v_hat(app, x):
    """Velocity approximant: rescaled transition layer, zero beyond |x| = 1."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    eps, mu = app.eps, app.mu_hat
    layer = (eps / mu) * w0(app.lp, (0.5 - np.where(ax < 1.0, ax, 1.0)) / mu)
    out = np.where(ax < 1.0, layer, 0.0)
    return out if out.ndim else float(out)


def delta_hat(app):
    """Norm gap 1 - ||v_hat||_2 of the velocity approximant.

    The square norm is an adaptive quadrature over the compact support
    (evenness halves it); positive for small eps.
    """
    sq, _ = quad(lambda x: v_hat(app, x) ** 2, 0.0, 1.0, points=[0.5],
                 epsabs=1e-13, epsrel=1e-13, limit=200)
    return 1.0 - math.sqrt(2.0 * sq)


@dataclass(frozen=True)
class ScalingLaws:
    """Leading-order expansions of the wave parameters in eps.

    delta_series is only meaningful for m > 2; for smaller exponents it
    is None and delta_refused is set.
    """

    eps: float
    mu_series: float
    sigma_series: float
    delta_series: float | None
    delta_refused: bool


def scaling_laws(eps, consts):
    """Evaluate the two-term parameter expansions at one eps."""
    mb, kb, eb, m = consts.mu_bar, consts.kappa_bar, consts.eta_bar, consts.m
    mu_series = mb * eps + mb * (1.0 - kb) * eps**2
    sigma_series = mb**2 * eps ** (-m) + 2.0 * mb**2 * (1.0 - kb) * eps ** (-m + 1.0)
    if m > 2.0:
        # linear coefficient from the norm-gap identity
        # (1-delta)^2 = (1+eps(kb-1))(1-eps(1+eb/mb)) + O(eps^m)
        c1 = (2.0 * mb - mb * kb + eb) / (2.0 * mb)
        c2 = (mb * kb + eb) ** 2 / (8.0 * mb**2)
        delta_series = c1 * eps + c2 * eps**2
        refused = False
    else:
        delta_series = None
        refused = True
    return ScalingLaws(eps=eps, mu_series=mu_series, sigma_series=sigma_series,
                       delta_series=delta_series, delta_refused=refused)


def _sinhc_half(lam):
    """sinh(lam/2) / (lam/2), series-stabilized for small lam."""
    y = 0.5 * lam
    if y < 1e-4:
        y2 = y * y
        return 1.0 + y2 / 6.0 + y2 * y2 / 120.0
    return math.sinh(y) / y


def decay_rate(sigma):
    """Positive root of sinh(lam/2)/(lam/2) = sqrt(sigma) for sigma > 1.

    Bracketing plus bisection, then a Newton polish; the residual is
    kept below 1e-10 * sqrt(sigma).
    """
    if not sigma > 1.0:
        raise ValueError("decay rate needs sigma > 1 (the map tends to 1 at 0+)")
    target = math.sqrt(sigma)
    lo, hi = 0.0, 1.0
    while _sinhc_half(hi) < target:
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _sinhc_half(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    lam = 0.5 * (lo + hi)
    for _ in range(4):
        y = 0.5 * lam
        f = _sinhc_half(lam) - target
        df = 0.5 * (y * math.cosh(y) - math.sinh(y)) / (y * y) if y > 1e-4 \
            else 0.5 * (y / 3.0 + y**3 / 30.0)
        step = f / df
        lam -= step
        if abs(step) <= 1e-14 * lam:
            break
    if abs(_sinhc_half(lam) - target) > 1e-10 * target:
        raise RuntimeError(f"decay-rate root polish failed at sigma={sigma!r}")
    return lam
