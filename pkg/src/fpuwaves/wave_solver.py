"""Fixed-point computation of solitary waves on the normalization sphere.

One step of the iteration averages the bond forces of the current guess
and renormalizes back to the sphere ||V||_2 = 1 - delta.  The step never
decreases the discrete bond energy and preserves the cone of even,
unimodal, nonnegative profiles, so the iteration is monitored against
both properties and aborts loudly if discretization ever breaks them.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .grid_ops import (Profile, UniformGrid, cone_check, convolve_A,
                       energy_of_average, fmt17, indicator_profile, l2_norm,
                       load_profile, save_profile)
from .potential import SingularPotential

CONE_TOL = 1e-8
ASCENT_SLACK = 1e-12
NORM_SLACK = 1e-12
RESIDUAL_SAFETY = 100.0


class NonConvergenceError(RuntimeError):
    """Iteration cap reached; .last_distance holds the final update size."""

    def __init__(self, message, last_distance):
        super().__init__(message)
        self.last_distance = last_distance


class ConeViolationError(RuntimeError):
    """An iterate left the cone beyond tolerance (discretization bug)."""


class DegenerateInputError(ValueError):
    """The averaged force field vanished identically."""


class InvariantViolation(RuntimeError):
    """A converged wave failed one of its contract checks."""


@dataclass(frozen=True)
class SolverConfig:
    pot: SingularPotential
    delta: float
    grid: UniformGrid
    tol: float = 1e-10
    max_iter: int = 20000

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter!r}")


@dataclass(frozen=True)
class SolitaryWave:
    """A converged wave with its derived diagnostics.

    diag carries per-run traces (bond energy per iterate, worst norm and
    cone deviations, last update distance); it is not serialized.
    """

    V: Profile
    R: Profile
    sigma: float
    delta: float
    m: float
    eps: float
    mu: float
    p: float
    residual: float
    iterations: int
    diag: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def grid(self):
        return self.V.grid


def improvement_step(V, cfg):
    """One normalized ascent step; returns the new profile on the sphere."""
    target = 1.0 - cfg.delta
    if l2_norm(V) > target + cfg.tol:
        raise ValueError("input norm exceeds the sphere radius beyond tolerance")
    av = convolve_A(V)
    force = convolve_A(av.with_values(cfg.pot.dphi(av.values), "force"))
    norm = l2_norm(force)
    if norm < 1e-300:
        raise DegenerateInputError("averaged force field vanished; degenerate input")
    return force.with_values(force.values * (target / norm), "V")


def initial_profile(cfg):
    """Scaled window indicator, the canonical starting point."""
    chi = indicator_profile(cfg.grid)
    v = (1.0 - cfg.delta) * chi.values
    # evenness is enforced on initial data only, never on iterates
    v = 0.5 * (v + v[::-1])
    return Profile(cfg.grid, v, "V")


def solve(cfg, v0=None):
    """Iterate the improvement step to a fixed point.

    Stops when the L2 distance between successive iterates drops below
    cfg.tol; raises NonConvergenceError at the iteration cap.  The
    traveling-wave residual is recomputed independently at the end.
    """
    pot, grid, target = cfg.pot, cfg.grid, 1.0 - cfg.delta
    V = initial_profile(cfg) if v0 is None else v0
    av = convolve_A(V)
    p_trace = [energy_of_average(av, pot)]
    norm_dev_max = 0.0
    cone_worst = 0.0
    distance = math.inf
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        force = convolve_A(av.with_values(pot.dphi(av.values)))
        norm = l2_norm(force)
        if norm < 1e-300:
            raise DegenerateInputError("averaged force field vanished; degenerate input")
        V_next = force.with_values(force.values * (target / norm), "V")

        av = convolve_A(V_next)
        p_trace.append(energy_of_average(av, pot))
        # slack scales with |P|: near the fixed point the true ascent per
        # step drops below the roundoff of summing the bond energies
        if p_trace[-1] < p_trace[-2] - ASCENT_SLACK * max(1.0, abs(p_trace[-2])):
            raise InvariantViolation(
                f"bond energy decreased at iteration {iterations}: "
                f"{p_trace[-2]!r} -> {p_trace[-1]!r}")
        norm_dev_max = max(norm_dev_max, abs(l2_norm(V_next) - target))
        for prof in (V_next, av):
            rep = cone_check(prof, CONE_TOL)
            worst = max(rep.worst_negative, rep.worst_asymmetry, rep.worst_increase)
            cone_worst = max(cone_worst, worst)
            if not rep.ok:
                raise ConeViolationError(
                    f"iterate left the cone at iteration {iterations}: {rep}")

        distance = math.sqrt(grid.h * float(np.sum((V_next.values - V.values) ** 2)))
        V = V_next
        if distance < cfg.tol:
            converged = True
            break

    if not converged:
        raise NonConvergenceError(
            f"no fixed point after {cfg.max_iter} iterations "
            f"(last update {distance:.3e}, tol {cfg.tol:.3e})", distance)

    # final diagnostics from the converged iterate
    R = av.with_values(av.values, "R")
    force = convolve_A(av.with_values(pot.dphi(av.values)))
    sigma = l2_norm(force) / target
    eps = 1.0 - R.at_zero()
    mu = math.sqrt(sigma * eps ** (pot.m + 2.0))
    p = energy_of_average(av, pot)
    residual = math.sqrt(grid.h * float(np.sum((sigma * V.values - force.values) ** 2)))

    wave = SolitaryWave(
        V=V, R=R, sigma=sigma, delta=cfg.delta, m=pot.m, eps=eps, mu=mu,
        p=p, residual=residual, iterations=iterations,
        diag={
            "p_trace": np.asarray(p_trace),
            "norm_dev_max": norm_dev_max,
            "cone_violation_max": cone_worst,
            "last_distance": distance,
        },
    )
    _validate_wave(wave, cfg)
    return wave


def _validate_wave(w, cfg):
    problems = []
    target = 1.0 - cfg.delta
    if abs(l2_norm(w.V) - target) > 10.0 * cfg.tol:
        problems.append("norm constraint broken")
    rv = w.R.values
    if rv.min() < -CONE_TOL or rv.max() >= 1.0:
        problems.append("distance profile left [0, 1)")
    if not (0.0 < w.eps < 1.0):
        problems.append(f"eps out of range: {w.eps!r}")
    if w.eps < w.delta - 2.0 * w.grid.h:
        problems.append(f"eps {w.eps!r} below delta {w.delta!r} - 2h")
    if not cone_check(w.V, CONE_TOL).ok or not cone_check(w.R, CONE_TOL).ok:
        problems.append("converged profiles left the cone")
    if w.residual > RESIDUAL_SAFETY * w.sigma * cfg.tol:
        problems.append(f"residual {w.residual!r} above contract")
    if problems:
        raise InvariantViolation("; ".join(problems))


def residual_report(w):
    """Independent residual check of both forms of the wave equations.

    Returns (l2, diff_sup): the L2 norm of the integral-form defect and
    the sup of the two differentiated equations evaluated with centered
    differences at interior nodes.
    """
    pot = SingularPotential(w.m)
    grid = w.grid
    h, k, n = grid.h, grid.k, grid.n_half
    V, R = w.V.values, w.R.values

    av = convolve_A(w.V)
    force = convolve_A(av.with_values(pot.dphi(av.values)))
    l2 = math.sqrt(h * float(np.sum((w.sigma * V - force.values) ** 2)))

    dR = (R[2:] - R[:-2]) / (2.0 * h)
    dV = (V[2:] - V[:-2]) / (2.0 * h)
    dphiR = pot.dphi(R)
    # interior indices where both x +- 1/2 and the derivative stencil exist
    j = np.arange(1 + k, 2 * n - k)
    res1 = dR[j - 1] - (V[j + k] - V[j - k])
    res2 = w.sigma * dV[j - 1] - (dphiR[j + k] - dphiR[j - k])
    diff_sup = max(float(np.max(np.abs(res1))), float(np.max(np.abs(res2))))
    return l2, diff_sup


def regrid(profile, new_grid):
    """Cubic-spline transfer onto another grid, kept inside the cone."""
    spl = CubicSpline(profile.grid.x, profile.values, bc_type="natural")
    inside = np.abs(new_grid.x) <= profile.grid.L
    v = np.where(inside, spl(np.clip(new_grid.x, -profile.grid.L, profile.grid.L)), 0.0)
    v = np.maximum(v, 0.0)
    v = 0.5 * (v + v[::-1])
    return Profile(new_grid, v, profile.label)


def warm_start(w, cfg):
    """Previous wave rescaled to the new sphere radius (and grid if needed)."""
    prof = w.V if w.grid == cfg.grid else regrid(w.V, cfg.grid)
    scale = (1.0 - cfg.delta) / l2_norm(prof)
    return prof.with_values(prof.values * scale, "V")


def solve_family(pot, deltas, grid, tol=1e-10, max_iter=20000,
                 min_cells_per_mu=2.5, k_max=4096, k_for_delta=None):
    """Solve a decreasing family of deltas with continuation.

    Each solve warm-starts from the previous wave rescaled to the new
    norm.  When the intrinsic length scale mu of a solved wave is not
    resolved by at least min_cells_per_mu grid cells, k is doubled (warm
    starting from the interpolated wave) and the solve repeated.
    k_for_delta optionally pins a minimum k per delta, e.g. from an
    accuracy schedule.
    """
    waves = []
    prev = None
    current = grid
    for delta in sorted(deltas, reverse=True):
        if k_for_delta is not None:
            k_need = min(k_max, int(k_for_delta(delta)))
            if k_need > current.k:
                current = UniformGrid(k=k_need, L=grid.L)
        while True:
            cfg = SolverConfig(pot=pot, delta=delta, grid=current,
                               tol=tol, max_iter=max_iter)
            v0 = warm_start(prev, cfg) if prev is not None else None
            wave = solve(cfg, v0=v0)
            if wave.mu > min_cells_per_mu * current.h or current.k >= k_max:
                break
            current = UniformGrid(k=2 * current.k, L=grid.L)
            prev = wave
        waves.append(wave)
        prev = wave
    return waves


# ---------------------------------------------------------------------------
# Serialization: directory with V.csv, R.csv and a flat meta.json.


def save_wave(dirpath, w):
    os.makedirs(dirpath, exist_ok=True)
    save_profile(os.path.join(dirpath, "V.csv"), w.V, w.m, w.delta)
    save_profile(os.path.join(dirpath, "R.csv"), w.R, w.m, w.delta)
    meta_items = [
        ("m", fmt17(w.m)), ("delta", fmt17(w.delta)), ("sigma", fmt17(w.sigma)),
        ("eps", fmt17(w.eps)), ("mu", fmt17(w.mu)), ("p", fmt17(w.p)),
        ("residual", fmt17(w.residual)), ("iterations", str(w.iterations)),
        ("h", fmt17(w.grid.h)), ("L", fmt17(w.grid.L)),
    ]
    body = ",\n".join(f'  "{key}": {val}' for key, val in meta_items)
    with open(os.path.join(dirpath, "meta.json"), "w") as f:
        f.write("{\n" + body + "\n}\n")


def load_wave(dirpath):
    with open(os.path.join(dirpath, "meta.json")) as f:
        meta = json.load(f)
    V, _ = load_profile(os.path.join(dirpath, "V.csv"))
    R, _ = load_profile(os.path.join(dirpath, "R.csv"))
    return SolitaryWave(
        V=V.with_values(V.values, "V"), R=R.with_values(R.values, "R"),
        sigma=meta["sigma"], delta=meta["delta"], m=meta["m"], eps=meta["eps"],
        mu=meta["mu"], p=meta["p"], residual=meta["residual"],
        iterations=int(meta["iterations"]),
    )
