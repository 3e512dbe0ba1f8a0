"""Uniform symmetric grids and the discrete machinery built on them.

Profiles are function samples on a grid whose spacing divides 1/2, so the
half-unit shifts appearing in the traveling-wave equations map nodes to
nodes.  Everything off-grid is treated as exactly zero (Dirichlet
truncation of the real line).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve as _convolve

from .potential import SingularPotential, SingularityError

# np.convolve-style direct summation below this kernel size, FFT above.
# Both are deterministic for fixed shapes; direct keeps the small default
# grids bit-reproducible against hand-written trapezoid sums.
_FFT_KERNEL_THRESHOLD = 257


@dataclass(frozen=True)
class UniformGrid:
    """Symmetric grid x_j = j*h, j = -N..N, with h = 1/(2k) and N = 2*k*L.

    k is the number of cells per half-unit interval, L the half-width of
    the domain.  L may be any positive multiple of 1/2 so N stays integral.
    """

    k: int
    L: float = 8.0
    h: float = field(init=False)
    n_half: int = field(init=False)
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ValueError(f"grid needs a positive integer k, got {self.k!r}")
        L = float(self.L)
        if L <= 0 or abs(2.0 * L - round(2.0 * L)) > 1e-12:
            raise ValueError(f"grid half-width must be a positive multiple of 1/2, got {self.L!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "h", 1.0 / (2.0 * self.k))
        object.__setattr__(self, "n_half", int(round(2.0 * self.k * L)))
        x = np.arange(-self.n_half, self.n_half + 1, dtype=float) * self.h
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def size(self):
        return 2 * self.n_half + 1

    @property
    def index0(self):
        """Array index of the node x = 0."""
        return self.n_half

    def index_of(self, xval):
        """Array index of a node; xval must lie on the grid."""
        j = round(xval / self.h)
        if abs(j * self.h - xval) > 1e-12 or abs(j) > self.n_half:
            raise ValueError(f"{xval!r} is not a node of this grid")
        return self.n_half + j


@dataclass(frozen=True)
class Profile:
    """Samples of a function on a UniformGrid; immutable after construction."""

    grid: UniformGrid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def at_zero(self):
        return float(self.values[self.grid.index0])

    def with_values(self, values, label=None):
        return Profile(self.grid, values, self.label if label is None else label)


def indicator_profile(grid, label="chi"):
    """Unit-window indicator sampled on the grid.

    Boundary nodes at x = +-1/2 carry the half value, matching the
    trapezoid weights of the window quadrature; interior nodes carry 1.
    """
    v = np.zeros(grid.size)
    k = grid.k
    j0 = grid.index0
    v[j0 - k:j0 + k + 1] = 1.0
    v[j0 - k] = 0.5
    v[j0 + k] = 0.5
    return Profile(grid, v, label)


def tent_profile(grid, label="tent"):
    """max(0, 1 - |x|) sampled on the grid."""
    return Profile(grid, np.maximum(0.0, 1.0 - np.abs(grid.x)), label)


def _window_weights(grid):
    w = np.full(2 * grid.k + 1, grid.h)
    w[0] = 0.5 * grid.h
    w[-1] = 0.5 * grid.h
    return w


def convolve_A(p):
    """Average of a profile over the sliding unit window [x-1/2, x+1/2].

    Trapezoid rule over the 2k+1 window nodes (the window endpoints are
    nodes because h divides 1/2); exact for piecewise-linear integrands
    with breakpoints on the grid.  Output on the same grid, zero-padded
    reads beyond the support.
    """
    w = _window_weights(p.grid)
    method = "direct" if w.size <= _FFT_KERNEL_THRESHOLD else "fft"
    out = _convolve(p.values, w, mode="same", method=method)
    return Profile(p.grid, out, f"A({p.label})" if p.label else "A")


def l2_norm(p):
    """Discrete L2 norm sqrt(h * sum v_j^2)."""
    v = p.values
    return math.sqrt(p.grid.h * float(np.dot(v, v)))


def sup_norm(p):
    return float(np.max(np.abs(p.values)))


def inner_product(p, q):
    """h-weighted inner product of two profiles on the same grid."""
    if p.grid != q.grid:
        raise ValueError("profiles live on different grids")
    return p.grid.h * float(np.dot(p.values, q.values))


def potential_energy(V, pot):
    """Discrete total bond energy h * sum phi((A V)(x_j)).

    Requires ||V||_2 < 1; raises SingularityError when the averaged
    profile touches the singularity guard.
    """
    if l2_norm(V) >= 1.0:
        raise ValueError("potential energy needs ||V||_2 < 1")
    av = convolve_A(V)
    return energy_of_average(av, pot)


def energy_of_average(av, pot):
    """Same as potential_energy but for an already-averaged profile."""
    # fsum: the energy-ascent check compares successive values to 1e-12,
    # so the summation itself must not contribute noise at that scale.
    return av.grid.h * math.fsum(pot.phi(av.values))


@dataclass(frozen=True)
class ConeReport:
    """Outcome of the shape check: even, unimodal, nonnegative."""

    nonnegative: bool
    even: bool
    unimodal: bool
    worst_negative: float
    worst_asymmetry: float
    worst_increase: float

    @property
    def ok(self):
        return self.nonnegative and self.even and self.unimodal


def cone_check(p, tol):
    """Check membership in the cone of even, unimodal, nonnegative profiles."""
    v = p.values
    worst_negative = max(0.0, -float(np.min(v)))
    worst_asymmetry = float(np.max(np.abs(v - v[::-1])))
    right = v[p.grid.index0:]
    increases = np.diff(right)
    worst_increase = max(0.0, float(np.max(increases, initial=0.0)))
    return ConeReport(
        nonnegative=worst_negative <= tol,
        even=worst_asymmetry <= tol,
        unimodal=worst_increase <= tol,
        worst_negative=worst_negative,
        worst_asymmetry=worst_asymmetry,
        worst_increase=worst_increase,
    )


def fmt17(x):
    """Format a float with 17 significant digits (bit-exact round trip)."""
    return format(float(x), ".17g")


def save_profile(path, p, m, delta):
    """Write a profile as two-column CSV with the one-line # header."""
    lines = [f"# {p.label},{fmt17(m)},{fmt17(delta)},{fmt17(p.grid.h)},{fmt17(p.grid.L)}"]
    for xj, vj in zip(p.grid.x, p.values):
        lines.append(f"{fmt17(xj)},{fmt17(vj)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_profile(path):
    """Read a profile written by save_profile; returns (Profile, meta dict)."""
    with open(path) as f:
        header = f.readline()
        if not header.startswith("# "):
            raise ValueError(f"{path}: missing profile header")
        label, m_s, delta_s, h_s, L_s = header[2:].strip().split(",")
        data = np.loadtxt(f, delimiter=",")
    h = float(h_s)
    L = float(L_s)
    k = int(round(0.5 / h))
    grid = UniformGrid(k=k, L=L)
    x, v = data[:, 0], data[:, 1]
    if x.size != grid.size or abs(x[0] + L) > 1e-12:
        raise ValueError(f"{path}: node set does not match header grid")
    meta = {"label": label, "m": float(m_s), "delta": float(delta_s), "h": h, "L": L}
    return Profile(grid, v, label), meta
