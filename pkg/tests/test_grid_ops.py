import math

import numpy as np
import pytest
from scipy.integrate import quad

from fpuwaves.grid_ops import (ConeReport, Profile, UniformGrid, cone_check,
                               convolve_A, indicator_profile, inner_product,
                               l2_norm, load_profile, potential_energy,
                               save_profile, sup_norm, tent_profile)
from fpuwaves.potential import SingularPotential


def random_cone_profile(grid, rng):
    """Even, unimodal, nonnegative: sorted half mirrored around the center."""
    half = np.sort(rng.random(grid.n_half + 1))[::-1]
    v = np.concatenate([half[:0:-1], half])
    return Profile(grid, v, "cone")


def test_grid_geometry():
    g = UniformGrid(k=64, L=8.0)
    assert g.h * (2 * g.k) == 1.0          # h divides 1/2 exactly
    assert g.x[g.index0] == 0.0
    assert g.x[0] == -8.0 and g.x[-1] == 8.0
    assert g.index_of(0.5) - g.index0 == g.k
    g2 = UniformGrid(k=8, L=2.5)           # half-integer widths are legal
    assert g2.size == 2 * 40 + 1


def test_grid_validation():
    with pytest.raises(ValueError):
        UniformGrid(k=0, L=8.0)
    with pytest.raises(ValueError):
        UniformGrid(k=64, L=0.3)
    g = UniformGrid(k=4, L=2.0)
    with pytest.raises(ValueError):
        g.index_of(0.3)


def test_profile_validation():
    g = UniformGrid(k=4, L=2.0)
    with pytest.raises(ValueError):
        Profile(g, np.zeros(3))
    with pytest.raises(ValueError):
        Profile(g, np.full(g.size, np.nan))
    p = Profile(g, np.zeros(g.size))
    with pytest.raises(ValueError):
        p.values[0] = 1.0  # immutable


def test_indicator_maps_to_tent_exactly_off_kinks():
    """The window average of the indicator is the tent map at every node
    except the three kink images, where the half-sampled jump leaves the
    exact discrete values 1 - h/2 (center) and h/4 (feet)."""
    for k in (4, 16, 64):
        g = UniformGrid(k=k, L=4.0)
        achi = convolve_A(indicator_profile(g))
        tent = tent_profile(g)
        diff = achi.values - tent.values
        j0 = g.index0
        special = {j0: -g.h / 2.0, j0 - 2 * k: g.h / 4.0, j0 + 2 * k: g.h / 4.0}
        for j, dj in special.items():
            assert diff[j] == dj
        mask = np.ones(g.size, dtype=bool)
        mask[list(special)] = False
        assert np.all(diff[mask] == 0.0)


def test_convolve_linearity_and_zero():
    g = UniformGrid(k=16, L=4.0)
    rng = np.random.default_rng(1)
    p = Profile(g, rng.standard_normal(g.size))
    q = Profile(g, rng.standard_normal(g.size))
    zero = Profile(g, np.zeros(g.size))
    assert np.all(convolve_A(zero).values == 0.0)
    lhs = convolve_A(Profile(g, 2.0 * p.values - 3.0 * q.values))
    rhs = 2.0 * convolve_A(p).values - 3.0 * convolve_A(q).values
    np.testing.assert_allclose(lhs.values, rhs, rtol=0, atol=1e-13)


def test_convolve_exact_on_tent():
    # trapezoid integrates the piecewise-linear tent exactly: value 3/4 at 0
    g = UniformGrid(k=64, L=8.0)
    at = convolve_A(tent_profile(g))
    assert at.at_zero() == 0.75


def test_norms():
    g = UniformGrid(k=64, L=8.0)
    chi = indicator_profile(g)
    zero = Profile(g, np.zeros(g.size))
    assert l2_norm(zero) == 0.0 and sup_norm(zero) == 0.0
    assert abs(l2_norm(chi) - 1.0) <= g.h
    assert sup_norm(tent_profile(g)) == 1.0
    scaled = Profile(g, -2.5 * chi.values)
    assert math.isclose(l2_norm(scaled), 2.5 * l2_norm(chi), rel_tol=1e-15)


def test_operator_norm_estimates():
    # discrete analogues of ||Av||_2 <= ||v||_2 and ||Av||_inf <= ||v||_2
    rng = np.random.default_rng(2)
    g = UniformGrid(k=32, L=4.0)
    slack = 1.0 + 10.0 * g.h
    for _ in range(200):
        p = Profile(g, rng.standard_normal(g.size))
        ap = convolve_A(p)
        assert l2_norm(ap) <= slack * l2_norm(p)
        assert sup_norm(ap) <= slack * l2_norm(p)


def test_cone_checks():
    g = UniformGrid(k=32, L=4.0)
    assert cone_check(tent_profile(g), 0.0).ok
    skew = Profile(g, g.x.copy())
    rep = cone_check(skew, 1e-12)
    assert not rep.even and rep.worst_asymmetry > 1.0
    bump = Profile(g, np.where(np.abs(g.x) < 1, 1.0, 2.0))
    assert not cone_check(bump, 1e-12).unimodal


def test_convolution_preserves_cone():
    rng = np.random.default_rng(3)
    g = UniformGrid(k=16, L=4.0)
    for _ in range(100):
        p = random_cone_profile(g, rng)
        assert cone_check(convolve_A(p), 1e-12).ok


def test_composition_with_force_preserves_cone():
    rng = np.random.default_rng(4)
    pot = SingularPotential(2.0)
    g = UniformGrid(k=16, L=4.0)
    for _ in range(50):
        p = random_cone_profile(g, rng)
        q = Profile(g, pot.dphi(0.9 * p.values / max(sup_norm(p), 1.0)))
        assert cone_check(q, 1e-12).ok


def test_potential_energy_oracle():
    """Energy of the scaled indicator against an adaptive-quadrature oracle.

    The closed-form antiderivative and scipy's adaptive quadrature agree
    to 1e-8 (oracle validation); the discrete h-sum is consistent with
    the oracle at its O(h^2) kink error and improves under refinement.
    """
    m, delta = 2.0, 0.1
    pot = SingularPotential(m)
    a = 1.0 - delta

    # closed form of 2 * int_0^1 phi(a(1-x)) dx via the antiderivative
    def phi_anti(u):
        return ((1 - u) ** (1 - m) / (m - 1) - m * u * u / 2 - u) / (m * (m + 1))
    exact = 2.0 / a * (phi_anti(a) - phi_anti(0.0))
    oracle = 2.0 * quad(lambda x: pot.phi(a * (1.0 - x)), 0.0, 1.0,
                        epsabs=1e-12, epsrel=1e-12)[0]
    assert abs(exact - oracle) < 1e-8

    errs = []
    for k in (64, 128):
        g = UniformGrid(k=k, L=8.0)
        chi = indicator_profile(g)
        p = potential_energy(Profile(g, a * chi.values), pot)
        errs.append(abs(p - exact))
    assert errs[0] < 0.05
    assert errs[1] < 0.3 * errs[0]  # second-order consistency


def test_potential_energy_basics():
    pot = SingularPotential(2.0)
    g = UniformGrid(k=64, L=8.0)
    zero = Profile(g, np.zeros(g.size))
    assert potential_energy(zero, pot) == 0.0
    chi = indicator_profile(g)
    p9 = potential_energy(Profile(g, 0.9 * chi.values), pot)
    p8 = potential_energy(Profile(g, 0.8 * chi.values), pot)
    assert p9 > p8
    with pytest.raises(ValueError):
        potential_energy(Profile(g, 2.0 * chi.values), pot)


def test_profile_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    g = UniformGrid(k=16, L=2.0)
    p = Profile(g, rng.standard_normal(g.size) * 1e3, "V")
    path = tmp_path / "prof.csv"
    save_profile(path, p, m=2.5, delta=0.125)
    q, meta = load_profile(path)
    assert np.all(q.values == p.values)          # bit-exact
    assert np.all(q.grid.x == g.x)
    assert q.label == "V"
    assert meta["m"] == 2.5 and meta["delta"] == 0.125


def test_inner_product():
    g = UniformGrid(k=16, L=2.0)
    chi = indicator_profile(g)
    assert math.isclose(inner_product(chi, chi), l2_norm(chi) ** 2, rel_tol=1e-14)
    other = UniformGrid(k=8, L=2.0)
    with pytest.raises(ValueError):
        inner_product(chi, indicator_profile(other))
