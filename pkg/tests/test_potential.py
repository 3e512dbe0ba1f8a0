import math

import numpy as np
import pytest

from fpuwaves.potential import SINGULARITY_GUARD, SingularPotential, SingularityError

M_SET = [1.5, 2.0, 2.5, 3.0, 4.0]


def test_exponent_validation():
    for bad in (1.0, 0.5, -2.0):
        with pytest.raises(ValueError):
            SingularPotential(bad)


def test_normalization_at_zero():
    for m in M_SET:
        pot = SingularPotential(m)
        assert pot.phi(0.0) == 0.0
        assert pot.dphi(0.0) == 0.0
        assert pot.ddphi(0.0) == 1.0


def test_closed_form_values_m2():
    pot = SingularPotential(2.0)
    assert math.isclose(pot.phi(0.5), 1.0 / 3.0, rel_tol=1e-14)
    assert math.isclose(pot.dphi(0.5), 7.0 / 3.0, rel_tol=1e-14)
    assert math.isclose(pot.ddphi(0.5), 16.0, rel_tol=1e-14)


def test_blowup_near_one():
    for m in (1.5, 2.0, 3.0):
        pot = SingularPotential(m)
        assert pot.phi(1.0 - 1e-6) > 10.0 ** (6 * m) / (2 * m * (m + 1))


def test_singularity_guard():
    pot = SingularPotential(2.0)
    for bad in (1.0 - SINGULARITY_GUARD, 1.0, 1.2):
        for fn in (pot.phi, pot.dphi, pot.ddphi):
            with pytest.raises(SingularityError):
                fn(bad)
    # array inputs with one bad entry must also raise
    with pytest.raises(SingularityError):
        pot.phi(np.array([0.0, 0.5, 1.0]))


def test_negative_arguments_allowed():
    # the potential is defined for all r < 1 (stretched bonds)
    pot = SingularPotential(2.0)
    assert pot.phi(-3.0) > 0.0
    assert pot.dphi(-3.0) < 0.0
    assert pot.ddphi(-3.0) > 0.0


def test_finite_difference_consistency():
    rng = np.random.default_rng(0)
    e = 1e-6
    for m in M_SET:
        pot = SingularPotential(m)
        r = rng.uniform(0.0, 0.99, size=1000)
        fd1 = (pot.phi(r + e) - pot.phi(r - e)) / (2 * e)
        fd2 = (pot.dphi(r + e) - pot.dphi(r - e)) / (2 * e)
        assert np.all(np.abs(fd1 - pot.dphi(r)) <= 1e-6 * np.maximum(np.abs(pot.dphi(r)), 1e-12))
        assert np.all(np.abs(fd2 - pot.ddphi(r)) <= 1e-6 * np.abs(pot.ddphi(r)))


def test_monotonicity_and_convexity():
    r = np.linspace(0.0, 0.99, 500)
    for m in M_SET:
        pot = SingularPotential(m)
        assert np.all(pot.dphi(r[1:]) > 0.0)
        assert np.all(pot.ddphi(r) >= 1.0)


def test_psi_endpoints_and_value():
    for m in M_SET:
        pot = SingularPotential(m)
        assert pot.psi(0.0) == 1.0 / (m + 1.0)
        assert pot.psi(1.0) == 0.0
    assert math.isclose(SingularPotential(3.0).psi(0.5), 15.0 / 64.0, rel_tol=1e-14)


def test_psi_matches_raw_product():
    # away from s = 0 the defining product is well conditioned
    for m in M_SET:
        pot = SingularPotential(m)
        for s in (0.1, 0.5, 0.9):
            raw = pot.dphi(1.0 - s) * s ** (m + 1.0)
            assert math.isclose(pot.psi(s), raw, rel_tol=1e-12)


def test_psi_continuous_at_zero():
    for m in M_SET:
        pot = SingularPotential(m)
        assert abs(pot.psi(1e-8) - 1.0 / (m + 1.0)) < 1e-7


def test_psi_domain():
    pot = SingularPotential(2.0)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            pot.psi(bad)


def test_vectorized_evaluation():
    pot = SingularPotential(2.0)
    r = np.array([0.0, 0.25, 0.5])
    out = pot.phi(r)
    assert isinstance(out, np.ndarray) and out.shape == r.shape
    assert isinstance(pot.phi(0.5), float)
