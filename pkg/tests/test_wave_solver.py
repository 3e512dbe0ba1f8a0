import math

import numpy as np
import pytest

from fpuwaves.grid_ops import (Profile, UniformGrid, convolve_A,
                               indicator_profile, inner_product, l2_norm)
from fpuwaves.potential import SingularPotential
from fpuwaves.wave_solver import (DegenerateInputError, NonConvergenceError,
                                  SolverConfig, improvement_step,
                                  initial_profile, load_wave, regrid,
                                  residual_report, save_wave, solve,
                                  solve_family, warm_start)


def test_config_validation():
    pot = SingularPotential(2.0)
    g = UniformGrid(k=16, L=4.0)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            SolverConfig(pot=pot, delta=bad, grid=g)
    with pytest.raises(ValueError):
        SolverConfig(pot=pot, delta=0.1, grid=g, tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(pot=pot, delta=0.1, grid=g, max_iter=0)


def test_norm_restoration():
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=32, L=8.0))
    chi = indicator_profile(cfg.grid)
    weak = Profile(cfg.grid, 0.5 * (1.0 - cfg.delta) * chi.values)
    out = improvement_step(weak, cfg)
    assert math.isclose(l2_norm(out), 1.0 - cfg.delta, rel_tol=1e-14)


def test_improvement_step_rejects_large_norm():
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=32, L=8.0))
    chi = indicator_profile(cfg.grid)
    with pytest.raises(ValueError):
        improvement_step(Profile(cfg.grid, 0.99 * chi.values), cfg)


def test_degenerate_input():
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=32, L=8.0))
    zero = Profile(cfg.grid, np.zeros(cfg.grid.size))
    with pytest.raises(DegenerateInputError):
        improvement_step(zero, cfg)


def test_fixed_point_and_diagnostics(wave_m2_d01):
    w, cfg = wave_m2_d01
    step = improvement_step(w.V, cfg)
    dist = math.sqrt(cfg.grid.h * float(np.sum((step.values - w.V.values) ** 2)))
    assert dist <= cfg.tol

    assert abs(l2_norm(w.V) - (1.0 - w.delta)) <= 10 * cfg.tol
    assert w.diag["norm_dev_max"] <= 1e-12
    assert w.diag["cone_violation_max"] <= 1e-8
    assert np.all(np.diff(w.diag["p_trace"]) >= -1e-12)
    assert w.residual <= 100.0 * w.sigma * cfg.tol
    assert 0.0 < w.eps < 1.0
    assert w.eps >= w.delta - 2.0 * cfg.grid.h
    assert np.all(w.R.values >= -1e-12) and np.all(w.R.values < 1.0)
    assert math.isclose(w.mu, math.sqrt(w.sigma * w.eps ** (w.m + 2.0)), rel_tol=1e-15)


def test_virial_and_inner_product_identities(wave_m2_d01):
    w, cfg = wave_m2_d01
    pot = cfg.pot
    lhs = w.sigma * (1.0 - w.delta) ** 2
    rhs = inner_product(w.R.with_values(pot.dphi(w.R.values)), w.R)
    assert abs(lhs - rhs) <= 10 * cfg.tol * abs(rhs)
    chi = indicator_profile(cfg.grid)
    assert abs(w.R.at_zero() - inner_product(w.V, chi)) <= 2.0 * cfg.grid.h


def test_localization_identity():
    # ||V - chi||^2 equals the norm expansion exactly in the discrete
    # inner product, and is bounded by 4 eps for small delta
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.02, grid=UniformGrid(k=64, L=8.0))
    w = solve(cfg)
    chi = indicator_profile(cfg.grid)
    dist2 = l2_norm(Profile(cfg.grid, w.V.values - chi.values)) ** 2
    expansion = (l2_norm(w.V) ** 2 + l2_norm(chi) ** 2
                 - 2.0 * inner_product(w.V, chi))
    assert abs(dist2 - expansion) <= 1e-12
    assert dist2 <= 4.0 * w.eps


def test_perturbed_wave_has_larger_residual(wave_m2_d01):
    w, cfg = wave_m2_d01
    chi = indicator_profile(cfg.grid)
    vp = Profile(cfg.grid, w.V.values + 0.01 * chi.values)
    av = convolve_A(vp)
    force = convolve_A(av.with_values(cfg.pot.dphi(av.values)))
    res = math.sqrt(cfg.grid.h * float(np.sum((w.sigma * vp.values - force.values) ** 2)))
    assert res > 10.0 * w.residual


def test_residual_report_refinement():
    # the differentiated-form defect is second order in h
    pot = SingularPotential(2.0)
    sups = []
    for k in (64, 128):
        w = solve(SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=k, L=8.0)))
        l2, diff_sup = residual_report(w)
        assert l2 <= 100.0 * w.sigma * 1e-10
        sups.append(diff_sup)
    assert sups[1] <= 0.6 * sups[0]


def test_non_convergence_error():
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=32, L=8.0),
                       max_iter=3)
    with pytest.raises(NonConvergenceError) as err:
        solve(cfg)
    assert err.value.last_distance > 0.0


def test_initial_profile_norm():
    pot = SingularPotential(2.0)
    cfg = SolverConfig(pot=pot, delta=0.1, grid=UniformGrid(k=64, L=8.0))
    v0 = initial_profile(cfg)
    # the scaled indicator sits slightly inside the sphere
    assert l2_norm(v0) <= 1.0 - cfg.delta
    assert l2_norm(v0) >= (1.0 - cfg.delta) * (1.0 - cfg.grid.h)


def test_warm_start_and_regrid():
    pot = SingularPotential(2.0)
    g1 = UniformGrid(k=32, L=8.0)
    w = solve(SolverConfig(pot=pot, delta=0.1, grid=g1))
    cfg2 = SolverConfig(pot=pot, delta=0.08, grid=UniformGrid(k=64, L=8.0))
    v0 = warm_start(w, cfg2)
    assert math.isclose(l2_norm(v0), 1.0 - 0.08, rel_tol=1e-14)
    w2 = solve(cfg2, v0=v0)
    assert w2.iterations < 30
    fine = regrid(w.V, cfg2.grid)
    np.testing.assert_allclose(fine.values[::2], w.V.values, rtol=0, atol=5e-4)


def test_solve_family_continuation_and_refinement():
    pot = SingularPotential(2.5)
    waves = solve_family(pot, [0.05, 0.2, 0.1], UniformGrid(k=32, L=8.0))
    deltas = [w.delta for w in waves]
    assert deltas == [0.2, 0.1, 0.05]
    for w in waves:
        assert w.mu > 2.5 * w.grid.h  # refinement rule enforced


def test_wave_serialization_roundtrip(tmp_path, wave_m2_d01):
    w, _ = wave_m2_d01
    save_wave(tmp_path / "w", w)
    back = load_wave(tmp_path / "w")
    assert np.all(back.V.values == w.V.values)
    assert np.all(back.R.values == w.R.values)
    for attr in ("sigma", "delta", "m", "eps", "mu", "p", "residual"):
        assert getattr(back, attr) == getattr(w, attr)
    assert back.iterations == w.iterations
