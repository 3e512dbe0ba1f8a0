import numpy as np
import pytest

from fpuwaves import limit_ode, verify
from fpuwaves.grid_ops import UniformGrid
from fpuwaves.potential import SingularPotential
from fpuwaves.wave_solver import SolverConfig, solve

# deltas of the rescaled-order sweep: default list extended so the
# measured eps span comfortably exceeds one decade
EXTENDED_DELTAS = (0.2, 0.141, 0.1, 0.071, 0.05, 0.035, 0.025, 0.0177, 0.0125)


@pytest.fixture(scope="session")
def lp_cache():
    cache = {}

    def get(m, xmax=200.0, step=1e-3):
        key = (m, xmax, step)
        if key not in cache:
            cache[key] = limit_ode.integrate_limit(m, xmax=xmax, step=step)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def consts_cache(lp_cache):
    cache = {}

    def get(m):
        if m not in cache:
            cache[m] = limit_ode.asymptotic_constants(lp_cache(m))
        return cache[m]

    return get


@pytest.fixture(scope="session")
def wave_m2_d01():
    """The reference wave of the solver-invariant checks."""
    cfg = SolverConfig(pot=SingularPotential(2.0), delta=0.1,
                       grid=UniformGrid(k=64, L=8.0))
    return solve(cfg), cfg


@pytest.fixture(scope="session")
def sweep_m2(lp_cache, consts_cache):
    return verify.verification_sweep(2.0, lp=lp_cache(2.0), consts=consts_cache(2.0))


@pytest.fixture(scope="session")
def sweep_m3(lp_cache, consts_cache):
    return verify.verification_sweep(3.0, lp=lp_cache(3.0), consts=consts_cache(3.0))


@pytest.fixture(scope="session")
def sweep_m25(lp_cache, consts_cache):
    return verify.verification_sweep(2.5, deltas=EXTENDED_DELTAS,
                                     lp=lp_cache(2.5), consts=consts_cache(2.5))


@pytest.fixture(scope="session")
def weak_star_m4(lp_cache, consts_cache):
    """Richardson-extrapolated gaussian expansion reports along the m=4 sweep."""
    pot = SingularPotential(4.0)
    consts = consts_cache(4.0)
    gauss = verify.gaussian_test()
    warm = None
    reports, pairs = [], []
    for d in verify.WEAK_STAR_DELTAS:
        pair = verify.solve_pair(pot, d, verify.weak_star_k_for(d), warm=warm)
        warm = pair
        w = verify.extrapolate_pair(*pair)
        reports.append(verify.weak_star_check(w, consts, gauss))
        pairs.append(pair)
    return reports, pairs, consts
