import numpy as np
import pytest

from kgstab.elliptic import continue_profile, solve_limit_ground_state
from kgstab.grids import Grid
from kgstab.potentials import (
    GaussianTerm,
    PotentialSpec,
    ProblemParams,
    find_critical_point,
    resolve_potentials,
)

# Shared benchmark scenario: 1d cubic problem with a single gaussian bump
# in W, omega deep in the stable range.  Reused across the slope and
# spectrum tests so the continuation only runs once per session.


@pytest.fixture(scope="session")
def s1():
    params = ProblemParams(dimension=1, p=3.0, m=1.0, omega=0.9, epsilon=0.05)
    spec_w = PotentialSpec(1, (GaussianTerm(0.05, (0.0,), 1.0),))
    pair = resolve_potentials(params, None, spec_w)
    z = find_critical_point(params, pair, (0.0,))
    grid = Grid(1, "line", 64.0, 6401)
    limit = solve_limit_ground_state(z.z0, params.p, grid, method="fd")
    return params, pair, z, grid, limit


@pytest.fixture(scope="session")
def s1_profile(s1):
    params, pair, z, grid, limit = s1
    return continue_profile(limit, params, pair, z, grid=grid)


@pytest.fixture(scope="session")
def free_limit():
    # V = W = 0 with c = 1: the closed-form sech state
    grid = Grid(1, "line", 15.0, 3001)
    return solve_limit_ground_state(1.0, 3.0, grid, method="fd")


def sech_exact(c, y):
    return np.sqrt(2.0 * c) / np.cosh(np.sqrt(c) * y)
