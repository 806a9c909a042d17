import numpy as np
import pytest
from dataclasses import replace

from kgstab.elliptic import continue_profile, solve_limit_ground_state
from kgstab.grids import Grid
from kgstab.potentials import (
    GaussianTerm,
    PotentialSpec,
    ProblemParams,
    find_critical_point,
    resolve_potentials,
)
from kgstab.spectrum import (
    assemble_L,
    build_spectrum_report,
    eig_low,
    gss_classify,
    predicted_shifts,
)
from kgstab.stability import build_slope_report


def test_assemble_rejects_radial(s1):
    params, pair, z, grid, limit = s1
    rg = Grid(2, "radial", 20.0, 501)
    prof = solve_limit_ground_state(0.75, 3.0, rg)
    with pytest.raises(ValueError):
        assemble_L(prof, replace(params, dimension=2), pair)


def test_operator_is_symmetric(s1, s1_profile):
    params, pair, z, grid, limit = s1
    op = assemble_L(s1_profile, params, pair)
    a = op.matrix()
    assert abs(a - a.T).max() < 1e-12


def test_limit_spectrum_poschl_teller(s1):
    # at epsilon = 0 the linearization around psi_c has lambda0 = -3c exactly
    params, pair, z, grid, limit = s1
    prof0 = continue_profile(limit, replace(params, epsilon=0.0), pair, z, grid=grid)
    op = assemble_L(prof0, replace(params, epsilon=0.0), pair)
    vals = eig_low(op, 4)
    c = z.z0
    assert vals[0] == pytest.approx(-3.0 * c, rel=1e-4)
    assert abs(vals[1]) < 1e-6  # translation zero mode
    assert vals[2] >= 0.9 * c  # continuum edge approximation


def test_predicted_shift_hand_value(s1):
    params, pair, z, grid, limit = s1
    shifts = predicted_shifts(limit, z)
    # N=1, Z''(0) = 0.1, c = 0.14: (1/2) (mass/grad2) a1 = 15/14
    assert shifts[0] == pytest.approx(15.0 / 14.0, rel=1e-4)


def test_eig_low_free_operator():
    # -u'' + c u on the interval: eigenvalues c + (pi k / 2L)^2
    g = Grid(1, "line", 10.0, 2001)
    params = ProblemParams(1, 3.0, 1.0, 0.9, 0.05)
    pair = resolve_potentials(params, None, None)
    prof = solve_limit_ground_state(1.0, 3.0, Grid(1, "line", 15.0, 1501), method="fd")
    # zero profile on the target grid: plain Schrodinger operator with Z = m - omega^2
    from kgstab.elliptic import Profile

    zero = Profile(
        grid=g,
        values=np.zeros(g.n),
        omega=params.omega,
        epsilon=0.05,
        p=3.0,
        center=(0.0,),
        residual=0.0,
        peak=(0.0,),
    )
    op = assemble_L(zero, params, pair)
    vals = eig_low(op, 3)
    c = 1.0 - 0.81
    for k, v in enumerate(vals, start=1):
        assert v == pytest.approx(c + (np.pi * k / 20.0) ** 2, rel=1e-4)


def test_spectrum_report_s1(s1, s1_profile):
    params, pair, z, grid, limit = s1
    rep = build_spectrum_report(s1_profile, params, pair, z, limit)
    assert rep.n_negative == 1
    assert rep.hessian_negatives == 0
    assert rep.count_consistent
    assert len(rep.eigenvalues) == 4
    # the shifted translation mode sits inside the annotation band
    assert 1 in rep.zero_cluster
    lam1 = rep.eigenvalues[1] / params.epsilon**2
    assert lam1 == pytest.approx(rep.predicted_shifts[0], rel=0.1)
    assert rep.gss == "inconclusive"  # not yet classified


def test_gss_classification_branches(s1, s1_profile):
    params, pair, z, grid, limit = s1
    spec = build_spectrum_report(s1_profile, params, pair, z, limit)
    slope = build_slope_report(s1_profile, params, pair, z, limit)
    out = gss_classify(spec, slope)
    assert out.gss == "stable"
    assert out.p_omega == 1

    # unstable branch: omega = 0.3 has positive slope, n(L) = 1, odd mismatch
    params2 = replace(params, omega=0.3)
    z2 = find_critical_point(params2, pair, (0.0,))
    limit2 = solve_limit_ground_state(z2.z0, 3.0, grid, method="fd")
    prof2 = continue_profile(limit2, params2, pair, z2, grid=grid)
    spec2 = build_spectrum_report(prof2, params2, pair, z2, limit2)
    slope2 = build_slope_report(prof2, params2, pair, z2, limit2)
    out2 = gss_classify(spec2, slope2)
    assert out2.gss == "unstable"
    assert out2.p_omega == 0


def test_gss_uses_predicted_sign_when_numeric_missing(s1, s1_profile):
    params, pair, z, grid, limit = s1
    spec = build_spectrum_report(s1_profile, params, pair, z, limit)
    slope = build_slope_report(s1_profile, params, pair, z, limit, with_numeric=False)
    out = gss_classify(spec, slope)
    assert out.gss == "stable"


def test_shift_convergence_down_epsilon(s1):
    params, pair, z, grid, limit = s1
    errs = []
    for eps in (0.1, 0.05):
        pe = replace(params, epsilon=eps)
        prof = continue_profile(limit, pe, pair, z, grid=grid)
        rep = build_spectrum_report(prof, pe, pair, z, limit)
        lam1 = rep.eigenvalues[1] / eps**2
        errs.append(abs(lam1 / rep.predicted_shifts[0] - 1.0))
    assert errs[1] < errs[0]
