"""Linearized operator, low spectrum, and the GSS verdict.

The self-adjoint operator controlling the spectral half of the
classification is

    L = -lap + Z(x0 + eps y) - p |phi|^(p-1)

on the profile's grid with Dirichlet walls.  Its negative-eigenvalue
count combines with the slope sign: one negative eigenvalue plus a
negative slope gives stability, while an odd value of
n_negative - p(omega) gives instability (p(omega) = 1 when the slope is
negative, else 0).

The semiclassical structure pins the low spectrum: a single O(1)
negative eigenvalue, then N eigenvalues that leave zero like c_j eps^2
with

    c_j = (N/2) (||psi||^2 / ||grad psi||^2) a_j,

a_j the Hessian eigenvalues of Z at the concentration point.  The
gradient norm is evaluated through the integration-by-parts identity
||grad psi||^2 = integral psi^(p+1) - c ||psi||^2, which beats numerical
differentiation on the acceptance tolerances.

Eigenvalues near zero are counted by their sign (the shifts above are
genuine spectrum, not noise) but annotated with a tolerance band of
max(10 c_max eps^2, 100 h^2) inside which membership of the zero cluster
is ambiguous at the discretization order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import grids
from .elliptic import Profile, _z_on_grid
from .errors import EigSolverFailure
from .potentials import EffectiveZ, PotentialPair, ProblemParams
from .stability import SlopeReport


@dataclass(frozen=True)
class LinearizedOperator:
    grid: grids.Grid
    diagonal: np.ndarray  # Z(x0 + eps y) - p |phi|^(p-1) on interior nodes
    epsilon: float

    @property
    def symmetric(self) -> bool:
        return True

    def matrix(self) -> sp.csr_array:
        return (grids.neg_laplacian(self.grid) + sp.diags_array(self.diagonal)).tocsr()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix() @ vec


@dataclass(frozen=True)
class SpectrumReport:
    epsilon: float
    eigenvalues: tuple
    n_negative: int
    predicted_shifts: tuple
    hessian_negatives: int
    spectral_tol: float
    zero_cluster: tuple  # indices of eigenvalues inside the tolerance band
    count_consistent: bool
    gss: str = "inconclusive"  # "stable" | "unstable" | "inconclusive"
    p_omega: int | None = None


def assemble_L(
    profile: Profile, params: ProblemParams, pair: PotentialPair
) -> LinearizedOperator:
    """Discrete L on the profile's interior nodes.

    Line and box grids only: those are the geometries with a symmetric
    Laplacian, which the eigensolvers below require.
    """
    grid = profile.grid
    if grid.geometry == "radial":
        raise ValueError("assemble_L needs a line or box grid (symmetric stencil)")
    zvals = _z_on_grid(params, pair, grid, profile.center, profile.epsilon)
    phi = grids.extract_interior(grid, profile.values)
    diag = grids.extract_interior(grid, zvals) - params.p * np.abs(phi) ** (
        params.p - 1.0
    )
    return LinearizedOperator(grid=grid, diagonal=diag, epsilon=profile.epsilon)


def eig_low(op: LinearizedOperator, k: int) -> np.ndarray:
    """The k algebraically smallest eigenvalues, ascending.

    Line grids use the dense symmetric tridiagonal solver (machine
    precision); box grids use shift-inverted Lanczos with the shift
    below the diagonal minimum, where L - sigma is positive definite and
    the transformed ordering is exactly the algebraic one.
    """
    n = op.grid.n_interior()
    k = min(k, n - 1)
    if op.grid.geometry == "line":
        h = op.grid.h
        main = 2.0 / h**2 + op.diagonal
        off = np.full(n - 1, -1.0 / h**2)
        vals = eigh_tridiagonal(
            main, off, select="i", select_range=(0, k - 1), eigvals_only=True
        )
        return np.asarray(vals)
    a = op.matrix().tocsc()
    sigma = float(np.min(op.diagonal)) - 1.0
    # fixed-seed start vector: reproducible reports, generic against symmetry
    v0 = np.random.default_rng(1905).standard_normal(n)
    try:
        vals = eigsh(a, k=k, sigma=sigma, which="LM", v0=v0, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise EigSolverFailure(f"shift-inverted Lanczos stalled: {exc}") from exc
    except RuntimeError as exc:
        raise EigSolverFailure(f"shift-invert factorization failed: {exc}") from exc
    return np.sort(vals)


def predicted_shifts(limit: Profile, z: EffectiveZ) -> np.ndarray:
    """c_1..c_N: the eps^2 rates at which the zero eigenvalues move."""
    w = limit.grid.weights()
    psi = limit.values
    mass = float(np.sum(w * psi**2))
    pth = float(np.sum(w * np.abs(psi) ** (limit.p + 1.0)))
    grad2 = pth - z.z0 * mass  # by parts on the limit equation
    n = limit.grid.dimension
    a = np.asarray(z.hess_eigs)
    return 0.5 * n * (mass / grad2) * a


def build_spectrum_report(
    profile: Profile,
    params: ProblemParams,
    pair: PotentialPair,
    z: EffectiveZ,
    limit: Profile,
    k: int | None = None,
) -> SpectrumReport:
    if k is None:
        k = params.dimension + 3
    op = assemble_L(profile, params, pair)
    vals = eig_low(op, k)
    floor = 1e-10 * max(1.0, abs(float(vals[0])))
    n_neg = int(np.sum(vals < -floor))
    shifts = predicted_shifts(limit, z)
    c_max = float(np.max(np.abs(shifts))) if shifts.size else 0.0
    band = max(10.0 * c_max * profile.epsilon**2, 100.0 * op.grid.h**2)
    cluster = tuple(int(i) for i in np.nonzero(np.abs(vals) <= band)[0])
    return SpectrumReport(
        epsilon=profile.epsilon,
        eigenvalues=tuple(float(v) for v in vals),
        n_negative=n_neg,
        predicted_shifts=tuple(float(c) for c in shifts),
        hessian_negatives=z.hessian_negatives(),
        spectral_tol=band,
        zero_cluster=cluster,
        count_consistent=n_neg == z.hessian_negatives() + 1,
    )


def gss_classify(report: SpectrumReport, slope: SlopeReport) -> SpectrumReport:
    """Fill the verdict fields from the spectral count and the slope sign.

    The numeric slope sign is used when it clears its noise margin,
    otherwise the asymptotic prediction; with neither available the
    verdict is inconclusive.
    """
    sign = slope.slope_sign
    if sign == "indeterminate":
        sign = slope.predicted_sign
    if sign == "indeterminate":
        return replace(report, gss="inconclusive", p_omega=None)
    p_om = 1 if sign == "negative" else 0
    if report.n_negative == 1 and sign == "negative":
        verdict = "stable"
    elif (report.n_negative - p_om) % 2 == 1:
        verdict = "unstable"
    else:
        verdict = "inconclusive"
    return replace(report, gss=verdict, p_omega=p_om)
