"""Ground-state profiles: the limit problem, continuation in epsilon,
and the two derivative fields used by the stability analysis.

Limit problem (constant coefficient c = Z(x0) > 0):

    -lap psi + c psi = psi^p,   psi > 0, psi -> 0

solved by a stabilized fixed-point iteration (integral-normalized, the
classic globally convergent scheme for this equation) followed by a
Newton polish. In one dimension the closed form

    psi(y) = ((p+1) c / 2)^(1/(p-1)) sech(sqrt(c)(p-1) y / 2)^(2/(p-1))

seeds the iteration and doubles as an oracle in the tests.

Semiclassical problem at epsilon > 0 (coordinates recentered at x0):

    -lap phi + Z(x0 + eps y) phi = phi^p

continued from the limit state with geometric steps in epsilon and
Newton at each step. The recentering point is chosen once per scenario
and kept fixed while omega varies, so frequency derivatives are taken
on a fixed coordinate frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.fft
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import grids
from .errors import GridTooSmall, LostPositivity, NoConvergence, SingularOperator
from .grids import Grid
from .potentials import EffectiveZ, PotentialPair, ProblemParams, eval_Z

DEFAULT_TOL = 1e-12
BOUNDARY_DECAY_REL = 1e-5


@dataclass
class Profile:
    """A solved stationary profile on its grid.

    `values` has the grid's full shape with zero boundary entries.
    `center` is the x-point the grid is laid around (x = center + eps*y)
    and `peak` is the argmax location in y, the numerical stand-in for
    the concentration shift.
    """

    grid: Grid
    values: np.ndarray
    omega: float
    epsilon: float
    p: float
    center: tuple
    residual: float
    peak: tuple

    def mass(self) -> float:
        """L^2 norm squared over R^N (in y coordinates)."""
        w = self.grid.weights()
        return float(np.sum(w * self.values**2))

    def sample_points(self) -> np.ndarray:
        """Physical x coordinates of the nodes, shape (*shape, N)."""
        pts = self.grid.points()
        return np.asarray(self.center) + self.epsilon * pts


def sech_ground_state(c: float, p: float, y: np.ndarray) -> np.ndarray:
    """Closed-form 1d ground state of -psi'' + c psi = psi^p."""
    amp = ((p + 1.0) * c / 2.0) ** (1.0 / (p - 1.0))
    arg = 0.5 * np.sqrt(c) * (p - 1.0) * y
    return amp * np.cosh(arg) ** (-2.0 / (p - 1.0))


def _nonlin(psi: np.ndarray, p: float) -> np.ndarray:
    # sign-safe power, keeps odd symmetry for non-integer p
    return np.abs(psi) ** (p - 1.0) * psi


def _decay_check(grid: Grid, values: np.ndarray):
    peak = float(np.abs(values).max())
    if peak == 0.0:
        raise NoConvergence("solver collapsed to zero")
    if grid.geometry == "radial":
        edge = float(np.abs(values[-2]))
    elif grid.geometry == "line":
        edge = float(max(np.abs(values[1]), np.abs(values[-2])))
    else:
        inner = values[(slice(1, -1),) * grid.dimension]
        faces = []
        for a in range(grid.dimension):
            faces.append(np.abs(np.take(inner, 0, axis=a)).max())
            faces.append(np.abs(np.take(inner, -1, axis=a)).max())
        edge = float(max(faces))
    if edge > BOUNDARY_DECAY_REL * peak:
        raise GridTooSmall(
            f"boundary amplitude {edge:.2e} vs peak {peak:.2e}: domain too small"
        )


def _peak_of(grid: Grid, values: np.ndarray) -> tuple:
    idx = np.unravel_index(int(np.argmax(np.abs(values))), values.shape)
    if grid.geometry == "radial":
        out = [grid.axis[idx[0]]] + [0.0] * (grid.dimension - 1)
        return tuple(out)
    return tuple(float(grid.axis[i]) for i in idx)


# ---------------------------------------------------------------------------
# limit problem


def _petviashvili(apply_A, solve_A, weights, psi, p, tol, max_iter=400):
    """Stabilized fixed point for A psi = psi^p with A = -lap + c."""
    gamma_exp = p / (p - 1.0)
    res = np.inf
    res_prev = np.inf
    for it in range(max_iter):
        f = _nonlin(psi, p)
        num = float(np.sum(weights * psi * apply_A(psi)))
        den = float(np.sum(weights * psi * f))
        if den <= 0:
            raise NoConvergence("fixed-point iteration lost positivity of <psi^p, psi>")
        gamma = num / den
        psi = gamma**gamma_exp * solve_A(f)
        if it % 5 == 4 or it > 40:
            res = float(np.sqrt(np.sum(weights * (apply_A(psi) - _nonlin(psi, p)) ** 2)))
            if res < tol:
                return psi, res, it + 1
            if res > 0.98 * res_prev and it > 60:
                break  # roundoff floor
            res_prev = res
    return psi, res, max_iter


def _newton_polish(A, weights, psi, p, tol, max_iter=40, post=None):
    """Newton on F(psi) = A psi - psi^p, sparse LU per step.

    The limit operator carries the translation near-kernel, so iterates
    are re-projected by `post` (evenness for the limit state) and the
    best iterate is kept: kernel noise makes raw residuals non-monotone.
    """
    best_psi, best_res = psi, np.inf
    for _ in range(max_iter):
        f = A @ psi - _nonlin(psi, p)
        res = float(np.sqrt(np.sum(weights * f**2)))
        if res < best_res:
            best_psi, best_res = psi, res
        if res < tol:
            return psi, res
        J = (A - sp.diags_array(p * np.abs(psi) ** (p - 1.0))).tocsc()
        try:
            delta = splu(J).solve(-f)
        except RuntimeError as exc:
            raise SingularOperator(f"Newton system singular: {exc}") from exc
        psi = psi + delta
        if post is not None:
            psi = post(psi)
    if best_res < 10.0 * tol:
        return best_psi, best_res
    raise NoConvergence("Newton polish did not converge", residual=best_res)


def _solve_limit_fd(c: float, p: float, grid: Grid, tol: float):
    A = (grids.neg_laplacian(grid) + c * sp.eye_array(grid.n_interior())).tocsc()
    lu = splu(A)
    w = grids.extract_interior(grid, grid.weights())
    if grid.geometry == "radial":
        r = grid.axis[:-1]
        psi0 = sech_ground_state(c, p, r)
    else:
        psi0 = grids.extract_interior(grid, sech_ground_state(c, p, grid.axis))
    psi, res, _ = _petviashvili(lambda v: A @ v, lu.solve, w, psi0, p, max(tol, 1e-9))
    post = None
    if grid.geometry == "line":
        post = lambda v: 0.5 * (v + v[::-1])  # limit state is even
    psi, res = _newton_polish(A, w, psi, p, tol, post=post)
    return psi, res


def _solve_limit_sine(c: float, p: float, grid: Grid, tol: float):
    """Pseudospectral (sine collocation) variant for line grids.

    The Dirichlet Laplacian is diagonal in the DST basis, so the profile
    is resolved to roundoff rather than O(h^2); used where the grid is
    too coarse for the finite-difference stencil to hit the requested
    pointwise accuracy.
    """
    m = grid.n - 2
    k = np.arange(1, m + 1)
    mu = (np.pi * k / (2.0 * grid.extent)) ** 2
    norm = 2.0 * (m + 1)

    def apply_A(v):
        return scipy.fft.idst(scipy.fft.dst(v, type=1) * (mu + c), type=1)

    def solve_A(v):
        return scipy.fft.idst(scipy.fft.dst(v, type=1) / (mu + c), type=1)

    _ = norm  # scipy's dst/idst pair is already inverse-consistent
    w = grids.extract_interior(grid, grid.weights())
    psi0 = grids.extract_interior(grid, sech_ground_state(c, p, grid.axis))
    psi, res, _ = _petviashvili(apply_A, solve_A, w, psi0, p, tol, max_iter=2000)
    if res >= tol:
        raise NoConvergence("sine-collocation iteration stalled", residual=res)
    return psi, res


def solve_limit_ground_state(
    c: float,
    p: float,
    grid: Grid,
    tol: float = 1e-10,
    method: str = "auto",
    omega: float = float("nan"),
    center: tuple | None = None,
) -> Profile:
    """Positive decaying solution of -lap psi + c psi = psi^p.

    method: "fd" (second-order stencil, matches the continuation family),
    "sine" (spectral in space, line grids only), or "auto" which picks
    "sine" on line grids and "fd" otherwise.
    """
    if not (c > 0):
        raise ValueError("need c > 0")
    if method == "auto":
        method = "sine" if grid.geometry == "line" else "fd"
    if method == "sine":
        if grid.geometry != "line":
            raise ValueError("sine method is available on line grids only")
        psi_int, res = _solve_limit_sine(c, p, grid, tol)
    elif method == "fd":
        psi_int, res = _solve_limit_fd(c, p, grid, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    values = grids.insert_interior(grid, psi_int)
    if np.min(psi_int) < 0 and abs(np.min(psi_int)) > 1e-10 * np.max(psi_int):
        raise LostPositivity("limit solver produced a sign-changing profile")
    values = np.maximum(values, 0.0)
    _decay_check(grid, values)
    if center is None:
        center = (0.0,) * grid.dimension
    return Profile(
        grid=grid,
        values=values,
        omega=omega,
        epsilon=0.0,
        p=p,
        center=tuple(center),
        residual=res,
        peak=_peak_of(grid, values),
    )


# ---------------------------------------------------------------------------
# semiclassical continuation


def _z_on_grid(params: ProblemParams, pair: PotentialPair, grid: Grid, center, epsilon):
    x = np.asarray(center) + epsilon * grid.points()
    z, _, _ = eval_Z(params, pair, x)
    return z


def _even_projector(grid: Grid, z_int: np.ndarray):
    """Reflection-averaging hook for even line problems, else None.

    At epsilon = 0 (and for symmetric coefficients in general) the line
    operator has a translation near-kernel; projecting Newton iterates
    onto the even subspace keeps roundoff out of that direction.
    """
    if grid.geometry != "line":
        return None
    scale = max(1.0, float(np.max(np.abs(z_int))))
    if not np.allclose(z_int, z_int[::-1], rtol=0.0, atol=1e-12 * scale):
        return None

    def post(v: np.ndarray) -> np.ndarray:
        return 0.5 * (v + v[::-1])

    return post


def _newton_fixed_epsilon(
    grid: Grid,
    z_int: np.ndarray,
    p: float,
    psi: np.ndarray,
    weights: np.ndarray,
    tol: float,
    max_iter: int = 30,
    post=None,
):
    """Newton for -lap phi + z phi - phi^p = 0 at fixed coefficients.

    The Jacobian is refactored only when progress slows (matters for box
    grids where the LU is the dominant cost).
    """
    A = grids.neg_laplacian(grid)
    Az = (A + sp.diags_array(z_int)).tocsc()

    def residual(v):
        return Az @ v - _nonlin(v, p)

    if post is not None:
        psi = post(psi)
    lu = None
    res_prev = np.inf
    f = residual(psi)
    res = float(np.sqrt(np.sum(weights * f**2)))
    for _ in range(max_iter):
        if res < tol:
            return psi, res
        if lu is None or res > 0.25 * res_prev:
            J = (Az - sp.diags_array(p * np.abs(psi) ** (p - 1.0))).tocsc()
            try:
                lu = splu(J)
            except RuntimeError as exc:
                raise SingularOperator(f"continuation Jacobian singular: {exc}") from exc
        delta = lu.solve(-f)
        lam = 1.0
        for _ in range(25):
            trial = psi + lam * delta
            if post is not None:
                trial = post(trial)
            ft = residual(trial)
            rt = float(np.sqrt(np.sum(weights * ft**2)))
            if rt < res or rt < tol:
                res_prev, res, psi, f = res, rt, trial, ft
                break
            lam *= 0.5
        else:
            # Line search exhausted: at the roundoff floor of the residual.
            if res < 10.0 * tol:
                return psi, res
            raise NoConvergence("Newton line search stalled", residual=res)
    if res < 10.0 * tol:
        return psi, res
    raise NoConvergence("fixed-epsilon Newton did not converge", residual=res)


def continue_profile(
    limit: Profile,
    params: ProblemParams,
    pair: PotentialPair,
    z: EffectiveZ,
    grid: Grid | None = None,
    tol: float = 1e-10,
) -> Profile:
    """March the limit state from epsilon = 0 to params.epsilon.

    Geometric epsilon schedule with step halving on Newton failure; each
    accepted step must keep the profile positive. When the limit state
    lives on a radial grid, `grid` selects the box the continuation runs
    on and the profile is transplanted by radial interpolation.
    """
    target = params.epsilon
    if grid is None:
        grid = limit.grid
    center = tuple(z.x0)

    if target == 0.0 and (limit.grid is grid or limit.grid == grid):
        # identity case: the limit state already is the epsilon = 0 member
        return replace(limit, omega=params.omega, center=center)

    if limit.grid is grid or limit.grid == grid:
        psi = grids.extract_interior(grid, limit.values)
    elif limit.grid.geometry == "radial":
        radii = grid.radii()
        vals = grids.interpolate_radial(limit.grid, limit.values, radii)
        psi = grids.extract_interior(grid, vals)
    else:
        raise ValueError("limit profile lives on an incompatible grid")

    w = grids.extract_interior(grid, grid.weights())

    # settle on this grid's own discrete branch at epsilon = 0 first
    z0_int = np.full(grid.n_interior(), z.z0)
    psi, res = _newton_fixed_epsilon(
        grid, z0_int, params.p, psi, w, tol, post=_even_projector(grid, z0_int)
    )

    if target == 0.0:
        values = grids.insert_interior(grid, psi)
        _decay_check(grid, values)
        return Profile(
            grid=grid,
            values=values,
            omega=params.omega,
            epsilon=0.0,
            p=params.p,
            center=center,
            residual=res,
            peak=_peak_of(grid, values),
        )

    eps_now = 0.0
    step = target / 8.0
    min_step = abs(target) * 1e-4
    while eps_now < target:
        eps_try = min(eps_now + step, target)
        z_int = grids.extract_interior(
            grid, _z_on_grid(params, pair, grid, center, eps_try)
        )
        try:
            psi_new, res = _newton_fixed_epsilon(
                grid, z_int, params.p, psi, w, tol, post=_even_projector(grid, z_int)
            )
        except (NoConvergence, SingularOperator):
            step *= 0.5
            if step < min_step:
                raise NoConvergence(
                    f"continuation stalled at epsilon = {eps_now:.4g}", residual=res
                )
            continue
        if np.min(psi_new) < -1e-8 * np.max(np.abs(psi_new)):
            raise LostPositivity(f"profile changed sign at epsilon = {eps_try:.4g}")
        psi = psi_new
        eps_now = eps_try
        step *= 1.5

    values = grids.insert_interior(grid, np.maximum(psi, 0.0))
    _decay_check(grid, values)
    return Profile(
        grid=grid,
        values=values,
        omega=params.omega,
        epsilon=target,
        p=params.p,
        center=center,
        residual=res,
        peak=_peak_of(grid, values),
    )


def resolve_at_omega(
    profile: Profile,
    params: ProblemParams,
    pair: PotentialPair,
    tol: float = 1e-10,
) -> Profile:
    """Re-solve on the profile's grid at params.omega (same epsilon, same
    coordinate frame): warm Newton start from the given profile.

    This is what the frequency-derivative stencils use, so the center is
    deliberately NOT re-derived from the new omega.
    """
    grid = profile.grid
    w = grids.extract_interior(grid, grid.weights())
    z_int = grids.extract_interior(
        grid, _z_on_grid(params, pair, grid, profile.center, profile.epsilon)
    )
    psi = grids.extract_interior(grid, profile.values)
    psi, res = _newton_fixed_epsilon(
        grid, z_int, params.p, psi, w, tol, post=_even_projector(grid, z_int)
    )
    values = grids.insert_interior(grid, psi)
    return Profile(
        grid=grid,
        values=values,
        omega=params.omega,
        epsilon=profile.epsilon,
        p=params.p,
        center=profile.center,
        residual=res,
        peak=_peak_of(grid, values),
    )


# ---------------------------------------------------------------------------
# derivative fields


def rescale_profile(profile: Profile, lam: float) -> Profile:
    """Scaling family member phi_lam with phi(x) = lam^(1/(p-1)) phi_lam(sqrt(lam) x).

    Returned on the dilated grid (extent * sqrt(lam)), where the identity
    holds node-for-node without interpolation. At epsilon = 0 the result
    solves the limit problem with coefficient c / lam.
    """
    if not (lam > 0):
        raise ValueError("lam must be positive")
    root = np.sqrt(lam)
    new_grid = Grid(
        dimension=profile.grid.dimension,
        geometry=profile.grid.geometry,
        extent=profile.grid.extent * root,
        n=profile.grid.n,
    )
    scale = lam ** (-1.0 / (profile.p - 1.0))
    return Profile(
        grid=new_grid,
        values=scale * profile.values,
        omega=profile.omega,
        epsilon=profile.epsilon,
        p=profile.p,
        center=profile.center,
        residual=profile.residual * scale * lam,
        peak=tuple(root * np.asarray(profile.peak)),
    )


def compute_T_lambda(profile: Profile) -> np.ndarray:
    """Derivative of the scaling family at lam = 1:

        T = -phi/(p-1) - (1/2) y . grad phi

    with the gradient taken by centered differences.
    """
    grid = profile.grid
    g = grids.gradient(grid, profile.values)
    if grid.geometry == "radial":
        ydotgrad = grid.axis * g[0]
    elif grid.geometry == "line":
        ydotgrad = grid.axis * g[0]
    else:
        pts = grid.points()
        ydotgrad = sum(pts[..., a] * g[a] for a in range(grid.dimension))
    return -profile.values / (profile.p - 1.0) - 0.5 * ydotgrad


def _linearized_matrix(profile: Profile, params: ProblemParams, pair: PotentialPair):
    grid = profile.grid
    if profile.epsilon == 0.0 and grid.geometry == "radial":
        # limit operator on the radial grid: constant coefficient
        x0 = np.asarray(profile.center)
        zval, _, _ = eval_Z(params, pair, x0)
        z_int = np.full(grid.n_interior(), float(zval))
    else:
        z_int = grids.extract_interior(
            grid, _z_on_grid(params, pair, grid, profile.center, profile.epsilon)
        )
    phi_int = grids.extract_interior(grid, profile.values)
    A = grids.neg_laplacian(grid)
    return (A + sp.diags_array(z_int - params.p * np.abs(phi_int) ** (params.p - 1.0))).tocsc()


def compute_R_omega(
    profile: Profile,
    params: ProblemParams,
    pair: PotentialPair,
    method: str = "linear-solve",
    domega: float | None = None,
    tol_id: float = 1e-6,
):
    """Frequency derivative R = d phi / d omega.

    "linear-solve" (default) solves the linearized equation

        L_eps R = 2 (omega + V(x)) phi

    directly; "finite-difference" re-solves the profile at omega +- d
    and differences. Returns (R, info) where info carries the identity
    residual  ||L_eps R - rhs|| / ||phi||  and the method used.
    """
    grid = profile.grid
    w = grids.extract_interior(grid, grid.weights())
    phi_int = grids.extract_interior(grid, profile.values)
    x = profile.sample_points()
    v, _, _ = pair.V(x)
    rhs_full = 2.0 * (params.omega + v) * profile.values
    rhs = grids.extract_interior(grid, rhs_full)
    L = _linearized_matrix(profile, params, pair)

    if method == "linear-solve":
        try:
            lu = splu(L)
            r_int = lu.solve(rhs)
            # one step of iterative refinement; the operator is nearly
            # singular for small epsilon and this buys a few digits
            r_int = r_int + lu.solve(rhs - L @ r_int)
        except RuntimeError as exc:
            raise SingularOperator(f"linearized solve failed: {exc}") from exc
    elif method == "finite-difference":
        if domega is None:
            domega = 1e-3 * max(1.0, abs(params.omega))
        plus = resolve_at_omega(profile, replace(params, omega=params.omega + domega), pair)
        minus = resolve_at_omega(profile, replace(params, omega=params.omega - domega), pair)
        r_int = grids.extract_interior(grid, (plus.values - minus.values) / (2.0 * domega))
    else:
        raise ValueError(f"unknown method {method!r}")

    resid = float(np.sqrt(np.sum(w * (L @ r_int - rhs) ** 2)))
    phinorm = float(np.sqrt(np.sum(w * phi_int**2)))
    info = {"method": method, "identity_residual": resid, "relative_residual": resid / phinorm}
    if method == "linear-solve" and resid > tol_id * phinorm:
        raise SingularOperator(
            f"identity residual {resid:.2e} exceeds {tol_id:.1e} * ||phi||"
        )
    return grids.insert_interior(grid, r_int), info
