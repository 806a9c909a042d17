"""External potentials and the effective potential of the standing-wave problem.

The model carries two smooth bounded potentials: V couples to the time
derivative (magnetic-like), W is a direct potential. A standing wave
with frequency `omega` concentrates where the effective potential

    Z(x) = m - omega^2 - 2 omega V(x) - W(x)

has a nondegenerate critical point x0 with Z(x0) > 0. Everything the
asymptotic analysis needs about the potentials at x0 (value, Hessian,
Laplacians) is collected in `EffectiveZ`.

Potentials are sums of Gaussian bumps and quadratic forms plus a
constant offset; all derivatives are evaluated analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHessian, NoConvergence, SchemaError

MODES = ("general", "schrodinger", "covariant")


@dataclass(frozen=True)
class GaussianTerm:
    """amplitude * exp(-|x - center|^2 / width^2)"""

    amplitude: float
    center: tuple
    width: float

    def __post_init__(self):
        if not (self.width > 0):
            raise SchemaError("/potential/width", "gaussian width must be positive")


@dataclass(frozen=True)
class QuadraticTerm:
    """(1/2) (x - center)^T A (x - center), A symmetric"""

    matrix: tuple  # row tuples
    center: tuple

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SchemaError("/potential/matrix", "quadratic matrix must be square")
        if not np.allclose(a, a.T, atol=1e-12):
            raise SchemaError("/potential/matrix", "quadratic matrix must be symmetric")


@dataclass(frozen=True)
class PotentialSpec:
    """Sum of terms plus a constant offset, in a fixed dimension."""

    dimension: int
    terms: tuple = ()
    offset: float = 0.0

    @classmethod
    def zero(cls, dimension: int) -> "PotentialSpec":
        return cls(dimension=dimension)

    def is_zero(self) -> bool:
        return not self.terms and self.offset == 0.0

    def evaluate(self, x: np.ndarray):
        """Value, gradient and Hessian at points x of shape (..., dim).

        Returns (val, grad, hess) shaped (...,), (..., d), (..., d, d).
        """
        x = np.asarray(x, dtype=float)
        d = self.dimension
        if x.shape[-1] != d:
            raise ValueError(f"points have dimension {x.shape[-1]}, spec has {d}")
        base = x.shape[:-1]
        val = np.full(base, self.offset)
        grad = np.zeros(base + (d,))
        hess = np.zeros(base + (d, d))
        eye = np.eye(d)
        for term in self.terms:
            if isinstance(term, GaussianTerm):
                dx = x - np.asarray(term.center)
                r2 = np.sum(dx**2, axis=-1)
                g = term.amplitude * np.exp(-r2 / term.width**2)
                val += g
                grad += (-2.0 / term.width**2) * dx * g[..., None]
                outer = dx[..., :, None] * dx[..., None, :]
                hess += g[..., None, None] * (
                    (4.0 / term.width**4) * outer - (2.0 / term.width**2) * eye
                )
            else:
                a = np.asarray(term.matrix, dtype=float)
                dx = x - np.asarray(term.center)
                adx = dx @ a
                val += 0.5 * np.sum(dx * adx, axis=-1)
                grad += adx
                hess += np.broadcast_to(a, base + (d, d))
        return val, grad, hess

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        _, _, h = self.evaluate(x)
        return np.trace(h, axis1=-2, axis2=-1)


@dataclass(frozen=True)
class ProblemParams:
    """Model parameters: dimension, nonlinearity power, mass, frequency,
    semiclassical parameter and the coupling mode."""

    dimension: int
    p: float
    m: float
    omega: float
    epsilon: float
    mode: str = "general"

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise SchemaError("/params/dimension", "dimension must be 1, 2 or 3")
        if not (self.p > 1):
            raise SchemaError("/params/p", "need p > 1")
        if self.dimension >= 3 and not (self.p < (self.dimension + 2) / (self.dimension - 2)):
            raise SchemaError("/params/p", "p must be Sobolev-subcritical for dimension >= 3")
        if not (self.m > 0):
            raise SchemaError("/params/m", "need m > 0")
        if self.epsilon < 0:
            raise SchemaError("/params/epsilon", "epsilon must be nonnegative")
        if self.mode not in MODES:
            raise SchemaError("/params/mode", f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class PotentialPair:
    """V and W resolved for a given mode.

    In covariant mode W = V^2 is derived from V by the chain rule, so
    callers never supply W themselves there; in schrodinger mode V = 0.
    """

    spec_V: PotentialSpec
    spec_W: PotentialSpec
    mode: str = "general"

    def V(self, x):
        return self.spec_V.evaluate(x)

    def W(self, x):
        if self.mode != "covariant":
            return self.spec_W.evaluate(x)
        v, gv, hv = self.spec_V.evaluate(x)
        w = v**2
        gw = 2.0 * v[..., None] * gv
        hw = 2.0 * (gv[..., :, None] * gv[..., None, :] + v[..., None, None] * hv)
        return w, gw, hw


def resolve_potentials(params: ProblemParams, spec_V: PotentialSpec | None, spec_W: PotentialSpec | None) -> PotentialPair:
    d = params.dimension
    zero = PotentialSpec.zero(d)
    if params.mode == "schrodinger":
        if spec_V is not None and not spec_V.is_zero():
            raise SchemaError("/potentials/V", "schrodinger mode forces V = 0")
        return PotentialPair(zero, spec_W or zero, mode="schrodinger")
    if params.mode == "covariant":
        if spec_W is not None and not spec_W.is_zero():
            # W is derived, never supplied
            from .errors import ModeConflict

            raise ModeConflict("/potentials/W", "covariant mode derives W = V^2")
        return PotentialPair(spec_V or zero, zero, mode="covariant")
    return PotentialPair(spec_V or zero, spec_W or zero, mode="general")


def eval_potentials(pair: PotentialPair, x: np.ndarray):
    """(V, grad V, hess V, W, grad W, hess W) at x."""
    v, gv, hv = pair.V(x)
    w, gw, hw = pair.W(x)
    return v, gv, hv, w, gw, hw


def eval_Z(params: ProblemParams, pair: PotentialPair, x: np.ndarray):
    """Effective potential and derivatives: (Z, grad Z, hess Z)."""
    v, gv, hv, w, gw, hw = eval_potentials(pair, x)
    om = params.omega
    z = params.m - om**2 - 2.0 * om * v - w
    gz = -2.0 * om * gv - gw
    hz = -2.0 * om * hv - hw
    return z, gz, hz


@dataclass(frozen=True)
class EffectiveZ:
    """Local data of Z at a concentration point."""

    x0: tuple
    z0: float
    grad_norm: float
    hessian: tuple
    hess_eigs: tuple  # ascending
    laplacian_Z: float
    v0: float
    laplacian_V: float

    def hessian_negatives(self) -> int:
        return int(np.sum(np.asarray(self.hess_eigs) < 0.0))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.x0, dtype=float)


def effective_z_at(params: ProblemParams, pair: PotentialPair, x: np.ndarray) -> EffectiveZ:
    """Collect EffectiveZ data at a given point (no criticality enforced)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z, gz, hz = eval_Z(params, pair, x)
    v0, _, hv = pair.V(x)
    eigs = np.linalg.eigvalsh(hz)
    return EffectiveZ(
        x0=tuple(float(c) for c in x),
        z0=float(z),
        grad_norm=float(np.linalg.norm(gz)),
        hessian=tuple(tuple(float(e) for e in row) for row in hz),
        hess_eigs=tuple(float(e) for e in eigs),
        laplacian_Z=float(np.trace(hz)),
        v0=float(v0),
        laplacian_V=float(np.trace(hv)),
    )


def find_critical_point(
    params: ProblemParams,
    pair: PotentialPair,
    guess: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> EffectiveZ:
    """Damped Newton search for grad Z = 0 starting from `guess`.

    Raises NoConvergence after `max_iter` iterations and
    DegenerateHessian when the Hessian at the iterate (or the converged
    point) is singular at relative scale 1e-8.
    """
    x = np.atleast_1d(np.asarray(guess, dtype=float)).copy()

    def degenerate(hz):
        scale = max(1.0, float(np.abs(hz).max()))
        return np.min(np.abs(np.linalg.eigvalsh(hz))) < 1e-8 * scale

    for _ in range(max_iter):
        _, gz, hz = eval_Z(params, pair, x)
        gnorm = np.linalg.norm(gz)
        if gnorm <= tol:
            if degenerate(hz):
                raise DegenerateHessian(f"singular Hessian of Z at {x.tolist()}")
            return effective_z_at(params, pair, x)
        if degenerate(hz):
            raise DegenerateHessian(f"singular Hessian of Z near {x.tolist()}")
        step = np.linalg.solve(hz, -gz)
        # backtracking on |grad Z|
        lam = 1.0
        for _ in range(40):
            trial = x + lam * step
            _, gt, _ = eval_Z(params, pair, trial)
            if np.linalg.norm(gt) < gnorm:
                x = trial
                break
            lam *= 0.5
        else:
            raise NoConvergence("critical point search stalled", residual=float(gnorm))
    raise NoConvergence("critical point search did not converge", residual=float(gnorm))


@dataclass(frozen=True)
class AssumptionReport:
    """Flags for the standing assumptions at the critical point."""

    critical_point_ok: bool
    hessian_nondegenerate: bool
    positivity_ok: bool
    messages: tuple = field(default=())

    @property
    def all_ok(self) -> bool:
        return self.critical_point_ok and self.hessian_nondegenerate and self.positivity_ok


def check_assumptions(z: EffectiveZ, grad_tol: float = 1e-8) -> AssumptionReport:
    msgs = []
    crit = z.grad_norm <= grad_tol
    if not crit:
        msgs.append(f"|grad Z(x0)| = {z.grad_norm:.3e} exceeds {grad_tol:.1e}")
    scale = max(1.0, max(abs(e) for e in z.hess_eigs) if z.hess_eigs else 0.0)
    nondeg = all(abs(e) >= 1e-8 * scale for e in z.hess_eigs) and len(z.hess_eigs) > 0
    if not nondeg:
        msgs.append("Hessian of Z at x0 is numerically singular")
    pos = z.z0 > 0
    if not pos:
        msgs.append(f"Z(x0) = {z.z0:.3e} is not positive")
    return AssumptionReport(crit, nondeg, pos, tuple(msgs))
