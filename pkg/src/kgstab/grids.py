"""Uniform finite-difference grids with homogeneous Dirichlet boundaries.

Three geometries:

  line    1d interval [-L, L], n nodes, both ends pinned to zero
  radial  [0, L] with r = i*h; regularity at r = 0, Dirichlet at r = L;
          used for radially symmetric profiles in dimension >= 2
  box     tensor product of [-L, L] per axis (dimension 2 or 3)

Fields are stored on the full node set with boundary entries kept at
zero; linear operators act on the interior unknowns only.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np
import scipy.sparse as sp

from .errors import SchemaError

GEOMETRIES = ("line", "radial", "box")


def sphere_area(dim: int) -> float:
    # surface measure of the unit sphere in R^dim; 2 for dim=1 by convention
    return 2.0 * pi ** (dim / 2.0) / gamma(dim / 2.0)


@dataclass(frozen=True)
class Grid:
    """Geometry descriptor. `extent` is L, `n` is nodes per axis."""

    dimension: int
    geometry: str
    extent: float
    n: int

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise SchemaError("/grid/geometry", f"unknown geometry {self.geometry!r}")
        if self.dimension not in (1, 2, 3):
            raise SchemaError("/grid/dimension", "dimension must be 1, 2 or 3")
        if self.geometry == "line" and self.dimension != 1:
            raise SchemaError("/grid/geometry", "line grid is one-dimensional")
        if self.geometry == "radial" and self.dimension < 2:
            raise SchemaError("/grid/geometry", "radial grid needs dimension >= 2")
        if self.geometry == "box" and self.dimension < 2:
            raise SchemaError("/grid/geometry", "box grid needs dimension >= 2")
        if self.n < 8:
            raise SchemaError("/grid/n", "need at least 8 nodes per axis")
        if not (self.extent > 0):
            raise SchemaError("/grid/extent", "extent must be positive")

    @property
    def h(self) -> float:
        if self.geometry == "radial":
            return self.extent / (self.n - 1)
        return 2.0 * self.extent / (self.n - 1)

    @property
    def axis(self) -> np.ndarray:
        if self.geometry == "radial":
            return np.linspace(0.0, self.extent, self.n)
        return np.linspace(-self.extent, self.extent, self.n)

    @property
    def shape(self) -> tuple:
        if self.geometry == "box":
            return (self.n,) * self.dimension
        return (self.n,)

    def points(self) -> np.ndarray:
        """Node coordinates, shape (*shape, dimension).

        Radial nodes are placed on the first coordinate axis so that
        potentials (radially evaluated through |x|) can be sampled.
        """
        if self.geometry == "box":
            axes = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
            return np.stack(axes, axis=-1)
        if self.geometry == "radial":
            pts = np.zeros((self.n, self.dimension))
            pts[:, 0] = self.axis
            return pts
        return self.axis[:, None]

    def weights(self) -> np.ndarray:
        """Quadrature weights over the full node set (trapezoid rule).

        Radial weights carry the surface factor sigma * r^(dim-1), so
        sums approximate integrals over R^dim restricted to the ball.
        """
        w1 = np.full(self.n, self.h)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        if self.geometry == "line":
            return w1
        if self.geometry == "radial":
            r = self.axis
            return sphere_area(self.dimension) * r ** (self.dimension - 1) * w1
        w = w1
        for _ in range(self.dimension - 1):
            w = np.multiply.outer(w, w1)
        return w

    def interior(self) -> tuple:
        if self.geometry == "radial":
            return (slice(0, self.n - 1),)
        return (slice(1, self.n - 1),) * self.dimension

    def n_interior(self) -> int:
        if self.geometry == "radial":
            return self.n - 1
        return (self.n - 2) ** self.dimension

    def radii(self) -> np.ndarray:
        """|y| per node (used for moment integrals)."""
        pts = self.points()
        return np.sqrt(np.sum(pts**2, axis=-1))


def neg_laplacian(grid: Grid):
    """-Laplace operator on interior unknowns, CSR matrix.

    Second-order centered stencil. The radial operator carries the
    (dim-1)/r first-order term and the r=0 row uses the regularized
    limit  lap u(0) = dim * u''(0)  for even profiles.
    """
    h = grid.h
    if grid.geometry == "line":
        m = grid.n - 2
        return sp.diags_array(
            [np.full(m, 2.0 / h**2), np.full(m - 1, -1.0 / h**2), np.full(m - 1, -1.0 / h**2)],
            offsets=[0, 1, -1],
        ).tocsr()
    if grid.geometry == "radial":
        m = grid.n - 1
        d = grid.dimension
        i = np.arange(1, m)
        main = np.full(m, 2.0 / h**2)
        upper = -(1.0 + (d - 1) / (2.0 * i)) / h**2
        lower = -(1.0 - (d - 1) / (2.0 * i)) / h**2
        up = np.empty(m - 1)
        # row 0 is the regularized center: lap u(0) ~ 2d (u1 - u0)/h^2
        main[0] = 2.0 * d / h**2
        up[0] = -2.0 * d / h**2
        up[1:] = upper[:-1]
        return sp.diags_array([main, up, lower], offsets=[0, 1, -1]).tocsr()
    # box: kronecker sum of 1d operators
    m = grid.n - 2
    one = sp.diags_array(
        [np.full(m, 2.0 / h**2), np.full(m - 1, -1.0 / h**2), np.full(m - 1, -1.0 / h**2)],
        offsets=[0, 1, -1],
    )
    eye = sp.eye_array(m)
    if grid.dimension == 2:
        return (sp.kron(one, eye) + sp.kron(eye, one)).tocsr()
    return (
        sp.kron(sp.kron(one, eye), eye)
        + sp.kron(sp.kron(eye, one), eye)
        + sp.kron(sp.kron(eye, eye), one)
    ).tocsr()


def neg_laplacian_tridiag(grid: Grid):
    """(main, upper, lower) diagonals of the interior operator, 1d only."""
    A = neg_laplacian(grid)
    m = A.shape[0]
    main = A.diagonal()
    up = A.diagonal(1)
    lo = A.diagonal(-1)
    return main, up, lo, m


def extract_interior(grid: Grid, field: np.ndarray) -> np.ndarray:
    return field[grid.interior()].ravel()


def insert_interior(grid: Grid, vec: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.shape, dtype=vec.dtype)
    if grid.geometry == "radial":
        out[: grid.n - 1] = vec
    else:
        m = grid.n - 2
        out[grid.interior()] = vec.reshape((m,) * grid.dimension)
    return out


def apply_neg_laplacian(grid: Grid, field: np.ndarray) -> np.ndarray:
    """-lap on a full-shape field (zero boundary), returns full shape."""
    A = neg_laplacian(grid)
    return insert_interior(grid, A @ extract_interior(grid, field))


def gradient(grid: Grid, field: np.ndarray) -> list[np.ndarray]:
    """Centered second-order gradient components on the full node set.

    Boundary nodes get one-sided values but every consumer integrates
    against fields that vanish there. The radial case returns d/dr with
    the symmetric zero at r=0.
    """
    h = grid.h
    if grid.geometry == "radial":
        g = np.gradient(field, h)
        g[0] = 0.0  # even profile: phi'(0) = 0
        return [g]
    if grid.geometry == "line":
        return [np.gradient(field, h)]
    return [np.gradient(field, h, axis=a) for a in range(grid.dimension)]


def dirichlet_form(grid: Grid, field: np.ndarray) -> float:
    """sum of |forward differences|^2 scaled to approximate int |grad u|^2.

    This is the exact quadratic form of `neg_laplacian`, which makes it
    the right gradient energy for discrete conservation checks.
    """
    h = grid.h
    if grid.geometry == "radial":
        raise ValueError("dirichlet_form is defined for line/box grids")
    total = 0.0
    for a in range(grid.dimension):
        d = np.diff(field, axis=a)
        total += np.sum(np.abs(d) ** 2)
    return float(total) * h ** (grid.dimension - 2)


def interpolate_radial(radial_grid: Grid, values: np.ndarray, target_radii: np.ndarray) -> np.ndarray:
    """Cubic interpolation of a radial profile onto arbitrary radii.

    Radii beyond the radial extent map to zero (the profile has decayed
    there by construction).
    """
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(radial_grid.axis, values, bc_type=((1, 0.0), (1, 0.0)))
    out = np.where(
        target_radii <= radial_grid.extent, spline(np.clip(target_radii, 0.0, radial_grid.extent)), 0.0
    )
    return out
