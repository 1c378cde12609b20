"""Dirichlet Poisson solves on box grids via discrete sine transforms.

The 7-point negative Laplacian on a uniform node grid is diagonal in the
DST-I basis, so -Delta u = f with zero (or folded-in) Dirichlet data is
solved exactly in O(m^3 log m).  This is used both as a direct solver for
linear problems (Green's functions on boxes) and as the preconditioner for
Newton-Krylov iterations on the coupled nonlinear system.
"""

import numpy as np
from scipy.fft import dstn, idstn

from .errors import DomainError


class BoxGrid:
    """Uniform tensor grid on a box with n nodes per axis (boundaries
    included); interior arrays have shape (n-2, n-2, n-2)."""

    def __init__(self, box, n):
        if n < 5:
            raise DomainError(f"grid needs at least 5 nodes per axis, got {n}")
        if n > 97:
            raise DomainError(f"grids above 97^3 are not supported, got {n}")
        self.box = box
        self.n = int(n)
        self.m = self.n - 2
        self.h = tuple(L / (self.n - 1) for L in box.lengths)
        self.axes = tuple(
            np.linspace(o, o + L, self.n)
            for o, L in zip(box.origin, box.lengths))
        k = np.arange(1, self.m + 1)
        lam1 = [(2.0 - 2.0 * np.cos(np.pi * k / (self.m + 1))) / h**2
                for h in self.h]
        self.lam = (lam1[0][:, None, None] + lam1[1][None, :, None]
                    + lam1[2][None, None, :])

    def interior_axes(self):
        return tuple(ax[1:-1] for ax in self.axes)

    def interior_mesh(self):
        xi, yi, zi = self.interior_axes()
        return np.meshgrid(xi, yi, zi, indexing="ij")

    def interior_radii(self, x0):
        X, Y, Z = self.interior_mesh()
        return np.sqrt((X - x0[0])**2 + (Y - x0[1])**2 + (Z - x0[2])**2)

    def nearest_interior_node(self, x):
        idx = []
        for c, ax in zip(x, self.interior_axes()):
            idx.append(int(np.argmin(np.abs(ax - c))))
        return tuple(idx)

    def node_point(self, idx):
        xi, yi, zi = self.interior_axes()
        return np.array([xi[idx[0]], yi[idx[1]], zi[idx[2]]])


def neg_laplacian(u, grid, bc=None):
    """Apply the 7-point -Delta with Dirichlet data (zero by default).

    bc, when given, is a dict axis -> (low_face, high_face) of boundary
    values on the interior-index face grids (shape (m, m) each).
    """
    m = grid.m
    hx, hy, hz = grid.h
    U = np.zeros((m + 2, m + 2, m + 2))
    U[1:-1, 1:-1, 1:-1] = u
    if bc is not None:
        lo, hi = bc[0]
        U[0, 1:-1, 1:-1] = lo
        U[-1, 1:-1, 1:-1] = hi
        lo, hi = bc[1]
        U[1:-1, 0, 1:-1] = lo
        U[1:-1, -1, 1:-1] = hi
        lo, hi = bc[2]
        U[1:-1, 1:-1, 0] = lo
        U[1:-1, 1:-1, -1] = hi
    c = U[1:-1, 1:-1, 1:-1]
    out = ((2.0 * c - U[2:, 1:-1, 1:-1] - U[:-2, 1:-1, 1:-1]) / hx**2
           + (2.0 * c - U[1:-1, 2:, 1:-1] - U[1:-1, :-2, 1:-1]) / hy**2
           + (2.0 * c - U[1:-1, 1:-1, 2:] - U[1:-1, 1:-1, :-2]) / hz**2)
    return out


def solve_neg_laplacian(f, grid, bc=None):
    """Solve -Delta u = f with Dirichlet data (zero by default).

    Nonzero boundary values are folded into the right-hand side, then the
    homogeneous problem is inverted in the DST-I basis.
    """
    rhs = np.array(f, dtype=float, copy=True)
    if bc is not None:
        hx, hy, hz = grid.h
        lo, hi = bc[0]
        rhs[0, :, :] += lo / hx**2
        rhs[-1, :, :] += hi / hx**2
        lo, hi = bc[1]
        rhs[:, 0, :] += lo / hy**2
        rhs[:, -1, :] += hi / hy**2
        lo, hi = bc[2]
        rhs[:, :, 0] += lo / hz**2
        rhs[:, :, -1] += hi / hz**2
    fh = dstn(rhs, type=1)
    return idstn(fh / grid.lam, type=1)


def boundary_values(func, grid):
    """Evaluate func(points) on the six faces restricted to interior
    face indices; returns the bc dict consumed by the solvers."""
    xi, yi, zi = grid.interior_axes()
    xs, ys, zs = grid.axes
    bc = {}
    Y, Z = np.meshgrid(yi, zi, indexing="ij")
    bc[0] = (func(np.stack([np.full_like(Y, xs[0]), Y, Z], -1)),
             func(np.stack([np.full_like(Y, xs[-1]), Y, Z], -1)))
    X, Z = np.meshgrid(xi, zi, indexing="ij")
    bc[1] = (func(np.stack([X, np.full_like(X, ys[0]), Z], -1)),
             func(np.stack([X, np.full_like(X, ys[-1]), Z], -1)))
    X, Y = np.meshgrid(xi, yi, indexing="ij")
    bc[2] = (func(np.stack([X, Y, np.full_like(X, zs[0])], -1)),
             func(np.stack([X, Y, np.full_like(X, zs[-1])], -1)))
    return bc


def normal_derivative_faces(u_interior, grid):
    """Outward normal derivatives on the six faces by one-sided 4th-order
    differences, assuming the field vanishes on the boundary.

    Returns {(axis, side): array(m, m)} with side in {0, 1}.
    """
    m = grid.m
    U = np.zeros((m + 2, m + 2, m + 2))
    U[1:-1, 1:-1, 1:-1] = u_interior
    out = {}
    # df/ds at the wall from samples at s = 0, h, 2h, 3h, 4h (f(0)=0)
    c = np.array([4.0, -3.0, 4.0 / 3.0, -0.25])

    def oneside(sl):
        return (c[0] * sl[0] + c[1] * sl[1] + c[2] * sl[2] + c[3] * sl[3])

    for axis in range(3):
        h = grid.h[axis]
        sls = [np.take(U, j, axis=axis) for j in range(1, 5)]
        inward_lo = oneside(sls) / h
        sls = [np.take(U, U.shape[axis] - 1 - j, axis=axis)
               for j in range(1, 5)]
        inward_hi = oneside(sls) / h
        # trim to interior face indices and flip sign: outward normal
        out[(axis, 0)] = -inward_lo[1:-1, 1:-1]
        out[(axis, 1)] = -inward_hi[1:-1, 1:-1]
    return out


def trilinear(field, grid, x):
    """Trilinear interpolation of an interior field at point x (zero
    extension on the boundary)."""
    m = grid.m
    U = np.zeros((m + 2, m + 2, m + 2))
    U[1:-1, 1:-1, 1:-1] = field
    idx = []
    ts = []
    for c, ax, h in zip(x, grid.axes, grid.h):
        s = (c - ax[0]) / h
        i = int(np.clip(np.floor(s), 0, len(ax) - 2))
        idx.append(i)
        ts.append(s - i)
    i, j, k = idx
    tx, ty, tz = ts
    v = 0.0
    for di, wx in ((0, 1 - tx), (1, tx)):
        for dj, wy in ((0, 1 - ty), (1, ty)):
            for dk, wz in ((0, 1 - tz), (1, tz)):
                v += wx * wy * wz * U[i + di, j + dj, k + dk]
    return float(v)
