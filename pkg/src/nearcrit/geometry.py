"""Domains (balls and axis-aligned boxes) and their surface quadratures.

Balls carry product Gauss-Legendre quadrature on the sphere (exact for
smooth integrands at modest node counts).  Boxes use face-wise tensor
trapezoid rules aligned with the finite-difference grid so that boundary
traces can be consumed directly.
"""

import numpy as np
from dataclasses import dataclass, field

from .errors import DomainError
from .hyperbola import sigma_n


@dataclass(frozen=True)
class Ball:
    R: float
    center: tuple = (0.0, 0.0, 0.0)
    N: int = 3

    def __post_init__(self):
        if self.R <= 0:
            raise DomainError(f"ball radius must be positive, got {self.R}")

    @property
    def kind(self):
        return "ball"

    def contains(self, x, strict=True):
        r = np.linalg.norm(np.asarray(x, float) - np.asarray(self.center))
        return r < self.R if strict else r <= self.R

    def distance_to_boundary(self, x):
        r = np.linalg.norm(np.asarray(x, float) - np.asarray(self.center))
        return self.R - r

    def surface_quadrature(self, n_theta=64):
        """Nodes, outward normals and weights on the sphere (N=3 only)."""
        if self.N != 3:
            raise DomainError("surface quadrature implemented for N=3")
        # Gauss-Legendre in cos(theta), uniform (trapezoid) in phi-angle.
        mu, wmu = np.polynomial.legendre.leggauss(n_theta)
        n_phi = 2 * n_theta
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        wphi = 2.0 * np.pi / n_phi
        st = np.sqrt(1.0 - mu**2)
        normals = np.stack([
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.outer(mu, np.ones(n_phi)).ravel(),
        ], axis=1)
        weights = (np.outer(wmu, np.full(n_phi, wphi))).ravel() * self.R**2
        points = np.asarray(self.center) + self.R * normals
        return points, normals, weights

    def as_dict(self):
        return {"kind": "ball", "R": self.R,
                "center": list(self.center), "N": self.N}


@dataclass(frozen=True)
class Box:
    lengths: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (0.0, 0.0, 0.0)
    N: int = field(default=3)

    def __post_init__(self):
        if any(L <= 0 for L in self.lengths):
            raise DomainError(f"box lengths must be positive: {self.lengths}")
        if self.N != 3:
            raise DomainError("boxes are supported in N=3 only")

    @property
    def kind(self):
        return "box"

    @property
    def center(self):
        return tuple(o + 0.5 * L for o, L in zip(self.origin, self.lengths))

    def contains(self, x, strict=True):
        x = np.asarray(x, float)
        lo = np.asarray(self.origin)
        hi = lo + np.asarray(self.lengths)
        if strict:
            return bool(np.all(x > lo) and np.all(x < hi))
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def distance_to_boundary(self, x):
        x = np.asarray(x, float)
        lo = np.asarray(self.origin)
        hi = lo + np.asarray(self.lengths)
        return float(min(np.min(x - lo), np.min(hi - x)))

    def as_dict(self):
        return {"kind": "box", "lengths": list(self.lengths),
                "origin": list(self.origin), "N": self.N}


def unit_ball(N=3):
    return Ball(R=1.0, center=(0.0,) * 3, N=N)


def unit_cube():
    return Box(lengths=(1.0, 1.0, 1.0))


def ball_surface_integral(ball, f, n_theta=64):
    """Integrate f(points, normals) over the sphere by product Gauss rule."""
    pts, nrm, w = ball.surface_quadrature(n_theta)
    vals = f(pts, nrm)
    vals = np.asarray(vals, float)
    if vals.ndim == 1:
        return float(np.dot(w, vals))
    return (w[:, None] * vals).sum(axis=0)


def sphere_area(R, N):
    return sigma_n(N) * R ** (N - 1)


def box_face_grids(box, n):
    """Quadrature description of the 6 faces of a box on an n^3 node grid.

    Returns a list of (points, normal, weights) per face, where `points`
    has shape (n*n, 3) and `weights` are tensor-trapezoid weights (corner
    and edge nodes get reduced weight).
    """
    Lx, Ly, Lz = box.lengths
    ox, oy, oz = box.origin
    xs = np.linspace(ox, ox + Lx, n)
    ys = np.linspace(oy, oy + Ly, n)
    zs = np.linspace(oz, oz + Lz, n)

    def w1(coords):
        w = np.full(len(coords), coords[1] - coords[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    faces = []
    for axis, sign in [(0, -1), (0, +1), (1, -1), (1, +1), (2, -1), (2, +1)]:
        tang = [a for a in range(3) if a != axis]
        coords = [xs, ys, zs]
        c1, c2 = coords[tang[0]], coords[tang[1]]
        P1, P2 = np.meshgrid(c1, c2, indexing="ij")
        pts = np.zeros((n * n, 3))
        pts[:, tang[0]] = P1.ravel()
        pts[:, tang[1]] = P2.ravel()
        fixed = (coords[axis][0] if sign < 0 else coords[axis][-1])
        pts[:, axis] = fixed
        normal = np.zeros(3)
        normal[axis] = sign
        weights = np.outer(w1(c1), w1(c2)).ravel()
        faces.append((pts, normal, weights))
    return faces
