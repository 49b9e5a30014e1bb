"""Manufactured solutions: exact fields, materials, and body forces.

Each case packages vectorized callables for the exact displacement u, stress
sigma = 2 mu eps(u) + lam tr(eps(u)) I, rotation multiplier (the axial vector
of the skew part of grad u, i.e. rot(u)/2 in 2D and curl(u)/2 in 3D), body
force f = -div sigma, and the Lame fields.  All derivatives are hand-coded
closed forms; the test suite gates every case with central finite-difference
consistency checks before any convergence run trusts it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import MaterialField
from .mesh import (MacroMesh, apply_map, build_structured,
                   parallelogram_seed_map, perturb_random, refine_uniform,
                   smooth_map)

PI = np.pi


@dataclass
class ManufacturedCase:
    """Exact solution bundle for one benchmark problem."""

    name: str
    dim: int
    u: Callable                 # (npts, d) -> (npts, d)
    sigma: Callable             # (npts, d) -> (npts, d, d)
    gamma: Callable             # (npts, d) -> (npts, 1) or (npts, 3)
    f: Callable                 # (npts, d) -> (npts, d)
    lam: Callable               # (npts, d) -> (npts,)
    mu: Callable                # (npts, d) -> (npts,)
    scaled_gamma: Optional[Callable] = None  # multiplier of the scaled form
    default_seed_n: int = 4     # coarsest structured subdivision count

    def material(self, sub) -> MaterialField:
        return MaterialField.from_functions(sub, self.lam, self.mu)

    def boundary(self, pts: np.ndarray) -> np.ndarray:
        return self.u(pts)


def _const_field(value: float) -> Callable:
    def fn(p):
        return np.full(np.asarray(p).shape[:-1], float(value))
    return fn


def example1(lam: float = 123.0, mu: float = 79.3) -> ManufacturedCase:
    """Smooth trigonometric displacement on the unit square."""

    def u(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([np.cos(PI * x) * np.sin(2 * PI * y),
                         np.sin(PI * x) * np.cos(PI * y)], axis=-1)

    def grad_u(p):
        x, y = p[..., 0], p[..., 1]
        g = np.empty(p.shape[:-1] + (2, 2))
        g[..., 0, 0] = -PI * np.sin(PI * x) * np.sin(2 * PI * y)
        g[..., 0, 1] = 2 * PI * np.cos(PI * x) * np.cos(2 * PI * y)
        g[..., 1, 0] = PI * np.cos(PI * x) * np.cos(PI * y)
        g[..., 1, 1] = -PI * np.sin(PI * x) * np.sin(PI * y)
        return g

    def sigma(p):
        return _sigma_from_grad(grad_u(p), lam, mu)

    def gamma(p):
        g = grad_u(p)
        return 0.5 * (g[..., 1, 0] - g[..., 0, 1])[..., None]

    def f(p):
        x, y = p[..., 0], p[..., 1]
        f1 = (mu * 5 * PI**2 * np.cos(PI * x) * np.sin(2 * PI * y)
              + (mu + lam) * PI**2 * np.cos(PI * x)
              * (np.sin(2 * PI * y) + np.sin(PI * y)))
        f2 = (mu * 2 * PI**2 * np.sin(PI * x) * np.cos(PI * y)
              + (mu + lam) * PI * np.sin(PI * x)
              * (2 * PI * np.cos(2 * PI * y) + PI * np.cos(PI * y)))
        return np.stack([f1, f2], axis=-1)

    return ManufacturedCase(name="example1", dim=2, u=u, sigma=sigma,
                            gamma=gamma, f=f,
                            lam=_const_field(lam), mu=_const_field(mu))


def example2_3d(lam: float = 79.3, mu: float = 79.3) -> ManufacturedCase:
    """3D twist-like displacement driven by e^x - 1 on the unit cube."""
    c = np.cos(PI / 12.0)
    s = np.sin(PI / 12.0)

    def u(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        E = np.exp(x) - 1.0
        Y, Z = y - 0.5, z - 0.5
        u2 = -E * ((1 - c) * Y + s * Z)
        u3 = -E * (-s * Y + (1 - c) * Z)
        return np.stack([np.zeros_like(x), u2, u3], axis=-1)

    def grad_u(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        ex = np.exp(x)
        E = ex - 1.0
        Y, Z = y - 0.5, z - 0.5
        g = np.zeros(p.shape[:-1] + (3, 3))
        g[..., 1, 0] = -ex * ((1 - c) * Y + s * Z)
        g[..., 1, 1] = -E * (1 - c)
        g[..., 1, 2] = -E * s
        g[..., 2, 0] = -ex * (-s * Y + (1 - c) * Z)
        g[..., 2, 1] = E * s
        g[..., 2, 2] = -E * (1 - c)
        return g

    def sigma(p):
        return _sigma_from_grad(grad_u(p), lam, mu)

    def gamma(p):
        g = grad_u(p)
        return 0.5 * np.stack([g[..., 2, 1] - g[..., 1, 2],
                               g[..., 0, 2] - g[..., 2, 0],
                               g[..., 1, 0] - g[..., 0, 1]], axis=-1)

    def f(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        ex = np.exp(x)
        Y, Z = y - 0.5, z - 0.5
        f1 = 2 * (lam + mu) * (1 - c) * ex
        f2 = mu * ex * ((1 - c) * Y + s * Z)
        f3 = mu * ex * (-s * Y + (1 - c) * Z)
        return np.stack([f1, f2, f3], axis=-1)

    return ManufacturedCase(name="example2_3d", dim=3, u=u, sigma=sigma,
                            gamma=gamma, f=f,
                            lam=_const_field(lam), mu=_const_field(mu))


def example3_hetero(kappa: float = 1.0e6) -> ManufacturedCase:
    """Heterogeneous material: coefficient jump of size kappa in a box.

    lam = mu = m with m = 1 outside the box (1/3, 2/3)^2 and m = kappa
    inside; u = (s, s)/m with s = sin(3 pi x) sin(3 pi y).  The stress is
    independent of m (hence smooth) while u and the rotation multiplier are
    discontinuous; the scaled-rotation multiplier 2 mu gamma is smooth again.
    """

    def chi(p):
        x, y = p[..., 0], p[..., 1]
        return ((np.minimum(x, y) > 1.0 / 3.0)
                & (np.maximum(x, y) < 2.0 / 3.0)).astype(float)

    def m_of(p):
        return 1.0 + (kappa - 1.0) * chi(p)

    def s_grads(p):
        x, y = p[..., 0], p[..., 1]
        s = np.sin(3 * PI * x) * np.sin(3 * PI * y)
        s1 = 3 * PI * np.cos(3 * PI * x) * np.sin(3 * PI * y)
        s2 = 3 * PI * np.sin(3 * PI * x) * np.cos(3 * PI * y)
        return s, s1, s2

    def u(p):
        s, _, _ = s_grads(p)
        m = m_of(p)
        return np.stack([s / m, s / m], axis=-1)

    def sigma(p):
        _, s1, s2 = s_grads(p)
        out = np.empty(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = 3 * s1 + s2
        out[..., 1, 1] = s1 + 3 * s2
        out[..., 0, 1] = out[..., 1, 0] = s1 + s2
        return out

    def gamma(p):
        _, s1, s2 = s_grads(p)
        return ((s1 - s2) / (2.0 * m_of(p)))[..., None]

    def scaled_gamma(p):
        _, s1, s2 = s_grads(p)
        return (s1 - s2)[..., None]

    def f(p):
        x, y = p[..., 0], p[..., 1]
        s = np.sin(3 * PI * x) * np.sin(3 * PI * y)
        c2 = np.cos(3 * PI * x) * np.cos(3 * PI * y)
        val = 36 * PI**2 * s - 18 * PI**2 * c2
        return np.stack([val, val], axis=-1)

    return ManufacturedCase(name="example3_hetero", dim=2, u=u, sigma=sigma,
                            gamma=gamma, f=f, lam=m_of, mu=m_of,
                            scaled_gamma=scaled_gamma, default_seed_n=6)


def example4_incompressible(lam: float = 1.0e6,
                            mu: float = 1.0) -> ManufacturedCase:
    """Nearly incompressible benchmark; f is independent of lam."""

    def u(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack(
            [np.sin(PI * x) * np.sin(PI * y) + x / (2 * lam),
             np.cos(PI * x) * np.cos(PI * y) + y / (2 * lam)], axis=-1)

    def grad_u(p):
        x, y = p[..., 0], p[..., 1]
        g = np.empty(p.shape[:-1] + (2, 2))
        g[..., 0, 0] = PI * np.cos(PI * x) * np.sin(PI * y) + 1 / (2 * lam)
        g[..., 0, 1] = PI * np.sin(PI * x) * np.cos(PI * y)
        g[..., 1, 0] = -PI * np.sin(PI * x) * np.cos(PI * y)
        g[..., 1, 1] = -PI * np.cos(PI * x) * np.sin(PI * y) + 1 / (2 * lam)
        return g

    def sigma(p):
        return _sigma_from_grad(grad_u(p), lam, mu)

    def gamma(p):
        g = grad_u(p)
        return 0.5 * (g[..., 1, 0] - g[..., 0, 1])[..., None]

    def f(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([2 * mu * PI**2 * np.sin(PI * x) * np.sin(PI * y),
                         2 * mu * PI**2 * np.cos(PI * x) * np.cos(PI * y)],
                        axis=-1)

    return ManufacturedCase(name="example4_incompressible", dim=2, u=u,
                            sigma=sigma, gamma=gamma, f=f,
                            lam=_const_field(lam), mu=_const_field(mu))


def _sigma_from_grad(g: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """sigma = 2 mu sym(g) + lam tr(g) I for constant Lame parameters."""
    d = g.shape[-1]
    eps = 0.5 * (g + np.swapaxes(g, -1, -2))
    tr = np.trace(eps, axis1=-2, axis2=-1)
    return 2.0 * mu * eps + lam * tr[..., None, None] * np.eye(d)


MESH_FAMILIES = ("structured", "parallelogram", "smooth", "random")


def build_family_mesh(family: str, n: int, dim: int = 2,
                      seed: int = 0) -> MacroMesh:
    """Member of one of the quadrilateral mesh families at subdivision n.

    structured:    uniform n x n squares (or cubes in 3D).
    parallelogram: a mapped 4 x 4 coarse grid refined uniformly, so cells
                   deviate from parallelograms by O(h^2).
    smooth:        image of the uniform grid under a fixed smooth map.
    random:        uniform grid with interior vertices perturbed inside a
                   circle of radius h^2, deterministic per seed.
    """
    if family == "structured":
        return build_structured(n, dim=dim)
    if dim != 2:
        raise ValueError("distorted families are 2D only")
    if family == "parallelogram":
        n0 = 4
        if n % n0 != 0 or (n // n0) & (n // n0 - 1):
            raise ValueError("parallelogram family needs n = 4 * 2^k")
        mesh = apply_map(build_structured(n0), parallelogram_seed_map)
        while mesh.h > 1.0 / n + 1e-12:
            mesh = refine_uniform(mesh)
        return mesh
    if family == "smooth":
        return apply_map(build_structured(n), smooth_map)
    if family == "random":
        return perturb_random(build_structured(n), seed=seed)
    raise ValueError(f"unknown mesh family {family!r}")


def darcy_case() -> dict:
    """Manufactured Darcy problem: p = sin(pi x) sin(pi y), unit mobility."""

    def p_exact(pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.sin(PI * x) * np.sin(PI * y)

    def velocity(pts):
        x, y = pts[..., 0], pts[..., 1]
        return -PI * np.stack([np.cos(PI * x) * np.sin(PI * y),
                               np.sin(PI * x) * np.cos(PI * y)], axis=-1)

    def f(pts):
        x, y = pts[..., 0], pts[..., 1]
        return 2 * PI**2 * np.sin(PI * x) * np.sin(PI * y)

    return {"pressure": p_exact, "velocity": velocity, "f": f}


def stokes_case() -> dict:
    """Divergence-free velocity from a biquartic stream function.

    u = curl(psi) with psi = x^2 (1-x)^2 y^2 (1-y)^2 (so u = 0 on the whole
    boundary), pressure p = x^3 + y^3 - 1/2 (zero mean), f = -Lap(u) + grad p.
    """

    def XY(t):
        X = t**2 * (1 - t)**2
        X1 = 2 * t - 6 * t**2 + 4 * t**3
        X2 = 2 - 12 * t + 12 * t**2
        X3 = -12 + 24 * t
        return X, X1, X2, X3

    def velocity(pts):
        x, y = pts[..., 0], pts[..., 1]
        X, X1, _, _ = XY(x)
        Y, Y1, _, _ = XY(y)
        return np.stack([X * Y1, -X1 * Y], axis=-1)

    def p_exact(pts):
        x, y = pts[..., 0], pts[..., 1]
        return x**3 + y**3 - 0.5

    def f(pts):
        x, y = pts[..., 0], pts[..., 1]
        X, X1, X2, X3 = XY(x)
        Y, Y1, Y2, Y3 = XY(y)
        f1 = -(X2 * Y1 + X * Y3) + 3 * x**2
        f2 = (X3 * Y + X1 * Y2) + 3 * y**2
        return np.stack([f1, f2], axis=-1)

    return {"velocity": velocity, "pressure": p_exact, "f": f}


def fd_gradient(fn: Callable, pts: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of a vectorized field.

    fn maps (npts, d) -> (npts, ...); returns (npts, ..., d)."""
    pts = np.asarray(pts, dtype=float)
    d = pts.shape[-1]
    cols = []
    for j in range(d):
        dp = np.zeros_like(pts)
        dp[..., j] = h
        cols.append((np.asarray(fn(pts + dp)) - np.asarray(fn(pts - dp)))
                    / (2 * h))
    return np.stack(cols, axis=-1)


def fd_divergence_of_tensor(fn: Callable, pts: np.ndarray,
                            h: float = 1e-6) -> np.ndarray:
    """Row-wise divergence (div T)_i = sum_j dT_ij/dx_j by central FD."""
    g = fd_gradient(fn, pts, h=h)     # (npts, d, d, d): T_ij, x_k
    return np.einsum("...ijj->...i", g)
