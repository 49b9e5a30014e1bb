"""Shared helpers for the test suite."""
import numpy as np

from mscv import (assemble_blocks, assemble_rhs, build_layout,
                  error_norms, solve_elasticity, subdivide)
from mscv.assembly import MaterialField
from mscv.problems import build_family_mesh


def run_case(case, n, method, family="structured", seed=20250814,
             solver="auto"):
    """Assemble and solve one manufactured problem; return all artifacts."""
    mesh = build_family_mesh(family, n, dim=case.dim, seed=seed)
    sub = subdivide(mesh)
    layout = build_layout(sub, method)
    blocks = assemble_blocks(sub, layout, case.material(sub))
    F, G = assemble_rhs(sub, layout, case.f, case.boundary)
    sol = solve_elasticity(blocks, F, G, solver=solver)
    return sub, blocks, F, G, sol


def linear_state(dim, lam, mu, rng=None):
    """A linear displacement field and its constant stress tensor."""
    if rng is None:
        A = (np.arange(1, dim * dim + 1, dtype=float)
             .reshape(dim, dim) * 0.1)
        A[0, 1] *= -1.0
        b = np.linspace(0.3, 0.7, dim)
    else:
        A = rng.uniform(-1.0, 1.0, (dim, dim))
        b = rng.uniform(-1.0, 1.0, dim)
    eps = 0.5 * (A + A.T)
    sig = 2.0 * mu * eps + lam * np.trace(eps) * np.eye(dim)

    def u(x):
        return x @ A.T + b

    def f(x):
        return np.zeros_like(x)

    return u, f, sig


def solve_patch(sub, method, lam, mu, u, f):
    mat = MaterialField.constant(sub.macro.num_cells, lam, mu)
    layout = build_layout(sub, method)
    blocks = assemble_blocks(sub, layout, mat)
    F, G = assemble_rhs(sub, layout, f, u)
    return solve_elasticity(blocks, F, G)
