"""Vertex-local elimination, SPD solves, and oracle equivalences."""
import numpy as np
import pytest
import scipy.sparse as sps

from mscv.assembly import (MaterialField, assemble_blocks, assemble_full_saddle,
                           assemble_rhs, saddle_residual)
from mscv.fespace import build_layout
from mscv.mesh import build_structured, perturb_random, subdivide
from mscv.problems import example1
from mscv.reduction import (eliminate_rotation, eliminate_stress,
                            recover_fields, solve_elasticity, solve_spd)

from helpers import linear_state, solve_patch


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("method", ["1", "2", "1-scaled"])
def test_patch_linear_displacement_constant_stress(dim, method):
    lam, mu = 2.3, 1.7
    u, f, sig = linear_state(dim, lam, mu)
    sub = subdivide(build_structured(2, dim=dim))
    sol = solve_patch(sub, method, lam, mu, u, f)
    assert np.max(np.abs(sol.u - u(sub.cell_centers))) < 1e-10
    assert np.max(np.abs(sol.subcell_stress - sig)) < 1e-10
    # linear fields have zero rotation gradient: multiplier is constant
    skew = 0.5 if dim == 2 else 0.5
    assert np.std(sol.rotation, axis=0).max() < 1e-10


@pytest.mark.parametrize("method", ["1", "2"])
@pytest.mark.parametrize("n", [1, 2])
def test_reduced_equals_full_saddle(method, n):
    rng = np.random.default_rng(12345 + n)
    for _ in range(3):
        lam = rng.uniform(1.0, 100.0)
        mu = rng.uniform(1.0, 100.0)
        sub = subdivide(perturb_random(build_structured(n), seed=n + 7))
        lay = build_layout(sub, method)
        mat = MaterialField.constant(sub.macro.num_cells, lam, mu)
        blocks = assemble_blocks(sub, lay, mat)
        F = rng.standard_normal(lay.num_displacement)
        G = rng.standard_normal(lay.num_stress)
        sol = solve_elasticity(blocks, F, G, solver="dense")
        A, rhs = assemble_full_saddle(blocks, F, G)
        x = np.linalg.solve(A.toarray(), rhs)
        ns, nu = lay.num_stress, lay.num_displacement
        sig_full = x[:ns]
        u_full = x[ns:ns + nu].reshape(-1, sub.dim)
        scale = max(np.abs(x).max(), 1.0)
        assert np.max(np.abs(sol.sigma - sig_full)) < 1e-9 * scale
        assert np.max(np.abs(sol.u - u_full)) < 1e-9 * scale
        res = saddle_residual(blocks, F, G, sol.sigma, sol.u, sol.rotation)
        assert res < 1e-9


def test_rotation_elimination_matches_two_field_system():
    case = example1()
    sub = subdivide(build_structured(4))
    lay = build_layout(sub, "1")
    blocks = assemble_blocks(sub, lay, case.material(sub))
    F, G = assemble_rhs(sub, lay, case.f, case.boundary)
    m2 = eliminate_stress(blocks, F, G)
    z2, _ = solve_spd(m2.matrix, m2.rhs, method="dense")
    sol2 = recover_fields(m2, z2)
    m3 = eliminate_rotation(m2)
    z3, _ = solve_spd(m3.matrix, m3.rhs, method="dense")
    sol3 = recover_fields(m3, z3)
    assert np.max(np.abs(sol2.u - sol3.u)) < 1e-10
    assert np.max(np.abs(sol2.rotation - sol3.rotation)) < 1e-10
    assert np.max(np.abs(sol2.sigma - sol3.sigma)) < 1e-9


def test_scaled_variant_matches_plain_on_homogeneous_material():
    lam, mu = 87.0, 13.5
    case = example1(lam=lam, mu=mu)
    sub = subdivide(build_structured(4))
    sols = {}
    for method in ("1", "1-scaled"):
        lay = build_layout(sub, method)
        blocks = assemble_blocks(sub, lay, case.material(sub))
        F, G = assemble_rhs(sub, lay, case.f, case.boundary)
        sols[method] = solve_elasticity(blocks, F, G)
    a, b = sols["1"], sols["1-scaled"]
    assert np.max(np.abs(a.u - b.u)) < 1e-9
    assert np.max(np.abs(a.sigma - b.sigma)) < 1e-8
    # the scaled multiplier is 2*mu times the plain rotation
    assert np.max(np.abs(2 * mu * a.rotation - b.rotation)) < 1e-8


def test_solve_spd_backends_agree():
    rng = np.random.default_rng(99)
    B = rng.standard_normal((40, 40))
    A = sps.csr_matrix(B @ B.T + 40 * np.eye(40))
    b = rng.standard_normal(40)
    xd, itd = solve_spd(A, b, method="dense")
    xs, _ = solve_spd(A, b, method="direct")
    xc, itc = solve_spd(A, b, method="cg", tol=1e-13)
    assert itd == 0
    assert itc > 0
    assert np.allclose(xd, xs, atol=1e-9)
    assert np.allclose(xd, xc, atol=1e-7)
    xa, _ = solve_spd(A, b, method="auto")
    assert np.allclose(xd, xa, atol=1e-9)


def test_solution_metadata_populated():
    case = example1()
    sub = subdivide(build_structured(2))
    lay = build_layout(sub, "2")
    blocks = assemble_blocks(sub, lay, case.material(sub))
    F, G = assemble_rhs(sub, lay, case.f, case.boundary)
    sol = solve_elasticity(blocks, F, G, solver="cg", tol=1e-11)
    assert sol.iterations > 0
    assert sol.solve_seconds >= 0
    assert sol.subcell_stress.shape == (sub.num_subcells, 2, 2)
