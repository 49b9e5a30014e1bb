"""Manufactured solutions: internal consistency via finite differences."""
import numpy as np
import pytest

from mscv.problems import (build_family_mesh, darcy_case, example1,
                           example2_3d, example3_hetero,
                           example4_incompressible, fd_divergence_of_tensor,
                           fd_gradient, stokes_case)


def _interior_points(dim, m=7, lo=0.12, hi=0.88, skip=None):
    axes = [np.linspace(lo, hi, m)] * dim
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grid], axis=-1)
    if skip is not None:
        pts = pts[skip(pts)]
    return pts


def _check_case(case, pts, tol_sigma, tol_f, tol_gamma):
    lam = case.lam(pts)
    mu = case.mu(pts)
    grad = fd_gradient(case.u, pts)
    eps = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    d = pts.shape[-1]
    tr = np.einsum("...ii->...", eps)
    sig_fd = 2 * mu[..., None, None] * eps \
        + lam[..., None, None] * tr[..., None, None] * np.eye(d)
    sig = np.asarray(case.sigma(pts))
    scale = max(np.abs(sig).max(), 1.0)
    assert np.max(np.abs(sig - sig_fd)) / scale < tol_sigma

    div = fd_divergence_of_tensor(case.sigma, pts)
    f = np.asarray(case.f(pts))
    fscale = max(np.abs(f).max(), 1.0)
    assert np.max(np.abs(f + div)) / fscale < tol_f

    gam = np.asarray(case.gamma(pts))
    if d == 2:
        gam_fd = 0.5 * (grad[..., 1, 0] - grad[..., 0, 1])[..., None]
    else:
        gam_fd = 0.5 * np.stack([grad[..., 2, 1] - grad[..., 1, 2],
                                 grad[..., 0, 2] - grad[..., 2, 0],
                                 grad[..., 1, 0] - grad[..., 0, 1]], axis=-1)
    gscale = max(np.abs(gam).max(), 1.0)
    assert np.max(np.abs(gam - gam_fd)) / gscale < tol_gamma


def test_example1_consistency():
    pts = _interior_points(2)
    _check_case(example1(), pts, 1e-8, 1e-6, 1e-9)


def test_example2_3d_consistency():
    pts = _interior_points(3, m=5)
    _check_case(example2_3d(), pts, 1e-8, 1e-6, 1e-9)


def test_example3_consistency_away_from_interface():
    case = example3_hetero()

    def away(p):
        d1 = np.min(np.abs(p - 1.0 / 3.0), axis=-1)
        d2 = np.min(np.abs(p - 2.0 / 3.0), axis=-1)
        return np.minimum(d1, d2) > 0.02

    pts = _interior_points(2, m=11, skip=away)
    _check_case(case, pts, 1e-7, 1e-5, 1e-8)
    # the scaled multiplier is smooth across the coefficient jump
    sg = np.asarray(case.scaled_gamma(pts))
    expect = 2.0 * case.mu(pts)[:, None] * np.asarray(case.gamma(pts))
    assert np.allclose(sg, expect.reshape(sg.shape), atol=1e-12)


def test_example4_consistency_moderate_lambda():
    # the nearly incompressible instance loses digits to cancellation in
    # lambda * tr(eps); validate structure at lambda = 1e3 instead
    pts = _interior_points(2)
    _check_case(example4_incompressible(lam=1e3), pts, 1e-6, 1e-5, 1e-9)


def test_example4_shear_free_and_fd_at_target_lambda():
    case = example4_incompressible()
    pts = _interior_points(2)
    sig = np.asarray(case.sigma(pts))
    assert np.max(np.abs(sig[..., 0, 1])) < 1e-14
    assert np.max(np.abs(sig[..., 1, 0])) < 1e-14
    _check_case(case, pts, 5e-4, 1e-5, 1e-9)


def test_boundary_data_is_displacement_trace():
    for case in (example1(), example3_hetero()):
        pts = _interior_points(2, m=4)
        assert np.allclose(case.boundary(pts), case.u(pts))


def test_darcy_case_consistency():
    data = darcy_case()
    pts = _interior_points(2)
    grad_p = fd_gradient(lambda x: data["pressure"](x)[..., None], pts)
    vel = data["velocity"](pts)
    assert np.max(np.abs(vel + grad_p[..., 0, :])) < 1e-6
    div_v = fd_divergence_of_tensor(
        lambda x: data["velocity"](x)[..., None, :], pts)
    f = data["f"](pts)
    assert np.max(np.abs(f - div_v[..., 0])) < 1e-4
    # homogeneous Dirichlet pressure on the boundary
    edge = np.array([[0.0, 0.3], [1.0, 0.7], [0.25, 0.0], [0.5, 1.0]])
    assert np.max(np.abs(data["pressure"](edge))) < 1e-14


def test_stokes_case_consistency():
    data = stokes_case()
    pts = _interior_points(2)
    grad_u = fd_gradient(data["velocity"], pts)
    div_u = grad_u[..., 0, 0] + grad_u[..., 1, 1]
    assert np.max(np.abs(div_u)) < 1e-7
    # f = -Laplacian(u) + grad(p), via FD of the closed forms
    h = 1e-5

    def lap(fn, p):
        out = -4.0 * fn(p)
        for k in range(2):
            for s in (-1.0, 1.0):
                q = p.copy()
                q[..., k] += s * h
                out = out + fn(q)
        return out / h ** 2

    lap_u = lap(data["velocity"], pts)
    gp = fd_gradient(lambda x: data["pressure"](x)[..., None], pts)[..., 0, :]
    f = data["f"](pts)
    scale = max(np.abs(f).max(), 1.0)
    assert np.max(np.abs(f + lap_u - gp)) / scale < 1e-4
    # no-slip boundary and zero-mean pressure
    edge = np.array([[0.0, 0.3], [1.0, 0.7], [0.25, 0.0], [0.5, 1.0]])
    assert np.max(np.abs(data["velocity"](edge))) < 1e-14
    xs = np.linspace(0.005, 0.995, 100)
    grid = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
    assert abs(np.mean(data["pressure"](grid))) < 1e-3


def test_family_mesh_size_and_determinism():
    for n in (4, 8):
        mesh = build_family_mesh("structured", n)
        assert np.isclose(mesh.h, 1.0 / n)
    a = build_family_mesh("random", 8, seed=5)
    b = build_family_mesh("random", 8, seed=5)
    assert np.array_equal(a.vertices, b.vertices)
    with pytest.raises(ValueError):
        build_family_mesh("structured", 8, dim=4)


def test_default_seed_resolutions():
    assert example1().default_seed_n == 4
    assert example3_hetero().default_seed_n == 6
    assert example4_incompressible().default_seed_n == 4
