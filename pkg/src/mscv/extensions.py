"""Darcy-flow and Stokes discretizations on the same vertex-block machinery.

Darcy uses one scalar flux unknown per primal half-facet (a single "row" of
the stress space), eliminated per interaction region into a cell-centered
SPD pressure system.  Stokes keeps the full velocity gradient as the
subcell-wise tensor unknown, eliminates it per region, and solves the
resulting velocity-pressure saddle system with a per-region pressure and a
zero-mean gauge.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import cell_measures
from .fespace import StressBasis, stress_basis
from .mesh import SubMesh
from .reduction import solve_spd

_NPER = {2: 4, 3: 8}


def _region_scalar_blocks(sub: SubMesh, basis: StressBasis):
    """Per-region scalar flux Gram matrix and cell coupling.

    Returns lists over regions: half-facet ids, adjacent cell ids,
    K (m x m) with K_ij = sum_E |E| b_i . b_j, and D (m x ncell) with the
    +-1 flux-to-cell incidence."""
    d = sub.dim
    nper = _NPER[d]
    hfs_all, cells_all, Ks, Ds = [], [], [], []
    for v in range(sub.num_regions):
        hfs = sub.region_halffacets[v]
        subs = sub.region_subcells[v]
        pos = {hf: i for i, hf in enumerate(hfs)}
        m = len(hfs)
        cells = np.unique(subs // nper)
        cpos = {c: i for i, c in enumerate(cells)}
        K = np.zeros((m, m))
        for sc in subs:
            local = sub.subcell_halffacets[sc]
            B = np.empty((len(local), d))
            for i, hf in enumerate(local):
                side = 0 if sub.hf_subcells[hf, 0] == sc else 1
                B[i] = basis.vals[hf, side]
            idx = np.array([pos[hf] for hf in local])
            K[np.ix_(idx, idx)] += sub.subcell_measure[sc] * (B @ B.T)
        D = np.zeros((m, len(cells)))
        for i, hf in enumerate(hfs):
            for side, sign in ((0, 1.0), (1, -1.0)):
                sc = sub.hf_subcells[hf, side]
                if sc >= 0:
                    D[i, cpos[sc // nper]] += sign
        hfs_all.append(hfs)
        cells_all.append(cells)
        Ks.append(K)
        Ds.append(D)
    return hfs_all, cells_all, Ks, Ds


def _subcell_vectors(sub: SubMesh, basis: StressBasis,
                     flux: np.ndarray) -> np.ndarray:
    """Constant vector per subcell from scalar half-facet fluxes."""
    d = sub.dim
    out = np.zeros((sub.num_subcells, d))
    for hf in range(sub.num_halffacets):
        for side in range(2):
            sc = sub.hf_subcells[hf, side]
            if sc >= 0:
                out[sc] += flux[hf] * basis.vals[hf, side]
    return out


@dataclass
class DarcySolution:
    """Cell pressures with the velocity recovered from local elimination."""

    pressure: np.ndarray        # (nc,)
    flux: np.ndarray            # (nhf,) scalar normal fluxes
    velocity: np.ndarray        # (nsub, d) constant per subcell
    iterations: int
    solve_seconds: float

    def subcell_velocity(self) -> np.ndarray:
        return self.velocity


def darcy_matrices(sub: SubMesh):
    """Global sparse (K, D) of the mixed Darcy system (oracle path)."""
    basis = stress_basis(sub)
    hfs_all, cells_all, Ks, Ds = _region_scalar_blocks(sub, basis)
    nhf = sub.num_halffacets
    nc = sub.macro.num_cells
    rows, cols, vals = [], [], []
    rD, cD, vD = [], [], []
    for v in range(sub.num_regions):
        idx = hfs_all[v]
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel()), cols.append(c.ravel()), vals.append(Ks[v].ravel())
        r, c = np.meshgrid(idx, cells_all[v], indexing="ij")
        rD.append(r.ravel()), cD.append(c.ravel()), vD.append(Ds[v].ravel())
    K = sps.csr_matrix((np.concatenate(vals),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(nhf, nhf))
    D = sps.csr_matrix((np.concatenate(vD),
                        (np.concatenate(rD), np.concatenate(cD))),
                       shape=(nhf, nc))
    return K, D


def darcy_rhs(sub: SubMesh, f: Optional[Callable],
              p_bc: Optional[Callable]) -> tuple[np.ndarray, np.ndarray]:
    """Source cell data F and the boundary pressure lift G.

    The lift pairs -p_bc at the parent-facet midpoint with each boundary
    half-facet flux (pressure data enters the velocity equation with the
    sign opposite to the elasticity displacement lift)."""
    macro = sub.macro
    F = np.zeros(macro.num_cells)
    if f is not None:
        F = (np.asarray(f(sub.cell_centers), dtype=float)
             * cell_measures(sub))
    G = np.zeros(sub.num_halffacets)
    if p_bc is not None:
        if sub.dim == 2:
            for e in np.flatnonzero(macro.edge_cells[:, 1] == -1):
                mid = 0.5 * (macro.vertices[macro.edge_verts[e, 0]]
                             + macro.vertices[macro.edge_verts[e, 1]])
                val = -float(np.asarray(p_bc(mid[None, :])).ravel()[0])
                G[2 * e] = G[2 * e + 1] = val
        else:
            for fc in np.flatnonzero(macro.face_cells[:, 1] == -1):
                ctr = macro.vertices[macro.face_verts[fc]].mean(axis=0)
                val = -float(np.asarray(p_bc(ctr[None, :])).ravel()[0])
                G[4 * fc:4 * fc + 4] = val
    return F, G


def solve_darcy(sub: SubMesh, f: Optional[Callable] = None,
                p_bc: Optional[Callable] = None, solver: str = "auto",
                tol: float = 1e-12) -> DarcySolution:
    """Velocity elimination per region, then the SPD cell pressure solve.

    Solves  u = -grad p,  div u = f  with Dirichlet pressure data p_bc.
    """
    basis = stress_basis(sub)
    hfs_all, cells_all, Ks, Ds = _region_scalar_blocks(sub, basis)
    F, G = darcy_rhs(sub, f, p_bc)

    nc = sub.macro.num_cells
    t0 = time.perf_counter()
    rows, cols, vals = [], [], []
    rhs = -F.copy()
    chols, XDs, XGs = [], [], []
    for v in range(sub.num_regions):
        ch = sla.cho_factor(Ks[v])
        XD = sla.cho_solve(ch, Ds[v])
        XG = sla.cho_solve(ch, G[hfs_all[v]])
        S = Ds[v].T @ XD                       # D^T K^-1 D
        b = Ds[v].T @ XG
        cells = cells_all[v]
        r, c = np.meshgrid(cells, cells, indexing="ij")
        rows.append(r.ravel()), cols.append(c.ravel()), vals.append(S.ravel())
        np.add.at(rhs, cells, b)
        chols.append(ch)
        XDs.append(XD)
        XGs.append(XG)
    A = sps.csr_matrix((np.concatenate(vals),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(nc, nc))
    # (D^T K^-1 D) y = D^T K^-1 G - F with y = -p
    y, iters = solve_spd(A, rhs, tol=tol, method=solver)
    pressure = -y

    flux = np.zeros(sub.num_halffacets)
    for v in range(sub.num_regions):
        flux[hfs_all[v]] = XGs[v] - XDs[v] @ y[cells_all[v]]
    velocity = _subcell_vectors(sub, basis, flux)
    return DarcySolution(pressure=pressure, flux=flux, velocity=velocity,
                         iterations=iters,
                         solve_seconds=time.perf_counter() - t0)


def darcy_mass_balance(sub: SubMesh, sol: DarcySolution,
                       f: Optional[Callable]) -> np.ndarray:
    """Per-cell residual  integral_dM u.n - integral_M f."""
    nper = _NPER[sub.dim]
    F, _ = darcy_rhs(sub, f, None)
    res = -F
    for hf in range(sub.num_halffacets):
        for side, sign in ((0, 1.0), (1, -1.0)):
            sc = sub.hf_subcells[hf, side]
            if sc >= 0:
                res[sc // nper] += sign * sol.flux[hf]
    return res


def darcy_full_saddle(sub: SubMesh, f: Optional[Callable],
                      p_bc: Optional[Callable]):
    """Direct solve of the unreduced mixed system (oracle).

    Returns (flux, pressure)."""
    K, D = darcy_matrices(sub)
    F, G = darcy_rhs(sub, f, p_bc)
    nc = sub.macro.num_cells
    A = sps.bmat([[K, D], [D.T, None]], format="csc")
    rhs = np.concatenate([G, F])
    x = spla.spsolve(A, rhs)
    return x[:sub.num_halffacets], -x[sub.num_halffacets:]


@dataclass
class StokesSolution:
    """Velocity gradient per subcell, cell velocity, region pressure."""

    gradient: np.ndarray        # (nsub, d, d)
    u: np.ndarray               # (nc, d)
    pressure: np.ndarray        # (nregion,) zero measure-weighted mean
    incompressibility: float    # max |b_h(u_h, q)| over unit basis q
    adjoint_defect: float       # max entry defect of the two adjoint pairs
    sigma_min: Optional[float]  # smallest singular value of the saddle matrix
    solve_seconds: float


def _stokes_coupling(sub: SubMesh) -> sps.csr_matrix:
    """E[(cell,comp), region] = sum over primal half-facets of the region of
    |e| n_e paired with the velocity jump (outside value zero)."""
    d = sub.dim
    nper = _NPER[d]
    nc = sub.macro.num_cells
    rows, cols, vals = [], [], []
    for hf in range(sub.num_halffacets):
        reg = sub.hf_vertex[hf]
        w = sub.hf_measure[hf] * sub.hf_normal[hf]
        for side, sign in ((0, 1.0), (1, -1.0)):
            sc = sub.hf_subcells[hf, side]
            if sc < 0:
                continue
            cell = sc // nper
            for c in range(d):
                rows.append(d * cell + c)
                cols.append(reg)
                vals.append(sign * w[c])
    return sps.csr_matrix((vals, (rows, cols)),
                          shape=(d * nc, sub.num_regions))


def _stokes_coupling_dual(sub: SubMesh) -> sps.csr_matrix:
    """The same coupling assembled from dual-facet jumps of the pressure,
    b_h(v, q) = -sum_dual (v.n, [[q]]); must match the primal form."""
    d = sub.dim
    nper = _NPER[d]
    nc = sub.macro.num_cells
    rows, cols, vals = [], [], []
    for df in range(sub.num_dual_facets):
        s_plus, s_minus = sub.dual_subcells[df]
        cell = s_plus // nper
        w = sub.dual_measure[df] * sub.dual_normal[df]
        for reg, sign in ((sub.subcell_vertex[s_plus], -1.0),
                          (sub.subcell_vertex[s_minus], 1.0)):
            for c in range(d):
                rows.append(d * cell + c)
                cols.append(reg)
                vals.append(sign * w[c])
    return sps.csr_matrix((vals, (rows, cols)),
                          shape=(d * nc, sub.num_regions))


def stokes_rhs(sub: SubMesh, f: Optional[Callable]) -> np.ndarray:
    F = np.zeros(sub.macro.num_cells * sub.dim)
    if f is not None:
        F = (np.asarray(f(sub.cell_centers), dtype=float)
             * cell_measures(sub)[:, None]).ravel()
    return F


def _coupling_kernel(E: sps.spmatrix, rel_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the (numerical) kernel of the pressure coupling.

    Constants are always in the kernel; topologically uniform grids add a
    vertex checkerboard mode.  Computed from the dense eigendecomposition
    of E^T E, keeping eigenvectors below rel_tol * max eigenvalue.
    """
    G = (E.T @ E).toarray()
    w, V = np.linalg.eigh(G)
    keep = w < rel_tol * max(w[-1], 1e-300)
    if not np.any(keep):
        keep = np.zeros_like(w, dtype=bool)
        keep[0] = True
    return V[:, keep]


def solve_stokes(sub: SubMesh, f: Optional[Callable] = None,
                 compute_sigma_min: bool = False) -> StokesSolution:
    """Gradient elimination per region, then the bordered (u, p) saddle solve.

    Solves  -Lap(u) + grad p = f,  div u = 0,  u = 0 on the boundary, with
    the pressure constant per interaction region.  The velocity is unique;
    the pressure is reported as the representative orthogonal to the
    discrete kernel of the coupling operator.  The adjoint consistency of
    the two coupling forms is verified on assembly.
    """
    d = sub.dim
    nper = _NPER[d]
    nc = sub.macro.num_cells
    basis = stress_basis(sub)
    hfs_all, cells_all, Ks, Ds = _region_scalar_blocks(sub, basis)

    t0 = time.perf_counter()
    # velocity-gradient Schur complement S = D^T M^-1 D (d x d blocks kron)
    rows, cols, vals = [], [], []
    XDs = []
    eye = np.eye(d)
    for v in range(sub.num_regions):
        ch = sla.cho_factor(Ks[v])
        XD = sla.cho_solve(ch, Ds[v])
        S = Ds[v].T @ XD
        cells = cells_all[v]
        udofs = (d * cells[:, None] + np.arange(d)).ravel()
        Sb = np.kron(S, eye)
        r, c = np.meshgrid(udofs, udofs, indexing="ij")
        rows.append(r.ravel()), cols.append(c.ravel()), vals.append(Sb.ravel())
        XDs.append(XD)
    S = sps.csr_matrix((np.concatenate(vals),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(d * nc, d * nc))

    E = _stokes_coupling(sub)
    Edual = _stokes_coupling_dual(sub)
    scale = max(np.abs(E.data).max(), 1e-300)
    adjoint_defect = float(np.abs((E - Edual).toarray()).max() / scale)
    if adjoint_defect > 1e-12:
        raise AssertionError(
            f"adjoint coupling defect {adjoint_defect:.2e}; the primal and "
            "dual assemblies of the pressure coupling disagree")

    F = stokes_rhs(sub, f)
    nreg = sub.num_regions
    # The pressure is determined only up to the kernel of the coupling
    # operator (constants always; on topologically uniform grids also a
    # vertex checkerboard).  Border the saddle system with an orthonormal
    # kernel basis Z so the solve is nonsingular and returns the pressure
    # representative with zero component in that kernel.
    Z = _coupling_kernel(E)
    A = sps.bmat([[S, E, None],
                  [E.T, None, Z],
                  [None, Z.T, None]], format="csc")
    rhs = np.concatenate([F, np.zeros(nreg + Z.shape[1])])
    x = spla.spsolve(A, rhs)
    u = x[:d * nc].reshape(nc, d)
    p = x[d * nc:d * nc + nreg]

    incompress = float(np.abs(E.T @ x[:d * nc]).max())

    # recover the gradient: M W = -D u per region
    W = np.zeros(d * sub.num_halffacets)
    for v in range(sub.num_regions):
        uloc = x[:d * nc].reshape(nc, d)[cells_all[v]].ravel()
        wloc = -np.kron(XDs[v], eye) @ uloc
        idx = (d * hfs_all[v][:, None] + np.arange(d)).ravel()
        W[idx] = wloc
    gradient = np.zeros((sub.num_subcells, d, d))
    for hf in range(sub.num_halffacets):
        for side in range(2):
            sc = sub.hf_subcells[hf, side]
            if sc >= 0:
                gradient[sc] += np.outer(W[d * hf:d * hf + d],
                                         basis.vals[hf, side])

    sigma_min = None
    if compute_sigma_min:
        sigma_min = float(np.linalg.svd(A.toarray(), compute_uv=False)[-1])

    return StokesSolution(gradient=gradient, u=u, pressure=p,
                          incompressibility=incompress,
                          adjoint_defect=adjoint_defect,
                          sigma_min=sigma_min,
                          solve_seconds=time.perf_counter() - t0)
