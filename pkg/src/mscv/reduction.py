"""Vertex-local elimination of stress (and rotation) to SPD cell systems.

Stage 1 eliminates the stress unknowns region by region using the dense
Cholesky factor of each compliance block, producing the SPD Schur system

    [ D^T K^-1 D    D^T K^-1 C^T ] [  u  ]   [ D^T K^-1 G + F ]
    [ C  K^-1 D     C  K^-1 C^T  ] [gamma] = [ C  K^-1 G      ]

For method "1"/"1-scaled" the rotation block is itself block diagonal over
regions, so stage 2 eliminates gamma locally as well, leaving a cell-centered
SPD system for the displacement alone.  Back-substitution recovers gamma and
then the stress dofs exactly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.linalg import cho_factor, cho_solve

from .assembly import VertexBlockSystem


@dataclass
class SchurData:
    """Per-region data retained for back-substitution."""

    chol_K: object          # cho_factor of the compliance block
    XG: np.ndarray          # K^-1 G_loc
    XD: np.ndarray          # K^-1 D_loc
    XC: np.ndarray          # K^-1 C_loc^T
    Suu: np.ndarray
    Sur: np.ndarray
    Srr: np.ndarray
    bu: np.ndarray
    br: np.ndarray


@dataclass
class ReducedSystem:
    blocks: VertexBlockSystem
    kind: str               # "m2" (u+rotation) or "m3" (u only)
    matrix: sps.csr_matrix
    rhs: np.ndarray
    F: np.ndarray
    G: np.ndarray
    region_data: list = field(repr=False, default_factory=list)
    rot_solve: Optional[list] = field(repr=False, default=None)


@dataclass
class Solution:
    u: np.ndarray               # (num_cells, d)
    rotation: np.ndarray        # (num_entities, rot_comps)
    sigma: np.ndarray           # stress dof vector
    subcell_stress: np.ndarray  # (num_subcells, d, d)
    iterations: int = 0
    solve_seconds: float = 0.0


def eliminate_stress(blocks: VertexBlockSystem, F: np.ndarray,
                     G: np.ndarray) -> ReducedSystem:
    """Stage 1: region-local stress elimination to the (u, rotation) system."""
    sub = blocks.sub
    lay = blocks.layout
    nu, nr = lay.num_displacement, lay.num_rotation
    nz = nu + nr
    rows, cols, vals = [], [], []
    rhs = np.zeros(nz)
    rhs[:nu] += F
    data = []

    for v in range(sub.num_regions):
        K = blocks.K[v]
        D = blocks.D[v]
        Ct = blocks.C[v].T
        sidx = blocks.stress_dofs[v]
        uidx = blocks.u_dofs[v]
        gidx = blocks.rot_dofs[v] + nu
        Gl = G[sidx]

        ch = cho_factor(K, lower=True)
        XD = cho_solve(ch, D)
        XC = cho_solve(ch, Ct)
        XG = cho_solve(ch, Gl)

        Suu = D.T @ XD
        Sur = D.T @ XC
        Srr = Ct.T @ XC
        bu = D.T @ XG
        br = Ct.T @ XG

        data.append(SchurData(chol_K=ch, XG=XG, XD=XD, XC=XC,
                              Suu=Suu, Sur=Sur, Srr=Srr, bu=bu, br=br))

        zidx = np.concatenate([uidx, gidx])
        S = np.block([[Suu, Sur], [Sur.T, Srr]])
        r, c = np.meshgrid(zidx, zidx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(S.ravel())
        rhs[uidx] += bu
        rhs[gidx] += br

    A = sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nz, nz))
    return ReducedSystem(blocks=blocks, kind="m2", matrix=A, rhs=rhs,
                         F=F, G=G, region_data=data)


def eliminate_rotation(m2: ReducedSystem) -> ReducedSystem:
    """Stage 2 (methods "1"/"1-scaled"): local rotation elimination."""
    blocks = m2.blocks
    lay = blocks.layout
    if lay.method == "2":
        raise ValueError("rotation elimination is region-local only for "
                         "per-region rotations (methods '1'/'1-scaled')")
    nu = lay.num_displacement
    rows, cols, vals = [], [], []
    rhs = np.zeros(nu)
    rhs[:] += m2.F
    rot_solve = []

    for v, dat in enumerate(m2.region_data):
        uidx = blocks.u_dofs[v]
        chR = cho_factor(dat.Srr, lower=True)
        Y = cho_solve(chR, dat.Sur.T)          # Srr^-1 Sru
        yb = cho_solve(chR, dat.br)            # Srr^-1 br
        Sred = dat.Suu - dat.Sur @ Y
        bred = dat.bu - dat.Sur @ yb
        rot_solve.append((chR, dat.Sur.T, dat.br))

        r, c = np.meshgrid(uidx, uidx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(Sred.ravel())
        rhs[uidx] += bred

    A = sps.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nu, nu))
    return ReducedSystem(blocks=blocks, kind="m3", matrix=A, rhs=rhs,
                         F=m2.F, G=m2.G, region_data=m2.region_data,
                         rot_solve=rot_solve)


def solve_spd(A: sps.spmatrix, b: np.ndarray, tol: float = 1e-12,
              method: str = "auto") -> tuple[np.ndarray, int]:
    """Solve an SPD sparse system; returns (x, iteration count).

    method: "dense" (Cholesky), "cg" (Jacobi-preconditioned), "direct"
    (sparse LU), or "auto" (dense below 2000 unknowns, else direct).
    Iteration count is 0 for the factorization paths.
    """
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= 2000 else "direct"
    if method == "dense":
        ch = cho_factor(A.toarray(), lower=True)
        return cho_solve(ch, b), 0
    if method == "direct":
        return spla.spsolve(A.tocsc(), b), 0
    if method == "cg":
        dinv = 1.0 / A.diagonal()
        M = spla.LinearOperator(A.shape, matvec=lambda x: dinv * x)
        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        maxiter = int(20 * np.sqrt(n)) + 10
        x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter, M=M,
                          callback=count)
        if info != 0:
            raise RuntimeError(f"CG failed to converge in {maxiter} iterations")
        return x, iters
    raise ValueError(f"unknown solver method '{method}'")


def recover_fields(reduced: ReducedSystem, z: np.ndarray,
                   iterations: int = 0,
                   solve_seconds: float = 0.0) -> Solution:
    """Back-substitute (u [, gamma]) to the full (sigma, u, gamma) triple."""
    blocks = reduced.blocks
    sub = blocks.sub
    lay = blocks.layout
    d = sub.dim
    rc = lay.rot_comps
    nu = lay.num_displacement

    if reduced.kind == "m2":
        u = z[:nu]
        gamma = z[nu:]
    else:
        u = z
        gamma = np.zeros(lay.num_rotation)
        for v, (chR, Sru, br) in enumerate(reduced.rot_solve):
            uloc = u[blocks.u_dofs[v]]
            gamma[blocks.rot_dofs[v]] = cho_solve(chR, br - Sru @ uloc)

    sigma = np.zeros(lay.num_stress)
    for v, dat in enumerate(reduced.region_data):
        uloc = u[blocks.u_dofs[v]]
        gloc = gamma[blocks.rot_dofs[v]]
        sigma[blocks.stress_dofs[v]] = (dat.XG - dat.XD @ uloc - dat.XC @ gloc)

    nper = 4 if d == 2 else 8
    W = np.zeros((sub.num_subcells, d, d))
    for sc in range(sub.num_subcells):
        for hf in sub.subcell_halffacets[sc]:
            side = 0 if sub.hf_subcells[hf, 0] == sc else 1
            b = blocks.basis.vals[hf, side]
            for r in range(d):
                W[sc, r] += sigma[d * hf + r] * b

    return Solution(u=u.reshape(-1, d), rotation=gamma.reshape(-1, rc),
                    sigma=sigma, subcell_stress=W,
                    iterations=iterations, solve_seconds=solve_seconds)


def solve_elasticity(blocks: VertexBlockSystem, F: np.ndarray, G: np.ndarray,
                     solver: str = "auto", tol: float = 1e-12) -> Solution:
    """Full pipeline: eliminate, solve the SPD system, back-substitute."""
    t0 = time.perf_counter()
    m2 = eliminate_stress(blocks, F, G)
    if blocks.layout.method == "2":
        reduced = m2
    else:
        reduced = eliminate_rotation(m2)
    z, iters = solve_spd(reduced.matrix, reduced.rhs, tol=tol, method=solver)
    return recover_fields(reduced, z, iterations=iters,
                          solve_seconds=time.perf_counter() - t0)
