"""Flux reconstruction, conservation checks, and error norms.

Norm conventions (what the convergence tables report):

* stress: relative L2 norm of the piecewise-constant subcell stress against
  the exact tensor, 3x3 Gauss per subcell, Frobenius inner product;
* mean stress: cell-measure-weighted RMS of |sigma(c_M) - mean(sigma_h)|
  over macro cells, normalized by the same quantity built from sigma(c_M)
  alone (c_M = vertex-average center, the subdivision point);
* displacement: cell-measure-weighted relative RMS of u(c_M) - u_M (the
  natural discrete L2 norm for a piecewise-constant field, and the one under
  which the method superconverges);
* rotation: for the per-cell multiplier, cell-center sampling as for u; for
  the per-vertex multiplier, vertex sampling weighted by interaction-region
  measure.  Point sampling (rather than integrating the exact field over the
  support) is required to see the multiplier's second-order rate;
* u_center: the absolute (not normalized) form of the displacement norm,
  used for the superconvergence rate check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import cell_measures
from .mesh import SubMesh
from .quadrature import subcell_rule
from .reduction import Solution

_TINY = 1e-300


@dataclass
class ErrorReport:
    """Relative error norms of one solve (absolute where flagged)."""

    sigma: float
    mean_sigma: float
    u: float
    gamma: float
    u_center: float          # absolute by definition
    absolute: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"sigma": self.sigma, "mean_sigma": self.mean_sigma,
                "u": self.u, "gamma": self.gamma, "u_center": self.u_center}


def _relative(num2: float, den2: float, flags: dict, key: str) -> float:
    """sqrt(num2/den2), falling back to the absolute value for zero data."""
    if den2 < _TINY:
        flags[key] = "absolute"
        return float(np.sqrt(num2))
    return float(np.sqrt(num2 / den2))


def mean_stress(sol: Solution, sub: SubMesh) -> np.ndarray:
    """Measure-weighted average of the subcell stresses per macro cell."""
    d = sub.dim
    nper = 4 if d == 2 else 8
    nc = sub.macro.num_cells
    parent = np.arange(sub.num_subcells) // nper
    acc = np.zeros((nc, d, d))
    np.add.at(acc, parent,
              sol.subcell_stress * sub.subcell_measure[:, None, None])
    return acc / cell_measures(sub)[:, None, None]


def region_measures(sub: SubMesh) -> np.ndarray:
    """Total measure of each interaction region."""
    out = np.empty(sub.num_regions)
    for v in range(sub.num_regions):
        out[v] = sub.subcell_measure[sub.region_subcells[v]].sum()
    return out


def error_norms(sol: Solution, sub: SubMesh, case, method: str,
                n_quad: int = 3) -> ErrorReport:
    """All error norms of a solve against a manufactured case."""
    d = sub.dim
    flags: dict = {}
    cm = cell_measures(sub)
    centers = sub.cell_centers

    # stress, true L2 over subcells
    pts, wq = subcell_rule(sub, n_quad)
    se = np.asarray(case.sigma(pts.reshape(-1, d))).reshape(
        pts.shape[0], pts.shape[1], d, d)
    diff = sol.subcell_stress[:, None, :, :] - se
    num2 = float(np.sum(wq * np.sum(diff * diff, axis=(2, 3))))
    den2 = float(np.sum(wq * np.sum(se * se, axis=(2, 3))))
    err_sigma = _relative(num2, den2, flags, "sigma")

    # mean stress against the exact tensor at cell centers
    ms = mean_stress(sol, sub)
    sc = np.asarray(case.sigma(centers))
    dms = ms - sc
    num2 = float(np.sum(cm * np.sum(dms * dms, axis=(1, 2))))
    den2 = float(np.sum(cm * np.sum(sc * sc, axis=(1, 2))))
    err_ms = _relative(num2, den2, flags, "mean_sigma")

    # displacement at cell centers
    uc = np.asarray(case.u(centers))
    du = sol.u - uc
    num2 = float(np.sum(cm * np.sum(du * du, axis=1)))
    den2 = float(np.sum(cm * np.sum(uc * uc, axis=1)))
    err_u = _relative(num2, den2, flags, "u")
    err_u_center = float(np.sqrt(num2))

    # rotation multiplier; the scaled variant solves for 2*mu*gamma
    exact_gamma: Callable = case.gamma
    if method == "1-scaled":
        if getattr(case, "scaled_gamma", None) is not None:
            exact_gamma = case.scaled_gamma
        else:
            def exact_gamma(x, _g=case.gamma, _mu=case.mu):
                g = np.asarray(_g(x))
                m = 2.0 * np.asarray(_mu(x))
                return g * (m[..., None] if g.ndim > m.ndim else m)
    gh = sol.rotation
    if method == "2":
        ge = np.atleast_2d(np.asarray(exact_gamma(centers)))
        dg = gh - ge
        num2 = float(np.sum(cm * np.sum(dg * dg, axis=1)))
        den2 = float(np.sum(cm * np.sum(ge * ge, axis=1)))
    else:
        verts = sub.macro.vertices
        rm = region_measures(sub)
        ge = np.atleast_2d(np.asarray(exact_gamma(verts)))
        dg = gh - ge
        num2 = float(np.sum(rm * np.sum(dg * dg, axis=1)))
        den2 = float(np.sum(rm * np.sum(ge * ge, axis=1)))
    err_gamma = _relative(num2, den2, flags, "gamma")

    return ErrorReport(sigma=err_sigma, mean_sigma=err_ms, u=err_u,
                       gamma=err_gamma, u_center=err_u_center,
                       absolute=flags)


def conservation_residual(sol: Solution, sub: SubMesh,
                          F: np.ndarray) -> np.ndarray:
    """Per-cell momentum balance  integral_dM sigma_h n + integral_M f.

    F is the assembled body-force vector (cell integrals).  The half-facet
    fluxes are exactly the stress unknowns, so the boundary integral is a
    signed sum of them; the solve drives this residual to solver tolerance.
    """
    d = sub.dim
    nper = 4 if d == 2 else 8
    nc = sub.macro.num_cells
    res = F.reshape(nc, d).copy()
    W = sol.sigma
    for hf in range(sub.num_halffacets):
        for side, sign in ((0, 1.0), (1, -1.0)):
            scell = sub.hf_subcells[hf, side]
            if scell < 0:
                continue
            res[scell // nper] += sign * W[d * hf:d * hf + d]
    return res


@dataclass
class Rt0Stress:
    """Normal-continuous reconstruction: one lowest-order Raviart-Thomas
    field per stress row, described by total outward edge fluxes per cell."""

    cell_edges: np.ndarray      # (nc, 4) parent edge ids, (bottom,right,top,left)
    fluxes: np.ndarray          # (nc, d, 4) outward fluxes in that edge order
    corners: np.ndarray         # (nc, 4, d) cell corners
    measures: np.ndarray        # (nc,)

    def divergence(self) -> np.ndarray:
        """Constant per-cell divergence of each row, (nc, d)."""
        return self.fluxes.sum(axis=2) / self.measures[:, None]

    def evaluate(self, cell: int, ref: np.ndarray) -> np.ndarray:
        """Row tensors at reference points of one cell via the Piola map.

        ref: (m, 2) points in [0,1]^2; returns (m, d, 2)."""
        q = self.fluxes[cell]                     # (d, 4): B, R, T, L
        xh, yh = ref[:, 0], ref[:, 1]
        vhat = np.empty((len(ref), q.shape[0], 2))
        vhat[..., 0] = (-q[:, 3] + (q[:, 1] + q[:, 3]) * xh[:, None])
        vhat[..., 1] = (-q[:, 0] + (q[:, 2] + q[:, 0]) * yh[:, None])
        p1, p2, p3, p4 = self.corners[cell]
        dx = (p2 - p1)[None, :] * (1 - yh)[:, None] \
            + (p3 - p4)[None, :] * yh[:, None]    # (m, 2)
        dy = (p4 - p1)[None, :] * (1 - xh)[:, None] \
            + (p3 - p2)[None, :] * xh[:, None]
        det = dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]
        J = np.stack([dx, dy], axis=-1)           # (m, 2, 2) columns dx, dy
        out = np.einsum("mab,mrb->mra", J, vhat) / det[:, None, None]
        return out


def project_rt0(sol: Solution, sub: SubMesh) -> Rt0Stress:
    """Flux projection onto the Raviart-Thomas space on macro cells.

    The coefficient of a cell edge is the total flux of sigma_h through it,
    i.e. the sum of the two half-edge stress unknowns; normal continuity is
    inherited from the single-valuedness of those unknowns, and the per-cell
    divergence reproduces the cell-averaged body force by the discrete
    momentum balance.
    """
    if sub.dim != 2:
        raise ValueError("flux reconstruction implemented on quadrilaterals")
    macro = sub.macro
    d = sub.dim
    nc = macro.num_cells
    index = {}
    for e, (a, b) in enumerate(macro.edge_verts):
        index[(a, b)] = e
        index[(b, a)] = e
    cell_edges = np.empty((nc, 4), dtype=int)
    fluxes = np.empty((nc, d, 4))
    W = sol.sigma
    for M in range(nc):
        vs = macro.cells[M]
        for k in range(4):
            e = index[(vs[k], vs[(k + 1) % 4])]
            cell_edges[M, k] = e
            # sign: +1 when the stored normal points out of this cell
            sc0 = sub.hf_subcells[2 * e, 0]
            sign = 1.0 if sc0 >= 0 and sc0 // 4 == M else -1.0
            for r in range(d):
                fluxes[M, r, k] = sign * (W[d * (2 * e) + r]
                                          + W[d * (2 * e + 1) + r])
    return Rt0Stress(cell_edges=cell_edges, fluxes=fluxes,
                     corners=macro.cell_corner_coords(),
                     measures=cell_measures(sub))
