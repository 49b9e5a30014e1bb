"""Degree-of-freedom layout and the broken piecewise-constant stress basis.

Stress rows live in the space of subcell-wise constant vectors whose normal
component is continuous across interior primal half-facets; the degrees of
freedom are the normal fluxes phi_e(v) = int_e v.n over half-facets e.  Basis
functions are normalized so that phi_{e'}(b_e) = delta_{ee'}: in 2D the value
of b_e on an adjacent subcell E is t' / ((t'.n_e) |e|), where t' is the
tangent of E's other half-edge; in 3D (axis-aligned cuboids) it is n_e/|e|.
Each basis function is supported on the one or two subcells adjacent to its
half-facet, so all basis interactions are local to one interaction region.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import SubMesh


@dataclass(frozen=True)
class DofLayout:
    """Flat index bookkeeping for one discretization.

    Stress dof ids are d*hf + row; displacement dof ids are d*cell + comp.
    Rotation dofs sit per interaction region (method "1"/"1-scaled") or per
    macro cell (method "2"), with d(d-1)/2 components each (1 in 2D, 3 in 3D).
    """

    dim: int
    method: str
    num_halffacets: int
    num_cells: int
    num_regions: int

    def __post_init__(self):
        if self.method not in ("1", "2", "1-scaled"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def rot_comps(self) -> int:
        return self.dim * (self.dim - 1) // 2

    @property
    def num_stress(self) -> int:
        return self.dim * self.num_halffacets

    @property
    def num_displacement(self) -> int:
        return self.dim * self.num_cells

    @property
    def num_rotation_entities(self) -> int:
        return self.num_regions if self.method != "2" else self.num_cells

    @property
    def num_rotation(self) -> int:
        return self.rot_comps * self.num_rotation_entities

    def stress_dof(self, hf: int, row: int) -> int:
        return self.dim * hf + row

    def displacement_dof(self, cell: int, comp: int) -> int:
        return self.dim * cell + comp

    def rotation_dof(self, entity: int, comp: int = 0) -> int:
        return self.rot_comps * entity + comp


def build_layout(sub: SubMesh, method: str) -> DofLayout:
    return DofLayout(
        dim=sub.dim,
        method=method,
        num_halffacets=sub.num_halffacets,
        num_cells=sub.macro.num_cells,
        num_regions=sub.num_regions,
    )


@dataclass
class StressBasis:
    """Per-half-facet basis values on the adjacent subcells.

    ``vals[hf, side]`` is the constant d-vector taken by the basis function
    of half-facet ``hf`` on subcell ``hf_subcells[hf, side]`` (zero row where
    there is no second subcell).  ``phi_{e}(b_e) = 1`` with n_e the submesh's
    global normal.
    """

    vals: np.ndarray  # (nhf, 2, d)

    def value(self, hf: int, sub_id: int, sub: SubMesh) -> np.ndarray:
        pair = sub.hf_subcells[hf]
        if sub_id == pair[0]:
            return self.vals[hf, 0]
        if sub_id == pair[1]:
            return self.vals[hf, 1]
        return np.zeros(self.vals.shape[2])


def stress_basis(sub: SubMesh) -> StressBasis:
    """Construct the normalized stress basis for every half-facet."""
    d = sub.dim
    nhf = sub.num_halffacets
    vals = np.zeros((nhf, 2, d))
    if d == 3:
        # axis-aligned quarter-faces: constant normal over the subcell,
        # automatically flux-free through the subcell's other quarter-faces
        v = sub.hf_normal / sub.hf_measure[:, None]
        vals[:, 0, :] = v
        vals[:, 1, :] = np.where(sub.hf_subcells[:, 1:2] >= 0, v, 0.0)
        return StressBasis(vals)

    verts = sub.macro.vertices
    # unit tangent of each half-edge, pointing from its macro vertex inward
    tdir = sub.hf_center - verts[sub.hf_vertex]
    tdir /= np.linalg.norm(tdir, axis=1)[:, None]

    for hf in range(nhf):
        n_e = sub.hf_normal[hf]
        meas = sub.hf_measure[hf]
        for side in range(2):
            sc = sub.hf_subcells[hf, side]
            if sc < 0:
                continue
            other = sub.other_halffacet(sc, hf)
            t = tdir[other]
            denom = (t @ n_e) * meas
            if abs(denom) < 1e-14 * np.linalg.norm(t):
                raise ValueError(
                    f"degenerate subcell corner at half-facet {hf}: tangents "
                    "collinear with the facet normal")
            vals[hf, side] = t / denom
    return StressBasis(vals)


def dof_matrix(sub: SubMesh, basis: StressBasis, vertex: int) -> np.ndarray:
    """Evaluate phi_{e_i}(b_{e_j}) over one interaction region, checking both
    sides of each half-facet (unisolvence and normal-continuity test)."""
    hfs = sub.region_halffacets[vertex]
    m = len(hfs)
    out = np.zeros((m, m))
    for i, ei in enumerate(hfs):
        n_i = sub.hf_normal[ei]
        meas = sub.hf_measure[ei]
        sides = [s for s in sub.hf_subcells[ei] if s >= 0]
        for j, ej in enumerate(hfs):
            fluxes = [basis.value(ej, sc, sub) @ n_i * meas for sc in sides]
            if len(fluxes) == 2 and abs(fluxes[0] - fluxes[1]) > 1e-12:
                raise AssertionError(
                    f"normal jump of basis {ej} across half-facet {ei}")
            out[i, j] = fluxes[0]
    return out
