"""Quadrilateral/cuboid macro meshes and their control-volume subdivision.

A macro mesh is a logically structured set of quadrilateral cells in 2D
(axis-aligned cuboids in 3D).  Each macro cell is subdivided by connecting an
interior point (the vertex average, which is the bilinear image of the
reference center) to the midpoints of its edges (face centers in 3D).  That
produces, per cell, 4 subcells in 2D and 8 in 3D.  The subdivision carries
three kinds of facets:

* primal half-facets: each macro edge split at its midpoint (each macro face
  split into 4 quarters in 3D); these carry the stress/velocity degrees of
  freedom and each one is associated with the macro vertex it touches;
* dual facets: the interior facets created by the subdivision (4 per cell in
  2D, 12 in 3D);
* interaction regions: for every macro vertex, the patch of subcells that
  touch it (4/2/1 subcells at interior/edge/corner vertices in 2D).

The submesh exposes flat numpy arrays for all of this so that assembly can be
written as loops over interaction regions with small dense blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Local corner numbering of a hexahedron (VTK order): bit pattern (i, j, k)
# per corner, i fastest.
_HEX_CORNER_BITS = np.array(
    [
        (0, 0, 0),
        (1, 0, 0),
        (1, 1, 0),
        (0, 1, 0),
        (0, 0, 1),
        (1, 0, 1),
        (1, 1, 1),
        (0, 1, 1),
    ],
    dtype=int,
)

# Local faces of a hexahedron, as corner index quadruples, outward-ordered.
_HEX_FACES = np.array(
    [
        (0, 3, 7, 4),  # -x
        (1, 2, 6, 5),  # +x
        (0, 1, 5, 4),  # -y
        (3, 2, 6, 7),  # +y
        (0, 1, 2, 3),  # -z
        (4, 5, 6, 7),  # +z
    ],
    dtype=int,
)


@dataclass
class MacroMesh:
    """A macro mesh of quadrilaterals (2D) or axis-aligned cuboids (3D).

    Attributes:
        dim: spatial dimension, 2 or 3.
        vertices: (nv, dim) float array of vertex coordinates.
        cells: (nc, 4) int array, counterclockwise corners, in 2D;
            (nc, 8) in VTK hexahedron order in 3D.
        h: nominal mesh size (side/n for structured builds; halved by
            uniform refinement; unchanged by vertex maps).
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    h: float

    # --- derived topology, built on construction ---
    edge_verts: np.ndarray = field(init=False)      # (ne, 2) sorted vertex ids
    edge_cells: np.ndarray = field(init=False)      # (ne, 2), -1 for boundary
    face_verts: Optional[np.ndarray] = field(init=False, default=None)  # 3D
    face_cells: Optional[np.ndarray] = field(init=False, default=None)  # 3D

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.cells = np.asarray(self.cells, dtype=int)
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.dim:
            raise ValueError("vertices must have shape (nv, dim)")
        corners = 4 if self.dim == 2 else 8
        if self.cells.ndim != 2 or self.cells.shape[1] != corners:
            raise ValueError(f"cells must have shape (nc, {corners})")
        if self.cells.size and (self.cells.min() < 0
                                or self.cells.max() >= len(self.vertices)):
            raise ValueError("cell corner index out of range")
        for c, quad in enumerate(self.cells):
            if len(set(quad.tolist())) != len(quad):
                raise ValueError(f"cell {c} repeats a vertex")
        if self.dim == 2:
            self._build_edges_2d()
        else:
            self._build_faces_3d()
            self._build_edges_3d()

    # ------------------------------------------------------------------
    def _build_edges_2d(self):
        index: dict[tuple[int, int], int] = {}
        everts = []
        ecells = []
        for c, quad in enumerate(self.cells):
            for k in range(4):
                a, b = quad[k], quad[(k + 1) % 4]
                key = (min(a, b), max(a, b))
                e = index.get(key)
                if e is None:
                    index[key] = len(everts)
                    everts.append(key)
                    ecells.append([c, -1])
                else:
                    if ecells[e][1] != -1:
                        raise ValueError("edge shared by more than two cells")
                    ecells[e][1] = c
        self.edge_verts = np.array(everts, dtype=int).reshape(-1, 2)
        self.edge_cells = np.array(ecells, dtype=int).reshape(-1, 2)

    def _build_faces_3d(self):
        index: dict[tuple, int] = {}
        fverts = []
        fcells = []
        for c, hexa in enumerate(self.cells):
            for loc in _HEX_FACES:
                quad = hexa[loc]
                key = tuple(sorted(quad.tolist()))
                f = index.get(key)
                if f is None:
                    index[key] = len(fverts)
                    fverts.append(quad.tolist())  # keep cyclic order
                    fcells.append([c, -1])
                else:
                    if fcells[f][1] != -1:
                        raise ValueError("face shared by more than two cells")
                    fcells[f][1] = c
        self.face_verts = np.array(fverts, dtype=int).reshape(-1, 4)
        self.face_cells = np.array(fcells, dtype=int).reshape(-1, 2)

    def _build_edges_3d(self):
        # Edges are only needed for counting/diagnostics in 3D.
        pairs = set()
        local_edges = [(0, 1), (1, 2), (2, 3), (3, 0),
                       (4, 5), (5, 6), (6, 7), (7, 4),
                       (0, 4), (1, 5), (2, 6), (3, 7)]
        for hexa in self.cells:
            for a, b in local_edges:
                va, vb = hexa[a], hexa[b]
                pairs.add((min(va, vb), max(va, vb)))
        self.edge_verts = np.array(sorted(pairs), dtype=int).reshape(-1, 2)
        self.edge_cells = np.empty((0, 2), dtype=int)

    # ------------------------------------------------------------------
    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def num_edges(self) -> int:
        return len(self.edge_verts)

    @property
    def num_faces(self) -> int:
        return 0 if self.face_verts is None else len(self.face_verts)

    def boundary_vertex_mask(self) -> np.ndarray:
        """Boolean mask of vertices lying on a boundary facet (topological)."""
        mask = np.zeros(self.num_vertices, dtype=bool)
        if self.dim == 2:
            bedges = self.edge_cells[:, 1] == -1
            mask[self.edge_verts[bedges].ravel()] = True
        else:
            bfaces = self.face_cells[:, 1] == -1
            mask[self.face_verts[bfaces].ravel()] = True
        return mask

    def cell_corner_coords(self) -> np.ndarray:
        """(nc, 4 or 8, dim) array of corner coordinates per cell."""
        return self.vertices[self.cells]

    def corner_jacobians_2d(self) -> np.ndarray:
        """(nc, 4) signed corner Jacobians of the bilinear maps (2D only)."""
        if self.dim != 2:
            raise ValueError("corner Jacobians are a 2D diagnostic")
        quad = self.cell_corner_coords()
        jac = np.empty((self.num_cells, 4))
        for k in range(4):
            nxt = quad[:, (k + 1) % 4] - quad[:, k]
            prv = quad[:, (k - 1) % 4] - quad[:, k]
            jac[:, k] = nxt[:, 0] * prv[:, 1] - nxt[:, 1] * prv[:, 0]
        return jac

    def max_diameter(self) -> float:
        """Largest distance between any two corners of a cell."""
        quad = self.cell_corner_coords()
        m = quad.shape[1]
        best = 0.0
        for a in range(m):
            for b in range(a + 1, m):
                d = np.linalg.norm(quad[:, a] - quad[:, b], axis=1).max()
                best = max(best, d)
        return float(best)


# ----------------------------------------------------------------------
# Builders and transformations
# ----------------------------------------------------------------------

def build_structured(n: int, dim: int = 2, side: float = 1.0) -> MacroMesh:
    """Uniform n×n (×n) grid on the unit square/cube scaled by ``side``.

    Vertices are numbered lexicographically with x fastest; 2D cells are
    counterclockwise, 3D cells use VTK hexahedron ordering.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if dim == 2:
        s = np.linspace(0.0, side, n + 1)
        X, Y = np.meshgrid(s, s, indexing="xy")
        verts = np.column_stack([X.ravel(), Y.ravel()])

        def vid(i, j):
            return i + (n + 1) * j

        cells = np.array(
            [
                (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
                for j in range(n)
                for i in range(n)
            ],
            dtype=int,
        )
        return MacroMesh(2, verts, cells, side / n)
    if dim == 3:
        s = np.linspace(0.0, side, n + 1)
        X, Y, Z = np.meshgrid(s, s, s, indexing="ij")
        # lexicographic with x fastest: index = i + (n+1)*(j + (n+1)*k)
        verts = np.column_stack(
            [X.transpose(2, 1, 0).ravel(), Y.transpose(2, 1, 0).ravel(),
             Z.transpose(2, 1, 0).ravel()]
        )

        def vid3(i, j, k):
            return i + (n + 1) * (j + (n + 1) * k)

        cells = []
        for k in range(n):
            for j in range(n):
                for i in range(n):
                    cells.append([vid3(i + b[0], j + b[1], k + b[2])
                                  for b in _HEX_CORNER_BITS])
        return MacroMesh(3, verts, np.array(cells, dtype=int), side / n)
    raise ValueError(f"dim must be 2 or 3, got {dim}")


def smooth_map(points: np.ndarray) -> np.ndarray:
    """Smooth in-place distortion of the unit square, boundary fixed:
    (x, y) -> (x + 0.1 sin 2πx sin 2πy, y + 0.1 sin 2πx sin 2πy)."""
    x, y = points[:, 0], points[:, 1]
    bump = 0.1 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    return np.column_stack([x + bump, y + bump])


def parallelogram_seed_map(points: np.ndarray) -> np.ndarray:
    """Distortion used to seed the near-parallelogram family (moves the
    boundary): (x, y) -> (x + 0.03 cos 3πx cos 3πy, y − 0.04 cos 3πx cos 3πy).
    """
    x, y = points[:, 0], points[:, 1]
    c = np.cos(3 * np.pi * x) * np.cos(3 * np.pi * y)
    return np.column_stack([x + 0.03 * c, y - 0.04 * c])


def apply_map(mesh: MacroMesh, fn: Callable[[np.ndarray], np.ndarray]) -> MacroMesh:
    """Return a new mesh with vertices mapped by ``fn`` ((nv,d) -> (nv,d))."""
    new_verts = np.asarray(fn(mesh.vertices.copy()), dtype=float)
    if new_verts.shape != mesh.vertices.shape:
        raise ValueError("map must preserve the vertex array shape")
    out = MacroMesh(mesh.dim, new_verts, mesh.cells.copy(), mesh.h)
    if mesh.dim == 2 and (out.corner_jacobians_2d() <= 0).any():
        raise ValueError("mapped mesh has a degenerate (non-convex) cell")
    return out


def refine_uniform(mesh: MacroMesh) -> MacroMesh:
    """Split every quadrilateral into four via edge midpoints and the vertex
    average (2D only).  Vertex numbering: originals, then edge midpoints in
    edge order, then cell points in cell order."""
    if mesh.dim != 2:
        raise ValueError("uniform refinement is implemented for 2D meshes")
    nv, ne, nc = mesh.num_vertices, mesh.num_edges, mesh.num_cells
    emid = 0.5 * (mesh.vertices[mesh.edge_verts[:, 0]]
                  + mesh.vertices[mesh.edge_verts[:, 1]])
    ccen = mesh.cell_corner_coords().mean(axis=1)
    verts = np.vstack([mesh.vertices, emid, ccen])

    edge_index = {tuple(ev): nv + e for e, ev in enumerate(mesh.edge_verts)}

    def mid(a, b):
        return edge_index[(min(a, b), max(a, b))]

    cells = []
    for c, quad in enumerate(mesh.cells):
        cen = nv + ne + c
        for k in range(4):
            vk = quad[k]
            m_out = mid(quad[k], quad[(k + 1) % 4])
            m_in = mid(quad[(k - 1) % 4], quad[k])
            cells.append((vk, m_out, cen, m_in))
    return MacroMesh(2, verts, np.array(cells, dtype=int), mesh.h / 2)


def perturb_random(mesh: MacroMesh, seed: int,
                   radius: Optional[float] = None) -> MacroMesh:
    """Randomly displace interior vertices within a disk of given radius
    (default h²).  Boundary vertices stay fixed.  Deterministic for a given
    seed.  Retries offending vertices if a cell would degenerate."""
    if mesh.dim != 2:
        raise ValueError("random perturbation is implemented for 2D meshes")
    if radius is None:
        radius = mesh.h ** 2
    rng = np.random.default_rng(seed)
    interior = ~mesh.boundary_vertex_mask()
    idx = np.flatnonzero(interior)

    def draw(m):
        r = radius * np.sqrt(rng.uniform(size=m))
        th = rng.uniform(0.0, 2 * np.pi, size=m)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    verts = mesh.vertices.copy()
    verts[idx] += draw(len(idx))
    out = MacroMesh(2, verts, mesh.cells.copy(), mesh.h)

    for _ in range(100):
        bad_cells = np.flatnonzero((out.corner_jacobians_2d() <= 0).any(axis=1))
        if len(bad_cells) == 0:
            return out
        bad_verts = np.intersect1d(np.unique(mesh.cells[bad_cells]), idx)
        verts[bad_verts] = mesh.vertices[bad_verts] + draw(len(bad_verts))
        out = MacroMesh(2, verts, mesh.cells.copy(), mesh.h)
    raise ValueError("could not find a non-degenerate perturbation")


# ----------------------------------------------------------------------
# Mesh file I/O (plain text, deterministic, round-trip exact)
# ----------------------------------------------------------------------

_MESH_MAGIC = "mscv-mesh 1"


def write_mesh(mesh: MacroMesh, path) -> None:
    """Write a mesh as deterministic plain text. Floats use shortest
    round-trip repr, so read_mesh(write_mesh(m)) is bit-exact."""
    lines = [_MESH_MAGIC,
             f"dim {mesh.dim}",
             f"h {float(mesh.h)!r}",
             f"vertices {mesh.num_vertices}"]
    for v in mesh.vertices:
        lines.append(" ".join(repr(float(x)) for x in v))
    lines.append(f"cells {mesh.num_cells}")
    for cell in mesh.cells:
        lines.append(" ".join(str(int(i)) for i in cell))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> MacroMesh:
    """Read a mesh written by write_mesh."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    it = iter(lines)
    if next(it, None) != _MESH_MAGIC:
        raise ValueError("not a mesh file (bad magic line)")
    try:
        dim = int(next(it).split()[1])
        h = float(next(it).split()[1])
        nv = int(next(it).split()[1])
        verts = np.array([[float(t) for t in next(it).split()]
                          for _ in range(nv)], dtype=float).reshape(nv, dim)
        nc = int(next(it).split()[1])
        width = 4 if dim == 2 else 8
        cells = np.array([[int(t) for t in next(it).split()]
                          for _ in range(nc)], dtype=int).reshape(nc, width)
    except (StopIteration, IndexError, ValueError) as exc:
        raise ValueError(f"malformed mesh file: {exc}") from exc
    return MacroMesh(dim, verts, cells, h)


# ----------------------------------------------------------------------
# Subdivision
# ----------------------------------------------------------------------

@dataclass
class SubMesh:
    """Control-volume subdivision of a macro mesh.

    2D index conventions:
      subcell id   = 4*cell + k          (k = local corner)
      half-edge id = 2*edge + side       (side 0 at the smaller vertex id)
      dual edge id = 4*cell + k          (between subcells k and k+1 of cell)

    3D replaces half-edges by quarter-faces (4*face + l) and has 8 subcells
    and 12 dual facets per cell.  Normals of half-facets point from the
    lower-numbered adjacent macro cell to the higher (outward on the
    boundary); dual facet normals point from ``dual_subcells[:,0]`` to
    ``dual_subcells[:,1]``.
    """

    macro: MacroMesh
    cell_centers: np.ndarray        # (nc, d) vertex averages
    subcell_vertex: np.ndarray      # (nsub,) generating macro vertex
    subcell_corners: np.ndarray     # (nsub, 4 or 8, d)
    subcell_measure: np.ndarray     # (nsub,)
    subcell_halffacets: np.ndarray  # (nsub, 2 or 3) incident half-facet ids
    hf_vertex: np.ndarray           # (nhf,) generating macro vertex
    hf_parent: np.ndarray           # (nhf,) parent edge/face id
    hf_measure: np.ndarray          # (nhf,)
    hf_normal: np.ndarray           # (nhf, d) unit normal (global orientation)
    hf_subcells: np.ndarray         # (nhf, 2) plus side, minus side (-1)
    hf_boundary: np.ndarray         # (nhf,) bool
    hf_center: np.ndarray           # (nhf, d)
    dual_subcells: np.ndarray       # (ndual, 2)
    dual_measure: np.ndarray        # (ndual,)
    dual_normal: np.ndarray         # (ndual, d)
    region_subcells: list           # per vertex: int array of subcell ids
    region_halffacets: list         # per vertex: int array of half-facet ids

    @property
    def dim(self) -> int:
        return self.macro.dim

    @property
    def num_subcells(self) -> int:
        return len(self.subcell_vertex)

    @property
    def num_halffacets(self) -> int:
        return len(self.hf_vertex)

    @property
    def num_dual_facets(self) -> int:
        return len(self.dual_subcells)

    @property
    def num_regions(self) -> int:
        return len(self.region_subcells)

    def other_halffacet(self, sub: int, hf: int) -> int:
        """The remaining half-facet(s) of a subcell besides ``hf``;
        2D convenience used by the stress basis."""
        pair = self.subcell_halffacets[sub]
        if pair[0] == hf:
            return int(pair[1])
        if pair[1] == hf:
            return int(pair[0])
        raise ValueError("half-facet not incident to subcell")


def _quad_area(corners: np.ndarray) -> np.ndarray:
    """Shoelace area for (n, 4, 2) corner arrays (counterclockwise)."""
    x, y = corners[..., 0], corners[..., 1]
    s = np.zeros(corners.shape[0])
    for k in range(4):
        k1 = (k + 1) % 4
        s += x[:, k] * y[:, k1] - x[:, k1] * y[:, k]
    return 0.5 * s


def subdivide(mesh: MacroMesh) -> SubMesh:
    """Build the control-volume subdivision (dispatches on dimension)."""
    if mesh.dim == 2:
        return _subdivide_2d(mesh)
    return _subdivide_3d(mesh)


def _subdivide_2d(mesh: MacroMesh) -> SubMesh:
    if (mesh.corner_jacobians_2d() <= 0).any():
        raise ValueError("mesh has degenerate cells; cannot subdivide")
    nv, ne, nc = mesh.num_vertices, mesh.num_edges, mesh.num_cells
    verts, cells = mesh.vertices, mesh.cells
    centers = mesh.cell_corner_coords().mean(axis=1)
    emid = 0.5 * (verts[mesh.edge_verts[:, 0]] + verts[mesh.edge_verts[:, 1]])

    edge_index = {(min(a, b), max(a, b)): e
                  for e, (a, b) in enumerate(mesh.edge_verts)}

    # --- subcells -----------------------------------------------------
    nsub = 4 * nc
    subcell_vertex = np.empty(nsub, dtype=int)
    subcell_corners = np.empty((nsub, 4, 2))
    subcell_halffacets = np.full((nsub, 2), -1, dtype=int)

    # half-edge ids and bookkeeping
    nhf = 2 * ne
    hf_vertex = np.empty(nhf, dtype=int)
    hf_parent = np.repeat(np.arange(ne), 2)
    hf_subcells = np.full((nhf, 2), -1, dtype=int)
    hf_boundary = np.repeat(mesh.edge_cells[:, 1] == -1, 2)
    hf_vertex[0::2] = mesh.edge_verts[:, 0]
    hf_vertex[1::2] = mesh.edge_verts[:, 1]

    # geometry of half-edges (straight parent edges)
    a_xy = verts[mesh.edge_verts[:, 0]]
    b_xy = verts[mesh.edge_verts[:, 1]]
    hf_center = np.empty((nhf, 2))
    hf_center[0::2] = 0.5 * (a_xy + emid)
    hf_center[1::2] = 0.5 * (emid + b_xy)
    elen = np.linalg.norm(b_xy - a_xy, axis=1)
    hf_measure = np.repeat(0.5 * elen, 2)

    # edge normals oriented from edge_cells[0] toward edge_cells[1]
    # (outward on the boundary)
    tang = (b_xy - a_xy) / elen[:, None]
    enormal = np.column_stack([tang[:, 1], -tang[:, 0]])
    cen0 = centers[mesh.edge_cells[:, 0]]
    flip = ((emid - cen0) * enormal).sum(axis=1) < 0
    enormal[flip] *= -1
    hf_normal = np.repeat(enormal, 2, axis=0)

    dual_subcells = np.empty((4 * nc, 2), dtype=int)
    dual_measure = np.empty(4 * nc)
    dual_normal = np.empty((4 * nc, 2))

    for c in range(nc):
        quad = cells[c]
        cen = centers[c]
        for k in range(4):
            sub = 4 * c + k
            vk = quad[k]
            vnext = quad[(k + 1) % 4]
            vprev = quad[(k - 1) % 4]
            e_out = edge_index[(min(vk, vnext), max(vk, vnext))]
            e_in = edge_index[(min(vk, vprev), max(vk, vprev))]
            m_out = emid[e_out]
            m_in = emid[e_in]
            subcell_vertex[sub] = vk
            subcell_corners[sub] = (verts[vk], m_out, cen, m_in)

            # half-edge of e_out at vk's side, likewise for e_in
            hf_out = 2 * e_out + (0 if mesh.edge_verts[e_out, 0] == vk else 1)
            hf_in = 2 * e_in + (0 if mesh.edge_verts[e_in, 0] == vk else 1)
            subcell_halffacets[sub] = (hf_out, hf_in)
            for hf, e in ((hf_out, e_out), (hf_in, e_in)):
                side = 0 if mesh.edge_cells[e, 0] == c else 1
                hf_subcells[hf, side] = sub

            # dual edge k of cell c runs from m_out to cen, between
            # subcell k and subcell k+1
            d = 4 * c + k
            seg = cen - m_out
            L = np.linalg.norm(seg)
            nvec = np.array([seg[1], -seg[0]]) / L
            # orient from subcell k toward subcell k+1
            mid_d = 0.5 * (cen + m_out)
            sc_k = subcell_corners[sub].mean(axis=0)
            if (mid_d - sc_k) @ nvec < 0:
                nvec = -nvec
            dual_subcells[d] = (sub, 4 * c + (k + 1) % 4)
            dual_measure[d] = L
            dual_normal[d] = nvec

    subcell_measure = _quad_area(subcell_corners)
    if (subcell_measure <= 0).any():
        raise ValueError("subdivision produced a non-positive subcell area")

    region_subcells = [[] for _ in range(nv)]
    region_halffacets = [[] for _ in range(nv)]
    for sub in range(nsub):
        region_subcells[subcell_vertex[sub]].append(sub)
    for hf in range(nhf):
        region_halffacets[hf_vertex[hf]].append(hf)
    region_subcells = [np.array(r, dtype=int) for r in region_subcells]
    region_halffacets = [np.array(r, dtype=int) for r in region_halffacets]

    return SubMesh(
        macro=mesh,
        cell_centers=centers,
        subcell_vertex=subcell_vertex,
        subcell_corners=subcell_corners,
        subcell_measure=subcell_measure,
        subcell_halffacets=subcell_halffacets,
        hf_vertex=hf_vertex,
        hf_parent=hf_parent,
        hf_measure=hf_measure,
        hf_normal=hf_normal,
        hf_subcells=hf_subcells,
        hf_boundary=hf_boundary,
        hf_center=hf_center,
        dual_subcells=dual_subcells,
        dual_measure=dual_measure,
        dual_normal=dual_normal,
        region_subcells=region_subcells,
        region_halffacets=region_halffacets,
    )


def _subdivide_3d(mesh: MacroMesh) -> SubMesh:
    verts, cells = mesh.vertices, mesh.cells
    nv, nc, nf = mesh.num_vertices, mesh.num_cells, mesh.num_faces

    # validate axis alignment: corners must match lo/hi pattern in VTK order
    corner = mesh.cell_corner_coords()
    lo = corner.min(axis=1)
    hi = corner.max(axis=1)
    expect = np.where(_HEX_CORNER_BITS[None, :, :] == 1,
                      hi[:, None, :], lo[:, None, :])
    if not np.allclose(corner, expect, rtol=0.0, atol=1e-12):
        raise ValueError("3D subdivision requires axis-aligned cuboid cells")
    if (hi <= lo).any():
        raise ValueError("degenerate cuboid cell")

    centers = 0.5 * (lo + hi)
    fverts = mesh.face_verts
    fcells = mesh.face_cells
    face_centers = verts[fverts].mean(axis=1)

    # map (cell, vertex) -> local corner, and face axis
    local_of = {}
    for c in range(nc):
        for k in range(8):
            local_of[(c, cells[c, k])] = k
    fdiff = np.ptp(verts[fverts], axis=1)  # extent of face in each axis
    face_axis = np.argmin(fdiff, axis=1)

    # quarter-faces: id = 4*f + l, at corner fverts[f, l]
    nhf = 4 * nf
    hf_vertex = fverts.ravel()
    hf_parent = np.repeat(np.arange(nf), 4)
    hf_subcells = np.full((nhf, 2), -1, dtype=int)
    hf_boundary = np.repeat(fcells[:, 1] == -1, 4)

    # rectangle area of the quarter = face area / 4
    farea = np.empty(nf)
    for ax in range(3):
        sel = face_axis == ax
        others = [a for a in range(3) if a != ax]
        farea[sel] = fdiff[sel][:, others[0]] * fdiff[sel][:, others[1]]
    hf_measure = np.repeat(farea / 4.0, 4)
    hf_center = 0.5 * (verts[hf_vertex] + np.repeat(face_centers, 4, axis=0))

    fnormal = np.zeros((nf, 3))
    fnormal[np.arange(nf), face_axis] = 1.0
    cen0 = centers[fcells[:, 0]]
    flip = ((face_centers - cen0) * fnormal).sum(axis=1) < 0
    fnormal[flip] *= -1
    hf_normal = np.repeat(fnormal, 4, axis=0)

    # subcells: id = 8*c + local corner
    nsub = 8 * nc
    subcell_vertex = cells.ravel()
    subcell_corners = np.empty((nsub, 8, 3))
    subcell_measure = np.empty(nsub)
    subcell_halffacets = np.full((nsub, 3), -1, dtype=int)
    sub_fill = np.zeros(nsub, dtype=int)

    cellvol8 = np.prod(hi - lo, axis=1) / 8.0
    for c in range(nc):
        for k in range(8):
            sub = 8 * c + k
            v = corner[c, k]
            cbox_lo = np.minimum(v, centers[c])
            cbox_hi = np.maximum(v, centers[c])
            subcell_corners[sub] = np.where(_HEX_CORNER_BITS == 1,
                                            cbox_hi, cbox_lo)
            subcell_measure[sub] = cellvol8[c]

    # attach quarter-faces to subcells
    for f in range(nf):
        for l in range(4):
            hf = 4 * f + l
            vtx = fverts[f, l]
            for side, c in enumerate(fcells[f]):
                if c == -1:
                    continue
                k = local_of[(c, vtx)]
                sub = 8 * c + k
                hf_subcells[hf, side] = sub
                subcell_halffacets[sub, sub_fill[sub]] = hf
                sub_fill[sub] += 1
    if (sub_fill != 3).any():
        raise ValueError("3D subdivision bookkeeping failed")

    # dual facets: 12 per cell, between octants differing in one bit
    bit_to_vtk = {tuple(b): k for k, b in enumerate(_HEX_CORNER_BITS)}
    nd = 12 * nc
    dual_subcells = np.empty((nd, 2), dtype=int)
    dual_measure = np.empty(nd)
    dual_normal = np.zeros((nd, 3))
    half = 0.5 * (hi - lo)
    d = 0
    for c in range(nc):
        for ax in range(3):
            o1, o2 = [a for a in range(3) if a != ax]
            area = half[c, o1] * half[c, o2]
            for b1 in range(2):
                for b2 in range(2):
                    bits_lo = [0, 0, 0]
                    bits_lo[o1], bits_lo[o2] = b1, b2
                    bits_hi = list(bits_lo)
                    bits_hi[ax] = 1
                    k_lo = bit_to_vtk[tuple(bits_lo)]
                    k_hi = bit_to_vtk[tuple(bits_hi)]
                    dual_subcells[d] = (8 * c + k_lo, 8 * c + k_hi)
                    dual_measure[d] = area
                    dual_normal[d, ax] = 1.0
                    d += 1

    region_subcells = [[] for _ in range(nv)]
    region_halffacets = [[] for _ in range(nv)]
    for sub in range(nsub):
        region_subcells[subcell_vertex[sub]].append(sub)
    for hf in range(nhf):
        region_halffacets[hf_vertex[hf]].append(hf)
    region_subcells = [np.array(r, dtype=int) for r in region_subcells]
    region_halffacets = [np.array(r, dtype=int) for r in region_halffacets]

    return SubMesh(
        macro=mesh,
        cell_centers=centers,
        subcell_vertex=subcell_vertex,
        subcell_corners=subcell_corners,
        subcell_measure=subcell_measure,
        subcell_halffacets=subcell_halffacets,
        hf_vertex=hf_vertex,
        hf_parent=hf_parent,
        hf_measure=hf_measure,
        hf_normal=hf_normal,
        hf_subcells=hf_subcells,
        hf_boundary=hf_boundary,
        hf_center=hf_center,
        dual_subcells=dual_subcells,
        dual_measure=dual_measure,
        dual_normal=dual_normal,
        region_subcells=region_subcells,
        region_halffacets=region_halffacets,
    )
