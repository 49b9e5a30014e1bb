"""Mesh construction, subdivision topology, and geometry invariants."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscv.mesh import (build_structured, apply_map, parallelogram_seed_map,
                       perturb_random, read_mesh, refine_uniform, smooth_map,
                       subdivide, write_mesh)
from mscv.problems import MESH_FAMILIES, build_family_mesh


def test_structured_counts_2d():
    mesh = build_structured(2)
    assert mesh.num_vertices == 9
    assert mesh.num_cells == 4
    assert mesh.num_edges == 12
    sub = subdivide(mesh)
    assert sub.num_subcells == 16
    assert sub.num_halffacets == 24
    assert sub.num_dual_facets == 16
    assert sub.num_regions == 9


def test_structured_counts_3d():
    mesh = build_structured(2, dim=3)
    assert mesh.num_vertices == 27
    assert mesh.num_cells == 8
    assert mesh.num_faces == 36
    sub = subdivide(mesh)
    assert sub.num_subcells == 64
    assert sub.num_halffacets == 144
    assert sub.num_dual_facets == 12 * 8
    assert sub.num_regions == 27


@pytest.mark.parametrize("dim", [2, 3])
def test_subcell_measures_partition_unit_domain(dim):
    sub = subdivide(build_structured(3, dim=dim))
    assert np.all(sub.subcell_measure > 0)
    assert np.isclose(sub.subcell_measure.sum(), 1.0, atol=1e-13)


@pytest.mark.parametrize("family", MESH_FAMILIES)
def test_family_measures_and_handedness(family):
    mesh = build_family_mesh(family, 8, seed=7)
    sub = subdivide(mesh)
    assert np.all(sub.subcell_measure > 0)
    area = sub.subcell_measure.sum()
    assert 0.2 < area <= 1.0 + 1e-12


def test_halffacet_topology_2d():
    sub = subdivide(build_structured(3))
    mesh = sub.macro
    # two half-edges per parent edge; measures sum to the edge length
    for e in range(mesh.num_edges):
        a, b = mesh.vertices[mesh.edge_verts[e]]
        length = np.linalg.norm(b - a)
        meas = sub.hf_measure[2 * e] + sub.hf_measure[2 * e + 1]
        assert np.isclose(meas, length, atol=1e-13)
        interior = mesh.edge_cells[e].min() >= 0
        for hf in (2 * e, 2 * e + 1):
            assert sub.hf_boundary[hf] == (not interior)
            sides = sub.hf_subcells[hf]
            assert sides[0] >= 0
            assert (sides[1] >= 0) == interior
    # unit normals
    norms = np.linalg.norm(sub.hf_normal, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-13)


def test_normal_points_away_from_side0():
    sub = subdivide(build_structured(4))
    centroids = sub.subcell_corners.mean(axis=1)
    for hf in range(sub.num_halffacets):
        s0 = sub.hf_subcells[hf, 0]
        off = sub.hf_center[hf] - centroids[s0]
        assert off @ sub.hf_normal[hf] > 0


def test_dual_facets_interior_to_cells():
    sub = subdivide(build_structured(3))
    nper = 4
    for df in range(sub.num_dual_facets):
        s_plus, s_minus = sub.dual_subcells[df]
        assert s_plus // nper == s_minus // nper  # same macro cell
        assert s_plus != s_minus
        assert sub.dual_measure[df] > 0
        assert np.isclose(np.linalg.norm(sub.dual_normal[df]), 1.0,
                          atol=1e-13)


def test_regions_partition_subcells():
    sub = subdivide(build_structured(3))
    seen = np.zeros(sub.num_subcells, dtype=int)
    for v in range(sub.num_regions):
        for sc in sub.region_subcells[v]:
            assert sub.subcell_vertex[sc] == v
            seen[sc] += 1
    assert np.all(seen == 1)


def test_region_halffacets_consistent():
    sub = subdivide(build_structured(3))
    for v in range(sub.num_regions):
        hfs = set(sub.region_halffacets[v])
        touching = set()
        for sc in sub.region_subcells[v]:
            for hf in sub.subcell_halffacets[sc]:
                touching.add(hf)
        assert hfs == touching


def test_other_halffacet_involution():
    sub = subdivide(build_structured(3))
    for hf in range(sub.num_halffacets):
        for sc in sub.hf_subcells[hf]:
            if sc < 0:
                continue
            other = sub.other_halffacet(sc, hf)
            assert other != hf
            assert sc in sub.hf_subcells[other]


def test_refine_uniform_halves_h():
    mesh = apply_map(build_structured(4), parallelogram_seed_map)
    fine = refine_uniform(mesh)
    assert fine.num_cells == 4 * mesh.num_cells
    assert np.isclose(fine.h, mesh.h / 2, rtol=1e-12)
    # total area preserved
    a0 = subdivide(mesh).subcell_measure.sum()
    a1 = subdivide(fine).subcell_measure.sum()
    assert np.isclose(a0, a1, atol=1e-12)


def test_smooth_map_preserves_unit_square_boundary_corners():
    mesh = apply_map(build_structured(8), smooth_map)
    v = mesh.vertices
    assert v.min() > -0.35 and v.max() < 1.35
    sub = subdivide(mesh)
    assert np.all(sub.subcell_measure > 0)


def test_perturb_random_deterministic_and_boundary_fixed():
    base = build_structured(8)
    m1 = perturb_random(base, seed=42)
    m2 = perturb_random(base, seed=42)
    m3 = perturb_random(base, seed=43)
    assert np.array_equal(m1.vertices, m2.vertices)
    assert not np.array_equal(m1.vertices, m3.vertices)
    onb = base.boundary_vertex_mask()
    assert np.allclose(m1.vertices[onb], base.vertices[onb])
    moved = np.linalg.norm(m1.vertices - base.vertices, axis=1)
    assert moved.max() > 0
    assert moved.max() <= base.h ** 2 + 1e-12


def test_mesh_io_roundtrip(tmp_path):
    mesh = perturb_random(build_structured(5), seed=3)
    path = tmp_path / "mesh.npz"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.dim == mesh.dim
    assert np.array_equal(back.cells, mesh.cells)
    assert np.allclose(back.vertices, mesh.vertices)


@settings(max_examples=12, deadline=None)
@given(n=st.integers(min_value=1, max_value=5),
       seed=st.integers(min_value=0, max_value=10_000))
def test_random_mesh_subdivision_invariants(n, seed):
    mesh = perturb_random(build_structured(n), seed=seed)
    sub = subdivide(mesh)
    assert np.all(sub.subcell_measure > 0)
    assert np.isclose(sub.subcell_measure.sum(), 1.0, atol=1e-12)
    # half-facet measures positive, parents consistent
    assert np.all(sub.hf_measure > 0)
    for e in range(mesh.num_edges):
        assert sub.hf_parent[2 * e] == e and sub.hf_parent[2 * e + 1] == e


def test_build_family_mesh_families():
    for family in MESH_FAMILIES:
        mesh = build_family_mesh(family, 8, seed=1)
        assert mesh.num_cells == 64
    with pytest.raises(ValueError):
        build_family_mesh("nonsense", 8)
    with pytest.raises(ValueError):
        build_family_mesh("parallelogram", 12)  # not 4 * 2^k
