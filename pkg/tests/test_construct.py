import numpy as np
import pytest

import torustile as tt
from torustile.construct import GLUE_4, GLUE_8, cut_sphere, sigma_face
from torustile.errors import (
    CutSystemError,
    MarkError,
    MeshInvalidError,
    TopologyError,
)


# --- marked disks ---------------------------------------------------------


def test_marked_disk_paths(disk50):
    marks = (0, 7, 13)
    d = tt.MarkedDisk(disk50, marks)
    paths = d.paths()
    assert len(paths) == 3
    for j, p in enumerate(paths):
        assert p[0] == marks[j]
        assert p[-1] == marks[(j + 1) % 3]
    # paths cover the boundary loop exactly once
    total = sum(len(p) - 1 for p in paths)
    assert total == len(tt.boundary_loop(disk50).vertices)


def test_marked_disk_rejects_wrong_order(disk50):
    marks = (0, 13, 7)  # reversed cyclic order
    with pytest.raises(MarkError):
        tt.MarkedDisk(disk50, marks)


def test_marked_disk_rejects_interior_mark(disk50):
    interior = [
        v
        for v in range(disk50.n_vertices)
        if v not in tt.boundary_loop(disk50).vertices
    ]
    with pytest.raises(MarkError):
        tt.MarkedDisk(disk50, (0, 7, interior[0]))


def test_marked_disk_rejects_closed_mesh(tetra):
    with pytest.raises(TopologyError):
        tt.MarkedDisk(tetra[0], (0, 1, 2))


# --- cell-count oracles (hand counts) -------------------------------------


def test_torus8_single_triangle_counts(bank):
    t = bank.torus("tri_8")
    m = t.mesh
    assert (m.n_vertices, m.n_edges, m.n_faces) == (4, 12, 8)
    assert m.euler_characteristic == 0
    assert t.copy_count == 8
    assert list(t.mirrored.astype(int)) == [0, 1, 0, 1, 0, 1, 0, 1]


def test_torus8_vertex_classes(bank):
    # mark images: all copies share v0-class and v1-class; v2 splits
    # into {0,3,4,7} at (0, 1/2) and {1,2,5,6} at (1/2, 0)
    t = bank.torus("tri_8")
    vm = t.vertex_map
    assert len(set(vm[:, 0])) == 1
    assert len(set(vm[:, 1])) == 1
    g1 = {vm[c, 2] for c in (0, 3, 4, 7)}
    g2 = {vm[c, 2] for c in (1, 2, 5, 6)}
    assert len(g1) == 1 and len(g2) == 1 and g1 != g2


def test_torus4_quad_counts(bank):
    t = bank.torus("quad_4")
    m = t.mesh
    assert (m.n_vertices, m.n_edges, m.n_faces) == (4, 12, 8)
    assert m.euler_characteristic == 0
    assert t.copy_count == 4
    assert list(t.mirrored.astype(int)) == [0, 1, 1, 0]


def test_torus42_single_triangle_counts(bank):
    t = bank.torus("tri_42")
    m = t.mesh
    assert (m.n_vertices, m.n_edges, m.n_faces) == (21, 63, 42)
    assert m.euler_characteristic == 0
    assert t.copy_count == 42
    # 7 hexagons of 6 sectors; sector parity alternates chirality
    assert np.array_equal(t.group_id, np.repeat(np.arange(7), 6))
    assert np.array_equal(t.mirrored, np.tile([False, True] * 3, 7))
    assert np.bincount(t.tile_class).tolist() == [7] * 6


def test_torus63_tetra_counts(bank):
    t = bank.torus("tetra_63")
    m = t.mesh
    assert (m.n_vertices, m.n_edges, m.n_faces) == (126, 378, 252)
    assert m.euler_characteristic == 0
    assert t.copy_count == 63
    assert not t.mirrored.any()
    assert np.bincount(t.tile_class).tolist() == [21, 21, 21]


def test_published_pairing_tables():
    # the three 8-copy edge pairings and the four 4-copy ones, as data
    assert GLUE_8 == {
        0: [(0, 1), (2, 3), (4, 5), (6, 7)],
        1: [(0, 7), (1, 2), (3, 4), (5, 6)],
        2: [(0, 3), (1, 6), (2, 5), (4, 7)],
    }
    assert GLUE_4 == {
        0: [(0, 2), (1, 3)],
        1: [(0, 1), (2, 3)],
        2: [(0, 2), (1, 3)],
        3: [(0, 1), (2, 3)],
    }


def test_corrupted_pairing_rejected(triangle):
    # crossing two of the second path's gluings yields a sphere, not a torus
    d = tt.MarkedDisk(triangle, (0, 1, 2))
    bad = {0: GLUE_8[0], 1: [(0, 3), (1, 2), (5, 6), (4, 7)], 2: GLUE_8[2]}
    with pytest.raises((MeshInvalidError, TopologyError)):
        tt.build_torus_8(d, _pairings=bad)


def test_equal_chirality_gluing_rejected(triangle):
    d = tt.MarkedDisk(triangle, (0, 1, 2))
    bad = {0: [(0, 2), (1, 3), (4, 6), (5, 7)], 1: GLUE_8[1], 2: GLUE_8[2]}
    with pytest.raises(MeshInvalidError):
        tt.build_torus_8(d, _pairings=bad)


def test_torus_lattices(bank):
    sq = bank.torus("tri_8").lattice
    np.testing.assert_allclose(sq.basis, np.eye(2))
    rh = bank.torus("tri_42").lattice
    np.testing.assert_allclose(
        rh.basis, np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]])
    )
    assert rh.det == pytest.approx(np.sqrt(3) / 2, rel=1e-15)


def test_rectangle_lattice_scales(disk50):
    d = tt.MarkedDisk(disk50, (0, 5, 10, 15))
    t = tt.build_torus_4(d, width=2.0, height=0.5)
    np.testing.assert_allclose(t.lattice.basis, np.diag([4.0, 1.0]))


# --- sphere route ----------------------------------------------------------


def test_sigma_face_orientation(tetra):
    mesh, sigma, _ = tetra
    fperm = sigma_face(mesh, np.asarray(sigma))
    assert sorted(fperm.tolist()) == list(range(4))
    # odd permutation reverses orientation: not simplicial here
    with pytest.raises(CutSystemError):
        sigma_face(mesh, np.array([0, 2, 1, 3]))


def test_detect_rotation(tetra, symsphere):
    mesh, sigma, p_o = tetra
    assert tt.detect_rotation(mesh, p_o).tolist() == list(sigma)
    ms, sig, po = symsphere
    assert tt.detect_rotation(ms, po).tolist() == list(sig)


def test_detect_rotation_asymmetric(tetra):
    mesh, _, p_o = tetra
    v = mesh.vertices.copy()
    v[1] = v[1] * 1.3  # break the symmetry
    from torustile.mesh import SurfaceMesh

    broken = SurfaceMesh(v, mesh.faces)
    with pytest.raises(CutSystemError):
        tt.detect_rotation(broken, p_o)


def test_make_symmetric_cuts_tetra(tetra):
    mesh, sigma, p_o = tetra
    cuts = tt.make_symmetric_cuts(mesh, p_o, np.asarray(sigma), 1)
    assert cuts.paths == ((0, 1), (0, 2), (0, 3))
    assert cuts.p_O == p_o


def test_make_symmetric_cuts_rejects_fixed_seed(tetra):
    mesh, sigma, p_o = tetra
    with pytest.raises(CutSystemError):
        tt.make_symmetric_cuts(mesh, p_o, np.asarray(sigma), p_o)


def test_cut_sphere_tetra(tetra):
    mesh, sigma, p_o = tetra
    cuts = tt.make_symmetric_cuts(mesh, p_o, np.asarray(sigma), 1)
    disk = cut_sphere(cuts)
    m = disk.mesh
    # apex triples, each leaf single: 3 + 3 = 6 vertices, 9 edges, 4 faces
    assert (m.n_vertices, m.n_edges, m.n_faces) == (6, 9, 4)
    assert m.euler_characteristic == 1
    assert len(disk.p_O_dups) == 3
    assert len(tt.boundary_loop(m).vertices) == 6
    assert len(disk.sides) == 6
    assert disk.cut_order[0] == 0


def test_cut_sphere_euler_symsphere(symsphere):
    mesh, sigma, p_o = symsphere
    seed = int(min(v for v in range(mesh.n_vertices) if sigma[v] != v))
    cuts = tt.make_symmetric_cuts(mesh, p_o, np.asarray(sigma), seed)
    disk = cut_sphere(cuts)
    m = disk.mesh
    assert m.euler_characteristic == 1
    assert m.n_faces == mesh.n_faces
    cut_edges = sum(len(p) - 1 for p in cuts.paths)
    assert len(tt.boundary_loop(m).vertices) == 2 * cut_edges
    # sigma acts on the cut disk with order 3
    sd = disk.sigma_disk
    assert np.array_equal(sd[sd[sd]], np.arange(m.n_vertices))


def test_branch_spec(bank):
    t = bank.torus("tetra_63")
    spec = t.branch_spec
    assert spec["riemann_hurwitz_sum"] == 126
    assert spec["p_O"]["preimages"] == 63
    assert spec["p_O"]["local_degree"] == 1
    assert spec["leaves"]["preimages"] == 21
    assert spec["leaves"]["local_degree"] == 3
    assert len(spec["leaves"]["vertices"]) == 3


def test_validate_covering_tetra(bank, tetra):
    t = bank.torus("tetra_63")
    rep = tt.validate_covering(t, tetra[0])
    assert rep["passed"]
    assert rep["riemann_hurwitz_sum"] == 126
    assert rep["riemann_hurwitz_ok"]
    assert rep["branch_table_ok"]
    table = rep["branch_table"]
    assert len(table) == 4
    po_rows = [
        r
        for r in table.values()
        if r["preimages"] == 63 and r["local_degrees"] == [1]
    ]
    leaf_rows = [
        r
        for r in table.values()
        if r["preimages"] == 21 and r["local_degrees"] == [3]
    ]
    assert len(po_rows) == 1 and len(leaf_rows) == 3


def test_validate_covering_disks(bank, triangle):
    t = bank.torus("tri_8")
    rep = tt.validate_covering(t, triangle)
    assert rep["passed"]
    assert rep["euler_characteristic"] == 0
    assert rep["manifold"] and rep["face_count_ok"]
    meeting = [
        info["copies_meeting"]
        for mark in rep["marked_cones"].values()
        for info in mark.values()
    ]
    assert sorted(meeting) == [4, 4, 8, 8]


def test_glued_edges_zero_length(bank, tetra):
    # every identified vertex pair carries identical 3D coordinates
    t = bank.torus("sphere_63")
    rep = tt.validate_covering(t, bank.meshes["sphere"][0])
    assert rep["passed"]
    assert rep["max_glued_length_deviation"] <= 1e-12


def test_ideals_cover_boundary(bank):
    for name in ("tri_8", "quad_4", "tri_42", "d50_8", "tetra_63"):
        t = bank.torus(name)
        pat = t.pattern
        boundary = set(tt.boundary_loop(pat).vertices)
        for c in range(t.copy_count):
            assert set(t.ideal[c]) == boundary
