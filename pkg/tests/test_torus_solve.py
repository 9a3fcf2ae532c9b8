import numpy as np
import pytest

import torustile as tt
from torustile.torus_solve import develop_faces, map_area, tree_cotree
from torustile.errors import SolveError


def ideal_reference(t):
    """Torus vertex -> plane position of its ideal lattice coordinate."""
    ref = {}
    for c in range(t.copy_count):
        for p, q in t.ideal[c].items():
            tv = int(t.vertex_map[c, p])
            xy = t.lattice.from_coords(np.array([float(q[0]), float(q[1])]))
            ref.setdefault(tv, xy)
    return ref


# --- homology bookkeeping ---------------------------------------------------


def test_tree_cotree_counts(bank):
    t = bank.torus("d50_8")
    tc = tree_cotree(t.mesh)
    n, f, e = t.mesh.n_vertices, t.mesh.n_faces, t.mesh.n_edges
    assert len(tc.tree_edges) == n - 1
    assert len(tc.cotree_edges) == f - 1
    assert len(tc.leftover) == 2
    assert (n - 1) + (f - 1) + 2 == e
    assert len(tc.generators) == 2


def test_generators_closed(bank):
    t = bank.torus("d50_8")
    m = t.mesh
    tc = tree_cotree(m)
    for loop in tc.generators:
        for h, g in zip(loop, loop[1:]):
            assert m.head(h) == m.tail(g)
        assert m.head(loop[-1]) == m.tail(loop[0])


def test_assigned_jumps_valid(bank):
    t = bank.torus("d50_8")
    tc = tree_cotree(t.mesh)
    j = tt.assign_jumps(t.mesh, tc)
    j.validate(t.mesh)
    s = j.generator_sums(tc.generators)
    assert abs(round(float(np.linalg.det(s)))) == 1
    # tree edges carry no jump
    for h in tc.tree_edges:
        assert j.jumps[h].tolist() == [0, 0]


@pytest.mark.parametrize(
    "name", ["tri_8", "quad_4", "tri_42", "d50_8", "d50_42", "tetra_63", "sphere_63"]
)
def test_canonical_jumps_exact(bank, name):
    t = bank.torus(name)
    j = tt.canonical_jumps(t)
    assert j.jumps.dtype == np.int64
    j.validate(t.mesh)  # antisymmetry + zero face sums, exact
    tc = tree_cotree(t.mesh)
    s = j.generator_sums(tc.generators)
    assert abs(round(float(np.linalg.det(s)))) == 1


def test_marking_equivalence(bank):
    """Tree-cotree and construction markings give the same torus map.

    The two assignments have unimodularly related generator sums; after the
    matching lattice automorphism the solved positions agree pointwise mod
    the lattice.
    """
    t, w, emb_can = bank.solved("d50_8", "uniform")
    m = t.mesh
    tc = tree_cotree(m)
    j_tc = tt.assign_jumps(m, tc)
    j_can = tt.canonical_jumps(t)
    s_tc = j_tc.generator_sums(tc.generators).astype(float)
    s_can = j_can.generator_sums(tc.generators).astype(float)
    a = s_tc @ np.linalg.inv(s_can)
    assert np.allclose(a, np.round(a), atol=1e-9)
    a = np.round(a).astype(int)
    assert abs(round(float(np.linalg.det(a)))) == 1

    emb_tc = tt.solve_torus(t, w, j_tc)
    b = t.lattice.basis
    mtx = b @ a @ np.linalg.inv(b)
    mapped = emb_can.positions @ mtx.T
    dev = t.lattice.mod_distance(mapped, emb_tc.positions)
    assert float(np.max(dev)) <= 1e-8


def test_pin_invariance(bank):
    t, w, emb0 = bank.solved("d50_42", "cotangent")
    other = int(t.mesh.n_vertices // 2)
    emb1 = tt.solve_torus(t, w, tt.canonical_jumps(t), pin=other)
    diff = emb0.positions - emb1.positions
    dev = t.lattice.mod_distance(diff, diff[0])
    assert float(np.max(dev)) <= 1e-8


def test_coboundary_invariance(bank):
    t, w, emb0 = bank.solved("d50_8", "uniform")
    m = t.mesh
    rng = np.random.default_rng(5)
    phi = rng.integers(-2, 3, size=(m.n_vertices, 2))
    j = tt.canonical_jumps(t)
    hs = np.arange(m.n_halfedges)
    heads = m.faces[hs // 3, (hs + 1) % 3]
    tails = m.faces[hs // 3, hs % 3]
    shifted = j.jumps + phi[heads] - phi[tails]
    j2 = tt.JumpAssignment(jumps=shifted)
    j2.validate(m)
    emb1 = tt.solve_torus(t, w, j2)
    b = t.lattice.basis
    expect = emb0.positions - phi @ b.T + (phi[t.pin_vertex] @ b.T)
    assert float(np.max(np.abs(expect - emb1.positions))) <= 1e-8


# --- solve quality ----------------------------------------------------------


@pytest.mark.parametrize("scheme", ["uniform", "cotangent"])
@pytest.mark.parametrize(
    "name", ["tri_8", "quad_4", "tri_42", "d50_8", "d50_42", "d50_4",
             "tetra_63", "sphere_63"]
)
def test_residuals(bank, name, scheme):
    _, _, emb = bank.solved(name, scheme)
    assert emb.stats["residual"] <= 1e-10


def test_negative_weights_use_factorization(bank, caplog):
    import logging

    with caplog.at_level(logging.WARNING, logger="torustile.torus_solve"):
        t, w, emb = bank.solved("kite_8", "cotangent")
    assert emb.stats["method"] == "splu"
    assert emb.stats["residual"] <= 1e-10


def test_positive_weights_use_cg(bank):
    _, _, emb = bank.solved("d50_8", "cotangent")
    assert emb.stats["method"] == "cg"
    assert emb.stats["iters"] > 0


def test_ideal_positions_42(bank):
    # single triangle: all 21 torus vertices are marked; the uniform solve
    # lands exactly on the regular honeycomb positions
    t, _, emb = bank.solved("tri_42", "uniform")
    ref = ideal_reference(t)
    assert len(ref) == t.mesh.n_vertices
    pin = ref[t.pin_vertex]
    for tv, xy in ref.items():
        d = t.lattice.mod_distance(xy - pin, emb.positions[tv])
        assert float(d) <= 1e-9


def test_ideal_positions_63(bank):
    t, _, emb = bank.solved("tetra_63", "uniform")
    ref = ideal_reference(t)
    assert len(ref) == t.mesh.n_vertices == 126
    pin = ref[t.pin_vertex]
    for tv, xy in ref.items():
        d = t.lattice.mod_distance(xy - pin, emb.positions[tv])
        assert float(d) <= 1e-9


def test_quad_identity_energy(bank):
    # each of the 4 copies maps the unit-square quad isometrically onto a
    # 1x1 block: Dirichlet energy = area = 1 per copy, 4 total
    t, w, emb = bank.solved("quad_4", "cotangent")
    assert tt.energy_of(t, w, emb) == pytest.approx(4.0, rel=1e-12)
    per = tt.per_copy_energies(t, w, emb)
    np.testing.assert_allclose(per, 1.0, rtol=1e-12)


def test_map_area_is_lattice_area(bank):
    for name in ("tri_8", "tri_42", "tetra_63"):
        t, w, emb = bank.solved(name, "uniform")
        assert map_area(emb) == pytest.approx(t.lattice.det, rel=1e-9)


def test_energy_minimality(bank):
    """The solution is the unique minimum: random perturbations only increase
    the energy (positive-weight system)."""
    t, w, emb = bank.solved("d50_42", "uniform")
    e0 = tt.energy_of(t, w, emb)
    rng = np.random.default_rng(11)
    base = emb.positions
    for _ in range(50):
        pert = rng.normal(scale=1e-3, size=base.shape)
        pert[t.pin_vertex] = 0.0
        trial = tt.TorusEmbedding(
            torus=t, lattice=t.lattice, positions=base + pert,
            jumps=emb.jumps, pin=emb.pin, stats=emb.stats,
        )
        assert tt.energy_of(t, w, trial) > e0


def test_develop_faces_coherent(bank):
    t, _, emb = bank.solved("d50_8", "uniform")
    copy_faces = [int(f) for f in t.face_map[2]]
    out = develop_faces(emb, copy_faces)
    m = t.mesh
    # shared edges of developed faces coincide exactly
    fset = set(copy_faces)
    for f in copy_faces:
        for c in range(3):
            h = 3 * f + c
            tw = int(m.twin[h])
            g = tw // 3
            if g in fset:
                a0 = out[f][c]
                a1 = out[g][(tw % 3 + 1) % 3]
                assert float(np.linalg.norm(a0 - a1)) <= 1e-9


def test_develop_copy_translation_consistency(bank):
    t, _, emb = bank.solved("tri_8", "uniform")
    uv0, fl0 = tt.develop_copy(emb, 0)
    assert uv0.shape == (t.pattern.n_vertices, 2)
    assert fl0.shape == (t.pattern.n_faces, 3, 2)
    # copy 0 is upright: corner images in lattice coordinates
    marks = t.sym["marks"]
    got = uv0[list(marks)] - uv0[marks[0]]
    np.testing.assert_allclose(
        got, [[0, 0], [0.5, 0.5], [0.0, 0.5]], atol=1e-12
    )


def test_disconnected_develop_raises(bank):
    t, _, emb = bank.solved("d50_8", "uniform")
    f0 = int(t.face_map[0][0])
    f1 = int(t.face_map[5][0])
    with pytest.raises(SolveError):
        develop_faces(emb, [f0, f1])
