"""Acceptance gate: one test per shipped guarantee, each at its stated
tolerance. Every test prints a single PASS line (visible with -s) so a run
log doubles as a checklist."""

import json
from pathlib import Path

import numpy as np
import pytest

import torustile as tt
from torustile import fixtures as fx
from torustile.cli import main

DATA = Path(__file__).parent / "data"

ALL_TORI = (
    "tri_8", "tri_42", "quad_4", "kite_8",
    "d50_8", "d50_42", "d50_4", "tetra_63", "sphere_63",
)
DELAUNAY_TORI = ("d50_8", "d50_42", "d50_4")

EXPECTED_CELLS = {
    "tri_8": (4, 12, 8),
    "quad_4": (4, 12, 8),
    "tri_42": (21, 63, 42),
    "tetra_63": (126, 378, 252),
}


def test_criterion_01_cell_counts(bank):
    for name, (nv, ne, nf) in EXPECTED_CELLS.items():
        t = bank.torus(name)
        m = t.mesh                 # construction validates manifold links
        assert m.n_vertices == nv, name
        assert m.n_edges == ne, name
        assert m.n_faces == nf, name
        top = tt.classify(m)
        assert top["euler_characteristic"] == 0, name
        assert top["boundary_loop_count"] == 0, name
        assert top["genus_if_closed"] == 1, name
    print("PASS criterion 1: exact cell counts, chi=0, manifold links "
          "on all four constructions")


def test_criterion_02_branch_table(bank):
    t = bank.torus("tetra_63")
    rep = tt.validate_covering(t, bank.meshes["tetra"][0])
    table = rep["branch_table"]
    spec = t.branch_spec
    p_o = spec["p_O"]["vertex"]
    assert table[p_o] == {"preimages": 63, "local_degrees": [1]}
    leaves = spec["leaves"]["vertices"]
    assert len(leaves) == 3
    for v in leaves:
        assert table[v] == {"preimages": 21, "local_degrees": [3]}
    assert rep["riemann_hurwitz_sum"] == 126
    assert rep["riemann_hurwitz_ok"]
    print("PASS criterion 2: 63/21 preimage counts at degrees 1/3, "
          "Riemann-Hurwitz sum 126 (exact)")


def test_criterion_03_harmonic_solve(bank):
    worst = 0.0
    for name in ALL_TORI:
        for scheme in ("uniform", "cotangent"):
            _, _, emb = bank.solved(name, scheme)
            resid = emb.stats["residual"]
            assert resid <= 1e-10, (name, scheme, resid)
            worst = max(worst, resid)

    # jump invariants: antisymmetry, zero face sums, integer periods
    for name in ALL_TORI:
        t = bank.torus(name)
        j = tt.canonical_jumps(t)
        j.validate(t.mesh)
        tc = tt.tree_cotree(t.mesh)
        sums = j.generator_sums(tc.generators)
        assert np.array_equal(sums, np.rint(sums))

    # pin choice only translates the solution
    t = bank.torus("d50_42")
    w = tt.make_weights(t.mesh, "cotangent")
    j = tt.canonical_jumps(t)
    emb_a = tt.solve_torus(t, w, j)
    emb_b = tt.solve_torus(t, w, j, pin=t.mesh.n_vertices // 2)
    d = emb_b.positions - emb_a.positions
    pin_dev = float(np.max(emb_a.lattice.mod_distance(d, d[0])))
    assert pin_dev <= 1e-8
    print(f"PASS criterion 3: residual <= 1e-10 on {len(ALL_TORI)}x2 solves "
          f"(worst {worst:.2e}), jumps exact, pin-invariance {pin_dev:.2e}")


def test_criterion_04_reflections(bank):
    worst = 0.0
    for name in ("kite_8", "d50_8"):          # symmetric and asymmetric disk
        for scheme in ("uniform", "cotangent"):
            _, _, emb = bank.solved(name, scheme)
            rep = tt.check_reflections_8(emb)  # tol = 1e-8 * pattern scale
            assert rep.passed, (name, scheme, rep.max_deviation)
            assert set(rep.per_item) == {"H", "V", "DP", "DS"}
            worst = max(worst, rep.max_deviation)
    print(f"PASS criterion 4: all four reflections <= 1e-8*diameter on both "
          f"disks, both schemes (worst {worst:.2e})")


def test_criterion_05_first_copy(bank):
    targets = np.array([[0.0, 0.0], [0.5, 0.5], [0.0, 0.5]])
    mesh = bank.meshes["d50"]
    d = tt.MarkedDisk(mesh, fx.spread_marks(mesh, 3))
    for scheme in ("uniform", "cotangent"):
        t, w, emb = bank.solved("d50_8", scheme)
        uv, _ = tt.develop_copy(emb, 0)
        pm = list(t.sym["marks"])
        mark_dev = float(np.max(emb.lattice.mod_distance(uv[pm], targets)))
        assert mark_dev <= 1e-8, scheme

        # boundary arcs land on the straight octant sides
        col_dev = 0.0
        for p in d.paths():
            a, b = uv[p[0]], uv[p[-1]]
            e = b - a
            n = np.array([-e[1], e[0]]) / np.linalg.norm(e)
            col_dev = max(col_dev, float(np.abs((uv[list(p)] - a) @ n).max()))
        assert col_dev <= 1e-8, scheme

        en = tt.per_copy_energies(t, w, emb)
        spread = float(np.ptp(en) / np.mean(en))
        assert spread <= 1e-9, scheme
    print("PASS criterion 5: first-copy marks at (0,0),(1/2,1/2),(0,1/2), "
          "boundary arcs collinear <= 1e-8, energy spread <= 1e-9")


def test_criterion_06_42_tiling(bank):
    t, _, emb = bank.solved("d50_42", "uniform")
    tiles = tt.TileExtraction.from_embedding(emb)
    total = float(tiles.areas().sum())
    target = np.sqrt(3.0) / 2.0
    assert abs(total - target) <= 1e-8 * target

    rep = tt.check_tiling(emb)
    assert rep.passed
    hex_dev = rep.details["hexagon_group_translate_dev"]
    assert hex_dev <= 1e-8

    # every copy's tile is equilateral up to relative edge-length deviation
    pm = list(t.sym["marks"])
    worst = 0.0
    for c in range(t.copy_count):
        uv, _ = tt.develop_copy(emb, c)
        corners = uv[pm]
        sides = np.linalg.norm(np.roll(corners, -1, axis=0) - corners, axis=1)
        worst = max(worst, float(np.ptp(sides) / np.mean(sides)))
    assert worst <= 1e-7
    print(f"PASS criterion 6: areas sum to sqrt(3)/2 (rel {abs(total - target) / target:.2e}), "
          f"hexagon translates {hex_dev:.2e}, equilateral tiles (worst {worst:.2e})")


def test_criterion_07_direct_vs_torus(bank):
    m = bank.meshes["d50"]
    cases = [
        ("right_isosceles", (0, 7, 13)),
        ("equilateral", (0, 7, 13)),
        ("rectangle", (0, 5, 10, 15)),
    ]
    worst = 0.0
    for shape_name, marks in cases:
        shape = tt.TargetShape.by_name(shape_name)
        for scheme in ("uniform", "cotangent"):
            chk = tt.crosscheck_against_torus(m, marks, shape, scheme=scheme)
            assert chk["rel_rms"] <= 1e-7, (shape_name, scheme, chk["rel_rms"])
            assert not chk["reflected"]
            worst = max(worst, chk["rel_rms"])
    print(f"PASS criterion 7: direct vs torus RMS <= 1e-7*diameter on all "
          f"three shapes, both schemes (worst {worst:.2e})")


def test_criterion_08_63_symmetry(bank):
    for name in ("tetra_63", "sphere_63"):
        for scheme in ("uniform", "cotangent"):
            t, w, emb = bank.solved(name, scheme)
            rot = tt.check_rotation_63(emb)   # tol = 1e-8 * pattern scale
            assert rot.passed, (name, scheme, rot.max_deviation)
            til = tt.check_tiling(emb)
            assert til.passed, (name, scheme)
            assert til.details["overlap_violations"] == 0
            en = tt.per_copy_energies(t, w, emb)
            assert float(np.ptp(en) / np.mean(en)) <= 1e-9
    print("PASS criterion 8: rotation check <= 1e-8, tiling partition, "
          "energy spread <= 1e-9 on both sphere fixtures")


def test_criterion_09_bijectivity(bank):
    runs = [(name, "uniform") for name in ALL_TORI]
    runs += [(name, "cotangent") for name in DELAUNAY_TORI]
    for name, scheme in runs:
        _, w, emb = bank.solved(name, scheme)
        assert float(w.halfedge.min()) > 0.0, (name, scheme)
        assert tt.flip_count(emb) == 0, (name, scheme)
    print(f"PASS criterion 9: flip_count = 0 on all {len(runs)} "
          f"positive-weight runs")


def test_criterion_10_conformality(bank):
    # conformal energy of a map is its continuous Dirichlet energy minus the
    # signed image area, so it is always measured with cotangent weights no
    # matter which scheme produced the map
    for name in ALL_TORI:
        _, w_cot, _ = bank.solved(name, "cotangent")
        for scheme in ("uniform", "cotangent"):
            t, _, emb = bank.solved(name, scheme)
            if tt.flip_count(emb) != 0:
                continue                       # not orientation-preserving
            conf = tt.energy_of(t, w_cot, emb) - tt.map_area(emb)
            assert conf >= -1e-12, (name, scheme, conf)

    m = bank.meshes["d50"]
    w = tt.make_weights(m, "cotangent")
    ident = tt.conformal_energy(m, w, m.vertices[:, :2])
    assert abs(ident) <= 1e-12
    print(f"PASS criterion 10: conformal energy >= 0 on all runs, "
          f"= {ident:.2e} for the planar identity")


def test_criterion_11_determinism(tmp_path):
    args = [
        "run",
        "--mode", "disk-isosceles",
        "--input", str(DATA / "triangle.obj"),
        "--marks", "0,1,2",
        "--weights", "uniform",
        "--method", "both",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(a)]) == 0
    assert main(args + ["--out-dir", str(b)]) == 0
    ra = (a / "triangle.report.json").read_bytes()
    rb = (b / "triangle.report.json").read_bytes()
    assert ra == rb
    assert (a / "triangle.svg").read_bytes() == (b / "triangle.svg").read_bytes()
    json.loads(ra)                             # well-formed
    print("PASS criterion 11: repeated runs produce byte-identical reports")
