import json

import numpy as np
import pytest

import torustile as tt
from torustile.analysis import (
    TileExtraction,
    emit_svg_uv,
    procrustes,
)


SQRT3_2 = 0.8660254037844386


# --- procrustes -------------------------------------------------------------


def test_procrustes_recovers_rigid_motion():
    rng = np.random.default_rng(2)
    src = rng.normal(size=(40, 2))
    th = 0.7
    r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    dst = src @ r.T + np.array([3.0, -1.0])
    out = procrustes(src, dst)
    assert out["rms"] <= 1e-12
    assert not out["reflected"]
    np.testing.assert_allclose(out["rotation"], r, atol=1e-12)


def test_procrustes_detects_reflection():
    rng = np.random.default_rng(3)
    src = rng.normal(size=(25, 2))
    dst = src * np.array([1.0, -1.0])
    out = procrustes(src, dst)
    assert out["reflected"]
    assert out["rms"] <= 1e-12


def test_procrustes_scale():
    rng = np.random.default_rng(4)
    src = rng.normal(size=(30, 2))
    dst = 0.37 * src + 5.0
    out = procrustes(src, dst, allow_scale=True)
    assert out["scale"] == pytest.approx(0.37, rel=1e-12)
    assert out["rms"] <= 1e-12


# --- tiles ------------------------------------------------------------------


def test_tile_areas_disk8(bank):
    _, _, emb = bank.solved("tri_8", "uniform")
    tiles = TileExtraction.from_embedding(emb)
    np.testing.assert_allclose(tiles.areas(), 0.125, rtol=1e-12)


def test_tile_areas_disk42(bank):
    _, _, emb = bank.solved("d50_42", "uniform")
    tiles = TileExtraction.from_embedding(emb)
    areas = tiles.areas()
    np.testing.assert_allclose(areas, SQRT3_2 / 42, rtol=1e-8)
    assert areas.sum() == pytest.approx(SQRT3_2, rel=1e-10)


def test_tile_areas_63(bank):
    _, _, emb = bank.solved("tetra_63", "uniform")
    tiles = TileExtraction.from_embedding(emb)
    np.testing.assert_allclose(tiles.areas(), SQRT3_2 / 63, rtol=1e-9)


# --- symmetry checks --------------------------------------------------------


@pytest.mark.parametrize("scheme", ["uniform", "cotangent"])
@pytest.mark.parametrize("name", ["kite_8", "d50_8"])
def test_reflections(bank, name, scheme):
    _, _, emb = bank.solved(name, scheme)
    rep = tt.check_reflections_8(emb)
    assert rep.passed
    assert set(rep.per_item) == {"H", "V", "DP", "DS"}
    assert rep.max_deviation <= 1e-8


@pytest.mark.parametrize("scheme", ["uniform", "cotangent"])
def test_reflections_disk4(bank, scheme):
    _, _, emb = bank.solved("quad_4", scheme)
    rep = tt.check_reflections_8(emb)
    assert rep.passed
    assert set(rep.per_item) == {"H", "V"}


def test_corrupted_marking_breaks_reflections(bank):
    """Negative control: shearing the jump basis still solves but the tiles
    are no longer mirror images, and the checks must say so."""
    t, w, _ = bank.solved("d50_8", "uniform")
    j = tt.canonical_jumps(t)
    shear = np.array([[1, 1], [0, 1]])
    j2 = j.transformed(shear)
    j2.validate(t.mesh)
    emb = tt.solve_torus(t, w, j2)
    rep = tt.check_reflections_8(emb)
    assert not rep.passed
    assert rep.max_deviation > 1e-3


@pytest.mark.parametrize("scheme", ["uniform", "cotangent"])
@pytest.mark.parametrize("name", ["tetra_63", "sphere_63"])
def test_rotation_63(bank, name, scheme):
    _, _, emb = bank.solved(name, scheme)
    rep = tt.check_rotation_63(emb)
    assert rep.passed
    assert rep.max_deviation <= 1e-8


def test_rotation_63_rejects_sheared(bank):
    t, w, _ = bank.solved("tetra_63", "uniform")
    j2 = tt.canonical_jumps(t).transformed(np.array([[1, 1], [0, 1]]))
    emb = tt.solve_torus(t, w, j2)
    rep = tt.check_rotation_63(emb)
    assert not rep.passed


# --- tiling -----------------------------------------------------------------


@pytest.mark.parametrize(
    "name", ["tri_8", "quad_4", "d50_8", "d50_42", "tetra_63", "sphere_63"]
)
def test_tiling(bank, name):
    _, _, emb = bank.solved(name, "uniform")
    rep = tt.check_tiling(emb)
    assert rep.passed
    assert rep.max_deviation <= 1e-8
    assert rep.details["overlap_violations"] == 0


def test_tiling_hexagon_groups(bank):
    _, _, emb = bank.solved("d50_42", "uniform")
    rep = tt.check_tiling(emb)
    assert "hexagon_group_translate_dev" in rep.details
    assert rep.details["hexagon_group_translate_dev"] <= 1e-8


def test_tiling_cross_class_63(bank):
    _, _, emb = bank.solved("tetra_63", "uniform")
    rep = tt.check_tiling(emb)
    assert rep.details["cross_class_rotation_dev"] <= 1e-8


def test_flip_count_zero(bank):
    for name in ("tri_8", "quad_4", "d50_8", "d50_42", "tetra_63"):
        _, _, emb = bank.solved(name, "uniform")
        assert tt.flip_count(emb) == 0


def test_per_copy_energies_sum(bank):
    t, w, emb = bank.solved("d50_42", "cotangent")
    per = tt.per_copy_energies(t, w, emb)
    assert per.shape == (42,)
    assert per.sum() == pytest.approx(tt.energy_of(t, w, emb), rel=1e-12)
    assert np.ptp(per) / per.mean() <= 1e-9


# --- emitters ---------------------------------------------------------------


def test_svg_deterministic(bank, tmp_path):
    _, _, emb = bank.solved("d50_42", "uniform")
    s1 = tt.emit_svg(emb)
    s2 = tt.emit_svg(emb)
    assert s1 == s2
    assert s1.count('class="tile"') == 42
    assert s1.startswith("<svg")
    p = tmp_path / "t.svg"
    tt.emit_svg(emb, p)
    assert p.read_text() == s1


def test_svg_uv(disk50):
    res = tt.solve_direct(disk50, (0, 7, 13), tt.TargetShape.right_isosceles())
    s = emit_svg_uv(disk50, res.uv)
    assert s.startswith("<svg")
    assert s.count("<path") == disk50.n_faces


def test_report_canonical_json(tmp_path):
    data = {
        "b": np.float64(1.5),
        "a": np.arange(3),
        "frac": __import__("fractions").Fraction(2, 3),
        "nested": {"x": np.int64(7), "y": [True, None]},
    }
    s1 = tt.emit_report(data)
    s2 = tt.emit_report(data)
    assert s1 == s2
    loaded = json.loads(s1)
    assert loaded["a"] == [0, 1, 2]
    assert loaded["frac"] == [2, 3]
    assert loaded["nested"]["x"] == 7
    assert s1.endswith("\n")
    p = tmp_path / "r.json"
    tt.emit_report(data, p)
    assert p.read_text() == s1
