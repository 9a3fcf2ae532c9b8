"""Checks and reports on solved torus maps: tile extraction, symmetry and
tiling verification, per-copy energy accounting, SVG and JSON output.

All symmetry checks compare positions of the actual solve, never the ideal
layout; they hold (to solver precision) for arbitrary input meshes because the
gluings relate copies by exact complex automorphisms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .construct import GluedTorus, _lambda63_rep
from .energy import EdgeWeights, face_corner_energy
from .errors import SolveError
from .mesh import boundary_loop
from .torus_solve import TorusEmbedding, develop_copy, develop_faces


# ---------------------------------------------------------------------------
# rigid alignment


def procrustes(src: np.ndarray, dst: np.ndarray, allow_scale: bool = False) -> dict:
    """Best orthogonal alignment (reflection permitted) of src onto dst.

    Returns rotation matrix, translation, scale, rms, and whether the optimal
    map reverses orientation.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - cs, dst - cd
    u, s, vt = np.linalg.svd(b.T @ a)
    rot = u @ vt
    denom = float((a * a).sum())
    scale = float(s.sum()) / denom if allow_scale and denom > 0 else 1.0
    mapped = scale * (a @ rot.T) + cd
    rms = float(np.sqrt(((mapped - dst) ** 2).sum() / len(src)))
    return {
        "rotation": rot,
        "translation": cd - scale * (rot @ cs),
        "scale": scale,
        "rms": rms,
        "reflected": bool(np.linalg.det(rot) < 0),
    }


# ---------------------------------------------------------------------------
# tile extraction


@dataclass
class TileExtraction:
    """Per-copy planar developments of a solved embedding."""

    embedding: TorusEmbedding
    uv: list[np.ndarray]  # per copy: (n_pattern, 2)
    face_uv: list[np.ndarray]  # per copy: (f_pattern, 3, 2)
    boundary: tuple[int, ...]  # pattern boundary loop (shared by all copies)

    @classmethod
    def from_embedding(cls, emb: TorusEmbedding) -> "TileExtraction":
        t = emb.torus
        uvs, face_uvs = [], []
        for c in range(t.copy_count):
            uv, fl = develop_copy(emb, c)
            uvs.append(uv)
            face_uvs.append(fl)
        loop = boundary_loop(t.pattern).vertices
        return cls(embedding=emb, uv=uvs, face_uv=face_uvs, boundary=loop)

    def area(self, c: int) -> float:
        fl = self.face_uv[c]
        d1 = fl[:, 1] - fl[:, 0]
        d2 = fl[:, 2] - fl[:, 0]
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if self.embedding.torus.mirrored[c]:
            signed = -signed
        return float(signed.sum())

    def areas(self) -> np.ndarray:
        return np.array([self.area(c) for c in range(len(self.uv))])

    def boundary_polygon(self, c: int) -> np.ndarray:
        return self.uv[c][list(self.boundary)]


@dataclass
class SymmetryReport:
    name: str
    max_deviation: float
    tol: float
    passed: bool
    per_item: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "passed": self.passed,
            "per_item": self.per_item,
        }


def _lattice_scale(emb: TorusEmbedding) -> float:
    b = emb.lattice.basis
    return float(np.linalg.norm(b[:, 0]) + np.linalg.norm(b[:, 1]))


_REFLECTION_PLANE = {
    "H": lambda p: p * np.array([1.0, -1.0]),
    "V": lambda p: p * np.array([-1.0, 1.0]),
    "DP": lambda p: p[..., ::-1].copy(),
    "DS": lambda p: -p[..., ::-1],
}


def check_reflections_8(emb: TorusEmbedding, tol: float | None = None) -> SymmetryReport:
    """Reflection symmetry of the solved positions, checked pointwise modulo
    the lattice: copy c's vertices land on copy perm(c)'s under the plane map.
    Applies to both reflection-symmetric constructions (8 and 4 copies)."""
    t = emb.torus
    perms = t.sym.get("reflections")
    if not perms:
        raise SolveError(f"construction {t.kind!r} has no reflection table")
    if tol is None:
        tol = 1e-8 * _lattice_scale(emb)
    pos = emb.positions
    per = {}
    worst = 0.0
    for name, perm in perms.items():
        plane = _REFLECTION_PLANE[name]
        dev = 0.0
        for c in range(t.copy_count):
            a = plane(pos[t.vertex_map[c]])
            b = pos[t.vertex_map[perm[c]]]
            dev = max(dev, float(np.max(emb.lattice.mod_distance(a, b))))
        per[name] = dev
        worst = max(worst, dev)
    return SymmetryReport(
        name="reflections",
        max_deviation=worst,
        tol=tol,
        passed=worst <= tol,
        per_item=per,
    )


_ROT120 = np.array([[-0.5, -math.sqrt(3.0) / 2.0], [math.sqrt(3.0) / 2.0, -0.5]])


def check_rotation_63(
    emb: TorusEmbedding,
    tiles: TileExtraction | None = None,
    tol: float | None = None,
) -> SymmetryReport:
    """Order-3 rotation symmetry of each developed tile: the vertex relabeling
    induced by the sphere rotation acts on every copy as a 120-degree rotation
    of the plane about the tile's own fixed point (the image of the antipode)."""
    t = emb.torus
    if t.kind != "sphere63":
        raise SolveError("rotation check applies to the sphere construction")
    if tol is None:
        tol = 1e-8 * _lattice_scale(emb)
    if tiles is None:
        tiles = TileExtraction.from_embedding(emb)
    sigma_d = t.sym["sigma_disk"]
    per = {}
    worst = 0.0
    centers = {}
    for c in range(t.copy_count):
        uv = tiles.uv[c]
        best = None
        for sign, rot in (("+120", _ROT120), ("-120", _ROT120.T)):
            img = uv @ rot.T
            shift = uv[sigma_d] - img
            tvec = shift.mean(axis=0)
            dev = float(np.max(np.linalg.norm(shift - tvec, axis=1)))
            if best is None or dev < best[0]:
                fixed = np.linalg.solve(np.eye(2) - rot, tvec)
                best = (dev, sign, fixed)
        per[str(c)] = best[0]
        centers[str(c)] = {"sign": best[1], "fixed_point": best[2].tolist()}
        worst = max(worst, best[0])
    return SymmetryReport(
        name="rotation63",
        max_deviation=worst,
        tol=tol,
        passed=worst <= tol,
        per_item=per,
        details={"centers": centers},
    )


# ---------------------------------------------------------------------------
# tiling checks


def _winding_contains(poly: np.ndarray, point: np.ndarray) -> bool:
    x, y = point
    px, py = poly[:, 0] - x, poly[:, 1] - y
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    angles = np.arctan2(px * qy - py * qx, px * qx + py * qy)
    return abs(angles.sum()) > math.pi  # ~2*pi inside, ~0 outside


def develop_group(emb: TorusEmbedding, copies) -> dict[int, np.ndarray]:
    """Coherent joint development of several copies (they must be contiguous).
    Returns per-copy uv arrays stitched in one common frame."""
    t = emb.torus
    faces = [int(f) for c in copies for f in t.face_map[c]]
    lifts = develop_faces(emb, faces)
    out = {}
    for c in copies:
        uv = np.full((t.pattern.n_vertices, 2), np.nan)
        for pf in range(t.pattern.n_faces):
            tf = int(t.face_map[c, pf])
            for cc in range(3):
                pc = cc if not t.mirrored[c] else (-cc) % 3
                uv[int(t.pattern.faces[pf, pc])] = lifts[tf][cc]
        out[int(c)] = uv
    return out


def check_tiling(
    emb: TorusEmbedding,
    tiles: TileExtraction | None = None,
    tol: float | None = None,
    samples_per_copy: int = 1,
) -> SymmetryReport:
    """Tiling verification: per-copy areas are equal shares of the cell, the
    total matches |det Lambda|, translate classes really are translates, and
    sampled interior points are covered by exactly one tile."""
    t = emb.torus
    if tiles is None:
        tiles = TileExtraction.from_embedding(emb)
    scale = _lattice_scale(emb)
    if tol is None:
        tol = 1e-8 * scale
    k = t.copy_count
    cell = emb.lattice.det
    areas = tiles.areas()
    area_dev = float(np.max(np.abs(areas - cell / k))) / cell
    total_dev = abs(float(areas.sum()) - cell) / cell

    # translate classes: developments of same-class copies differ by constants
    translate_dev = 0.0
    for cls in np.unique(t.tile_class):
        members = np.flatnonzero(t.tile_class == cls)
        if len(members) < 2:
            continue
        ref = tiles.uv[members[0]]
        for c in members[1:]:
            diff = tiles.uv[c] - ref
            spread = diff - diff.mean(axis=0)
            translate_dev = max(translate_dev, float(np.max(np.linalg.norm(spread, axis=1))))

    details: dict = {}
    # hexagon groups (42 copies): each group of 6 sectors develops as a unit,
    # and the 7 units are lattice translates of one another
    group_dev = 0.0
    if t.kind == "disk42":
        devs = []
        for g in range(7):
            members = [6 * g + j for j in range(6)]
            devs.append(develop_group(emb, members))
        for g in range(1, 7):
            stack_ref = np.concatenate([devs[0][6 * 0 + j] for j in range(6)])
            stack_g = np.concatenate([devs[g][6 * g + j] for j in range(6)])
            diff = stack_g - stack_ref
            spread = diff - diff.mean(axis=0)
            group_dev = max(group_dev, float(np.max(np.linalg.norm(spread, axis=1))))
        details["hexagon_group_translate_dev"] = group_dev

    # sphere construction: tiles of different classes are related by the exact
    # 120-degree rotation about a shared branch corner (identity relabeling)
    cross_dev = 0.0
    if t.kind == "sphere63":
        reps = t.sym["hex_reps"]
        index_of = {rep: i for i, rep in enumerate(reps)}
        for ca, (a, b) in enumerate(reps):
            # rotating 120 degrees about a shared branch corner carries hexagon
            # (a,b) to (-a-b, a+1), one translate class over, labels unchanged
            cb = index_of[_lambda63_rep(-a - b, a + 1)]
            img = tiles.uv[ca] @ _ROT120.T
            diff = tiles.uv[cb] - img
            spread = diff - diff.mean(axis=0)
            cross_dev = max(cross_dev, float(np.max(np.linalg.norm(spread, axis=1))))
        details["cross_class_rotation_dev"] = cross_dev

    # congruence for the reflection constructions (mirror classes)
    congruence_rms = 0.0
    if t.kind in ("disk8", "disk4"):
        ref = tiles.boundary_polygon(0)
        for c in range(1, k):
            fit = procrustes(tiles.boundary_polygon(c), ref)
            congruence_rms = max(congruence_rms, fit["rms"])
        details["congruence_rms"] = congruence_rms

    # sampled disjointness: interior points must lie in exactly one tile
    # (each tile tested at the lattice translates that could reach the sample)
    overlap_bad = 0
    rng = np.random.default_rng(11)
    polys = [tiles.boundary_polygon(c) for c in range(k)]
    centers = [p.mean(axis=0) for p in polys]
    lat = emb.lattice
    b = lat.basis
    for c in range(k):
        fl = tiles.face_uv[c]
        for _ in range(samples_per_copy):
            f = int(rng.integers(0, fl.shape[0]))
            w = rng.dirichlet(np.ones(3))
            point = (w[:, None] * fl[f]).sum(axis=0)
            hits = 0
            for c2 in range(k):
                base = np.round(lat.to_coords(point - centers[c2]))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        s = b @ (base + (di, dj))
                        if _winding_contains(polys[c2] + s, point):
                            hits += 1
            if hits != 1:
                overlap_bad += 1
    details["overlap_violations"] = overlap_bad

    worst = max(area_dev, total_dev, translate_dev, group_dev, cross_dev)
    per = {
        "per_copy_area_rel_dev": area_dev,
        "total_area_rel_dev": total_dev,
        "translate_class_dev": translate_dev,
    }
    return SymmetryReport(
        name="tiling",
        max_deviation=worst,
        tol=tol,
        passed=worst <= tol and overlap_bad == 0,
        per_item=per,
        details=details,
    )


# ---------------------------------------------------------------------------
# energies + flips


def per_copy_energies(
    t: GluedTorus, weights: EdgeWeights, emb: TorusEmbedding
) -> np.ndarray:
    """Dirichlet energy of each copy; seam edges contribute their per-face
    share to each side, so the values sum to the total map energy."""
    per_face = face_corner_energy(t.mesh, weights, emb.face_lifts())
    out = np.zeros(t.copy_count)
    np.add.at(out, t.face_copy, per_face)
    return out


def flip_count(emb: TorusEmbedding) -> int:
    """Number of faces whose lifted image is degenerate or flipped."""
    lifts = emb.face_lifts()
    d1 = lifts[:, 1] - lifts[:, 0]
    d2 = lifts[:, 2] - lifts[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return int(np.count_nonzero(signed <= 0.0))


# ---------------------------------------------------------------------------
# output


def emit_svg(emb: TorusEmbedding, path=None, size: int = 800) -> str:
    """Deterministic SVG of the tiling: faces reduced to the fundamental cell,
    one group per copy, hue by copy index."""
    t = emb.torus
    lat = emb.lattice
    b = lat.basis
    lifts = emb.face_lifts()
    centroids = lifts.mean(axis=1)
    shift = np.floor(lat.to_coords(centroids))
    reduced = lifts - (shift @ b.T)[:, None, :]

    cell = np.array([[0.0, 0.0], b[:, 0], b[:, 0] + b[:, 1], b[:, 1]])
    pts = np.concatenate([reduced.reshape(-1, 2), cell])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    margin = 0.04 * span
    s = (size - 2.0) / (span + 2 * margin)

    def xy(p):
        x = (p[0] - lo[0] + margin) * s + 1.0
        y = (hi[1] - p[1] + margin) * s + 1.0
        return f"{x:.3f},{y:.3f}"

    h_px = (hi[1] - lo[1] + 2 * margin) * s + 2.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {h_px:.3f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    fc = t.face_copy
    k = t.copy_count
    for c in range(k):
        hue = round(360.0 * c / k)
        out.append(
            f'<g class="tile" data-copy="{c}" fill="hsl({hue},62%,72%)" '
            'stroke="#333" stroke-width="0.35">'
        )
        for f in np.flatnonzero(fc == c):
            a, bb, cc = reduced[f]
            out.append(f'<path d="M{xy(a)} L{xy(bb)} L{xy(cc)} Z"/>')
        out.append("</g>")
    cell_pts = " ".join(xy(p) for p in cell)
    out.append(
        f'<polygon points="{cell_pts}" fill="none" stroke="black" stroke-width="1.2"/>'
    )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def emit_svg_uv(mesh, uv, path=None, size: int = 800) -> str:
    """Deterministic SVG of a single planar embedding (one tile, one group)."""
    uv = np.asarray(uv, dtype=float)
    lo, hi = uv.min(axis=0), uv.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    margin = 0.04 * span
    s = (size - 2.0) / (span + 2 * margin)

    def xy(p):
        return f"{(p[0] - lo[0] + margin) * s + 1.0:.3f},{(hi[1] - p[1] + margin) * s + 1.0:.3f}"

    h_px = (hi[1] - lo[1] + 2 * margin) * s + 2.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size} {h_px:.3f}">',
        '<rect width="100%" height="100%" fill="white"/>',
        '<g class="tile" data-copy="0" fill="hsl(0,62%,72%)" stroke="#333" stroke-width="0.35">',
    ]
    for f in mesh.faces:
        a, b, c = uv[f]
        out.append(f'<path d="M{xy(a)} L{xy(b)} L{xy(c)} Z"/>')
    out += ["</g>", "</svg>"]
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    return x


def emit_report(data: dict, path=None) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline.
    Byte-identical for identical inputs."""
    text = json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
