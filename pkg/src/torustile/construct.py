"""Glued-torus constructions: k identically embedded copies of a mesh, joined
along boundary paths (disks) or cut paths (spheres) into a closed chi=0 complex.

Copies are immersed, not embedded: they share 3D geometry, and gluing only ever
identifies vertices occupying the same point in space. Mirrored copies store
their faces with reversed orientation so the quotient stays consistently
oriented; the ideal tile placements recorded per copy drive the canonical
homology marking (see torus_solve.canonical_jumps).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import CutSystemError, MarkError, MeshInvalidError, TopologyError
from .lattice import Lattice
from .mesh import NO_TWIN, SurfaceMesh, boundary_loop, classify, he_next

Frac2 = tuple[Fraction, Fraction]

# ---------------------------------------------------------------------------
# marked inputs


@dataclass(frozen=True)
class MarkedDisk:
    """A disk mesh with 3 or 4 marked boundary vertices in boundary-loop order."""

    mesh: SurfaceMesh
    marks: tuple[int, ...]

    def __post_init__(self):
        marks = tuple(int(m) for m in self.marks)
        object.__setattr__(self, "marks", marks)
        if len(marks) not in (3, 4):
            raise MarkError(f"need 3 or 4 marks, got {len(marks)}")
        if len(set(marks)) != len(marks):
            raise MarkError(f"marks must be distinct, got {marks}")
        loop = boundary_loop(self.mesh).vertices
        pos = []
        for m in marks:
            if m not in loop:
                raise MarkError(f"mark {m} is not a boundary vertex")
            pos.append(loop.index(m))
        # cyclic order check: offsets from the first mark must be increasing
        rel = [(p - pos[0]) % len(loop) for p in pos]
        if rel != sorted(rel):
            raise MarkError(f"marks {marks} are not in boundary-loop order")

    def paths(self) -> list[list[int]]:
        """Boundary paths between consecutive marks (endpoints included)."""
        loop = list(boundary_loop(self.mesh).vertices)
        n = len(loop)
        start = loop.index(self.marks[0])
        loop = loop[start:] + loop[:start]
        cuts = [loop.index(m) for m in self.marks]
        cuts.append(n)
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            seg = loop[a : b + 1] if b < n else loop[a:] + [loop[0]]
            out.append(seg)
        return out


@dataclass(frozen=True)
class SphereCutSystem:
    """A sphere mesh with cone vertex p_O, three symmetric cut paths, and the
    order-3 rotation sigma carrying path j to path j+1."""

    mesh: SurfaceMesh
    p_O: int
    paths: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    sigma: np.ndarray

    def __post_init__(self):
        rep = classify(self.mesh)
        if rep["euler_characteristic"] != 2 or rep["boundary_loop_count"] != 0:
            raise TopologyError("cut system needs a closed genus-0 mesh")
        sigma = np.asarray(self.sigma, dtype=np.int64)
        object.__setattr__(self, "sigma", sigma)
        paths = tuple(tuple(int(v) for v in p) for p in self.paths)
        object.__setattr__(self, "paths", paths)
        n = self.mesh.n_vertices
        if sigma.shape != (n,) or sorted(sigma) != list(range(n)):
            raise CutSystemError("sigma is not a permutation of the vertices")
        if sigma[self.p_O] != self.p_O:
            raise CutSystemError("sigma must fix p_O")
        s2 = sigma[sigma]
        if np.array_equal(sigma, np.arange(n)) or not np.array_equal(
            sigma[s2], np.arange(n)
        ):
            raise CutSystemError("sigma must have order exactly 3")
        sigma_face(self.mesh, sigma)  # raises if not a simplicial automorphism
        if len(paths) != 3:
            raise CutSystemError("need exactly 3 cut paths")
        seen: set[int] = set()
        for j, p in enumerate(paths):
            if len(p) < 2 or p[0] != self.p_O:
                raise CutSystemError(f"path {j} must start at p_O with >= 1 edge")
            if len(set(p)) != len(p):
                raise CutSystemError(f"path {j} is not simple")
            body = set(p[1:])
            if seen & body:
                raise CutSystemError(
                    f"cut paths intersect away from p_O at {sorted(seen & body)}"
                )
            seen |= body
        for j in range(3):
            img = tuple(int(sigma[v]) for v in paths[j])
            if img != paths[(j + 1) % 3]:
                raise CutSystemError(f"sigma does not map path {j} to path {j + 1}")

    @property
    def leaves(self) -> tuple[int, int, int]:
        return tuple(p[-1] for p in self.paths)


def sigma_face(mesh: SurfaceMesh, sigma: np.ndarray) -> np.ndarray:
    """Face permutation induced by a vertex permutation; orientation must be
    preserved (images are cyclic rotations of existing faces)."""
    lookup = {}
    for f, tri in enumerate(mesh.faces):
        for r in range(3):
            lookup[tuple(np.roll(tri, r))] = f
    out = np.empty(mesh.n_faces, dtype=np.int64)
    for f, tri in enumerate(mesh.faces):
        img = tuple(int(sigma[v]) for v in tri)
        if img not in lookup:
            raise CutSystemError(
                f"vertex map does not act simplicially on face {f} {tuple(tri)}"
            )
        out[f] = lookup[img]
    return out


# ---------------------------------------------------------------------------
# glued torus


@dataclass
class GluedTorus:
    mesh: SurfaceMesh
    kind: str
    copy_count: int
    pattern: SurfaceMesh
    vertex_map: np.ndarray  # (k, n_pattern) -> torus vertex
    face_map: np.ndarray  # (k, f_pattern) -> torus face
    mirrored: np.ndarray  # (k,) bool
    lattice: Lattice
    ideal: list[dict[int, Frac2]]  # per copy: boundary pattern vertex -> lattice coords
    tile_class: np.ndarray  # (k,) translate-equivalence class id
    group_id: np.ndarray  # (k,) hexagon / block grouping
    pin_vertex: int
    sym: dict = field(default_factory=dict)
    base: SurfaceMesh | None = None
    base_vertex: np.ndarray | None = None  # (n_pattern,) -> base vertex
    branch_spec: dict | None = None

    @property
    def face_copy(self) -> np.ndarray:
        fc = np.empty(self.mesh.n_faces, dtype=np.int64)
        for c in range(self.copy_count):
            fc[self.face_map[c]] = c
        return fc

    def torus_halfedge(self, c: int, h: int) -> int:
        """Torus halfedge carrying pattern halfedge h inside copy c."""
        pf, pc = divmod(h, 3)
        # mirrored faces are stored (a, d, b): the edge at pattern corner pc
        # spans stored corners (2-pc)%3 -> (2-pc+1)%3, reversed
        cc = pc if not self.mirrored[c] else (2 - pc) % 3
        return 3 * int(self.face_map[c, pf]) + cc

    def halfedge_pattern(self, h: int) -> tuple[int, int, int]:
        """(copy, pattern tail vertex, pattern head vertex) of torus halfedge h."""
        f, cc = divmod(h, 3)
        c = self.face_copy_of(f)
        pf = int(self._pf[f])
        if self.mirrored[c]:
            tail = int(self.pattern.faces[pf, (-cc) % 3])
            head = int(self.pattern.faces[pf, (-(cc + 1)) % 3])
        else:
            tail = int(self.pattern.faces[pf, cc])
            head = int(self.pattern.faces[pf, (cc + 1) % 3])
        return c, tail, head

    def face_copy_of(self, f: int) -> int:
        return int(self._fc[f])

    def __post_init__(self):
        self._fc = self.face_copy
        self._pf = np.empty(self.mesh.n_faces, dtype=np.int64)
        for c in range(self.copy_count):
            self._pf[self.face_map[c]] = np.arange(self.face_map.shape[1])


def _glue(pattern, copies_mirrored, vertex_pairs, edge_pairs, positions=None):
    """Assemble the quotient complex of k pattern copies.

    vertex_pairs: ((cA, pA), (cB, pB)) identifications; edge_pairs the matching
    boundary-halfedge twins ((cA, hA), (cB, hB)).
    """
    k = len(copies_mirrored)
    nv, nf = pattern.n_vertices, pattern.n_faces
    parent = list(range(k * nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for (ca, pa), (cb, pb) in vertex_pairs:
        union(ca * nv + pa, cb * nv + pb)

    quotient = {}
    vertex_map = np.empty((k, nv), dtype=np.int64)
    verts = []
    pos = pattern.vertices if positions is None else positions
    for c in range(k):
        for p in range(nv):
            r = find(c * nv + p)
            if r not in quotient:
                quotient[r] = len(verts)
                verts.append(pos[p])
            vertex_map[c, p] = quotient[r]

    face_map = np.empty((k, nf), dtype=np.int64)
    faces = np.empty((k * nf, 3), dtype=np.int64)
    for c in range(k):
        for f in range(nf):
            tf = c * nf + f
            face_map[c, f] = tf
            a, b, d = pattern.faces[f]
            if copies_mirrored[c]:
                faces[tf] = (vertex_map[c, a], vertex_map[c, d], vertex_map[c, b])
            else:
                faces[tf] = (vertex_map[c, a], vertex_map[c, b], vertex_map[c, d])

    def the(c, h):
        # edge corner map: mirrored storage (a, d, b) sends edge pc to (2-pc)%3
        pf, pc = divmod(h, 3)
        cc = pc if not copies_mirrored[c] else (2 - pc) % 3
        return 3 * (c * nf + pf) + cc

    twin = np.full(3 * k * nf, NO_TWIN, dtype=np.int64)
    for c in range(k):
        for h in range(3 * nf):
            t = pattern.twin[h]
            if t != NO_TWIN:
                twin[the(c, h)] = the(c, t)
    for (ca, ha), (cb, hb) in edge_pairs:
        ta, tb = the(ca, ha), the(cb, hb)
        if twin[ta] != NO_TWIN or twin[tb] != NO_TWIN:
            raise MeshInvalidError("gluing touches an edge twice")
        twin[ta], twin[tb] = tb, ta
    if np.any(twin == NO_TWIN):
        raise MeshInvalidError("gluing left open boundary edges; torus not closed")

    mesh = SurfaceMesh.from_halfedges(np.asarray(verts), faces, twin)
    # glued halfedges must run between identical quotient vertices, reversed
    for h in range(mesh.n_halfedges):
        t = int(mesh.twin[h])
        if mesh.tail(h) != mesh.head(t):
            raise MeshInvalidError("glued edge endpoints disagree")
    if mesh.euler_characteristic != 0:
        raise TopologyError(
            f"glued complex has chi={mesh.euler_characteristic}, expected 0"
        )
    if not mesh.is_connected():
        raise TopologyError("glued complex is not connected")
    return mesh, vertex_map, face_map


def _boundary_he_by_tail(pattern: SurfaceMesh) -> dict[int, int]:
    return {pattern.tail(h): int(h) for h in pattern.boundary_halfedges()}


def _path_halfedges(pattern, path):
    """Boundary halfedges p_i -> p_{i+1} along a boundary path."""
    by_tail = _boundary_he_by_tail(pattern)
    hes = []
    for a, b in zip(path[:-1], path[1:]):
        h = by_tail.get(a)
        if h is None or pattern.head(h) != b:
            raise MarkError(f"({a}, {b}) is not a boundary edge in loop order")
        hes.append(h)
    return hes


def _mirror_gluings(pattern, pairings):
    """Vertex and edge identifications for path-to-path gluing of mirror copies.

    pairings: list of (path_vertices, [(copyA, copyB), ...]).
    """
    vertex_pairs, edge_pairs = [], []
    for path, pairs in pairings:
        hes = _path_halfedges(pattern, path)
        for ca, cb in pairs:
            for p in path:
                vertex_pairs.append(((ca, p), (cb, p)))
            for h in hes:
                edge_pairs.append(((ca, h), (cb, h)))
    return vertex_pairs, edge_pairs


def _check_mirror_parity(mirrored, pairings):
    for _, pairs in pairings:
        for ca, cb in pairs:
            if mirrored[ca] == mirrored[cb]:
                raise MeshInvalidError(
                    f"gluing {ca}-{cb} joins copies of equal chirality"
                )


def _seg_ideals(path, a: Frac2, b: Frac2) -> dict[int, Frac2]:
    """Equally spaced ideal positions for a path mapped onto segment a->b."""
    m = len(path) - 1
    out = {}
    for i, p in enumerate(path):
        t = Fraction(i, m)
        out[p] = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    return out


def _merge_ideals(*parts: dict[int, Frac2]) -> dict[int, Frac2]:
    out: dict[int, Frac2] = {}
    for part in parts:
        for v, q in part.items():
            if v in out and out[v] != q:
                raise MeshInvalidError(f"conflicting ideal positions for vertex {v}")
            out[v] = q
    return out


# ---------------------------------------------------------------------------
# 8 copies -> unit-square torus (octant layout)

# ideal corners (v0, v1, v2) per copy, unit-square lattice coords
_EIGHT_IDEALS = [
    ((0, 0), (1, 1), (0, 1)),
    ((0, 0), (1, 1), (1, 0)),
    ((2, 0), (1, 1), (1, 0)),
    ((2, 0), (1, 1), (2, 1)),
    ((2, 2), (1, 1), (2, 1)),
    ((2, 2), (1, 1), (1, 2)),
    ((0, 2), (1, 1), (1, 2)),
    ((0, 2), (1, 1), (0, 1)),
]  # in halves: divide by 2

GLUE_8 = {
    0: [(0, 1), (2, 3), (4, 5), (6, 7)],
    1: [(0, 7), (1, 2), (3, 4), (5, 6)],
    2: [(0, 3), (1, 6), (2, 5), (4, 7)],
}

_REFLECT_8 = {
    "H": [7, 6, 5, 4, 3, 2, 1, 0],
    "V": [3, 2, 1, 0, 7, 6, 5, 4],
    "DP": [1, 0, 7, 6, 5, 4, 3, 2],
    "DS": [5, 4, 3, 2, 1, 0, 7, 6],
}


def build_torus_8(d: MarkedDisk, _pairings=None) -> GluedTorus:
    """Eight mirror-alternating copies over the octants of the unit square."""
    if len(d.marks) != 3:
        raise MarkError("8-copy construction needs exactly 3 marks")
    paths = d.paths()
    mirrored = [c % 2 == 1 for c in range(8)]
    table = GLUE_8 if _pairings is None else _pairings
    pairings = [(paths[j], table[j]) for j in range(3)]
    _check_mirror_parity(mirrored, pairings)
    vp, ep = _mirror_gluings(d.mesh, pairings)
    mesh, vmap, fmap = _glue(d.mesh, mirrored, vp, ep)

    half = Fraction(1, 2)
    ideal = []
    for c in range(8):
        corners = [
            (x * half, y * half) for x, y in _EIGHT_IDEALS[c]
        ]
        ideal.append(
            _merge_ideals(
                _seg_ideals(paths[0], corners[0], corners[1]),
                _seg_ideals(paths[1], corners[1], corners[2]),
                _seg_ideals(paths[2], corners[2], corners[0]),
            )
        )
    return GluedTorus(
        mesh=mesh,
        kind="disk8",
        copy_count=8,
        pattern=d.mesh,
        vertex_map=vmap,
        face_map=fmap,
        mirrored=np.array(mirrored),
        lattice=Lattice.unit_square(),
        ideal=ideal,
        tile_class=np.arange(8),
        group_id=np.arange(8),
        pin_vertex=int(vmap[0, d.marks[0]]),
        sym={"reflections": _REFLECT_8, "marks": d.marks},
        base=d.mesh,
        base_vertex=np.arange(d.mesh.n_vertices),
    )


# ---------------------------------------------------------------------------
# 4 copies -> rectangle torus (2x2 reflected blocks)

GLUE_4 = {
    0: [(0, 2), (1, 3)],
    1: [(0, 1), (2, 3)],
    2: [(0, 2), (1, 3)],
    3: [(0, 1), (2, 3)],
}

_FOUR_IDEALS = [
    ((0, 0), (1, 0), (1, 1), (0, 1)),
    ((2, 0), (1, 0), (1, 1), (2, 1)),
    ((0, 2), (1, 2), (1, 1), (0, 1)),
    ((2, 2), (1, 2), (1, 1), (2, 1)),
]  # in halves

_REFLECT_4 = {"H": [2, 3, 0, 1], "V": [1, 0, 3, 2]}


def build_torus_4(d: MarkedDisk, width: float = 1.0, height: float = 1.0) -> GluedTorus:
    """Four copies over a 2x2 reflected block layout; torus lattice <(2W,0),(0,2H)>."""
    if len(d.marks) != 4:
        raise MarkError("4-copy construction needs exactly 4 marks")
    paths = d.paths()
    mirrored = [False, True, True, False]
    pairings = [(paths[j], GLUE_4[j]) for j in range(4)]
    _check_mirror_parity(mirrored, pairings)
    vp, ep = _mirror_gluings(d.mesh, pairings)
    mesh, vmap, fmap = _glue(d.mesh, mirrored, vp, ep)

    half = Fraction(1, 2)
    ideal = []
    for c in range(4):
        corners = [(x * half, y * half) for x, y in _FOUR_IDEALS[c]]
        ideal.append(
            _merge_ideals(
                *(
                    _seg_ideals(paths[j], corners[j], corners[(j + 1) % 4])
                    for j in range(4)
                )
            )
        )
    return GluedTorus(
        mesh=mesh,
        kind="disk4",
        copy_count=4,
        pattern=d.mesh,
        vertex_map=vmap,
        face_map=fmap,
        mirrored=np.array(mirrored),
        lattice=Lattice.rectangle(2.0 * width, 2.0 * height),
        ideal=ideal,
        tile_class=np.arange(4),
        group_id=np.arange(4),
        pin_vertex=int(vmap[0, d.marks[0]]),
        sym={"reflections": _REFLECT_4, "marks": d.marks},
        base=d.mesh,
        base_vertex=np.arange(d.mesh.n_vertices),
    )


# ---------------------------------------------------------------------------
# 42 copies -> rhombic torus (7 hexagons x 6 sectors)

# triangular-lattice ("hex") coordinates: point (a, b) = a*u1 + b*u2 with
# u1 = (1, 0), u2 = (cos60, sin60). Hexagon centers form the full lattice;
# the 7 center classes are Z^2 / Lambda7, Lambda7 = <(2,1), (-1,3)>.

_HEX_CORNERS = [
    (Fraction(1, 3), Fraction(1, 3)),  # 30 degrees
    (Fraction(-1, 3), Fraction(2, 3)),  # 90
    (Fraction(-2, 3), Fraction(1, 3)),  # 150
    (Fraction(-1, 3), Fraction(-1, 3)),  # 210
    (Fraction(1, 3), Fraction(-2, 3)),  # 270
    (Fraction(2, 3), Fraction(-1, 3)),  # 330
]

_HEX_DIRS = [(0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0)]

# hexagon-class offset of the neighbor across each sector's rim edge
_RIM_NEIGHBOR_CLASS = [5, 4, 6, 2, 3, 1]


def _m7_inv(a: Fraction, b: Fraction) -> Frac2:
    """Hex coords -> lattice coords of the rhombic torus (Lambda7 basis -> I)."""
    return (Fraction(3 * a + b, 7), Fraction(-a + 2 * b, 7))


def hexagon_class_7(a: int, b: int) -> int:
    return (a - 2 * b) % 7


def build_torus_42(d: MarkedDisk) -> GluedTorus:
    """42 copies: each of 7 hexagon classes split into 6 mirror-alternating
    sectors; v0 sits at hexagon centers, v1 at even corners, v2 at odd corners."""
    if len(d.marks) != 3:
        raise MarkError("42-copy construction needs exactly 3 marks")
    paths = d.paths()
    k = 42

    def idx(t, j):
        return 6 * t + j

    mirrored = [j % 2 == 1 for t in range(7) for j in range(6)]

    pair_lists = {0: [], 1: [], 2: []}
    for t in range(7):
        for a, b in ((1, 2), (3, 4), (5, 0)):
            pair_lists[0].append((idx(t, a), idx(t, b)))
        for a, b in ((0, 1), (2, 3), (4, 5)):
            pair_lists[2].append((idx(t, a), idx(t, b)))
    for t in range(7):
        for j in range(6):
            t2 = (t + _RIM_NEIGHBOR_CLASS[j]) % 7
            a, b = idx(t, j), idx(t2, (j + 3) % 6)
            if a < b:
                pair_lists[1].append((a, b))
    pairings = [(paths[j], pair_lists[j]) for j in range(3)]
    _check_mirror_parity(mirrored, pairings)
    vp, ep = _mirror_gluings(d.mesh, pairings)
    mesh, vmap, fmap = _glue(d.mesh, mirrored, vp, ep)

    ideal = []
    for t in range(7):
        center = (Fraction(t), Fraction(0))
        for j in range(6):
            ca = _HEX_CORNERS[j]
            cb = _HEX_CORNERS[(j + 1) % 6]
            corner_a = (center[0] + ca[0], center[1] + ca[1])
            corner_b = (center[0] + cb[0], center[1] + cb[1])
            v1_pos, v2_pos = (corner_a, corner_b) if j % 2 == 0 else (corner_b, corner_a)
            c0 = _m7_inv(*center)
            c1 = _m7_inv(*v1_pos)
            c2 = _m7_inv(*v2_pos)
            ideal.append(
                _merge_ideals(
                    _seg_ideals(paths[0], c0, c1),
                    _seg_ideals(paths[1], c1, c2),
                    _seg_ideals(paths[2], c2, c0),
                )
            )
    return GluedTorus(
        mesh=mesh,
        kind="disk42",
        copy_count=k,
        pattern=d.mesh,
        vertex_map=vmap,
        face_map=fmap,
        mirrored=np.array(mirrored),
        lattice=Lattice.rhombic(),
        ideal=ideal,
        tile_class=np.array([j for t in range(7) for j in range(6)]),
        group_id=np.array([t for t in range(7) for j in range(6)]),
        pin_vertex=int(vmap[0, d.marks[0]]),
        sym={"marks": d.marks},
        base=d.mesh,
        base_vertex=np.arange(d.mesh.n_vertices),
    )


# ---------------------------------------------------------------------------
# 63 copies of a cut-open sphere -> rhombic torus

# Hexagon centers live on the triangular lattice modulo Lambda63 = 3 * Lambda7
# (index 63, HNF basis <(3,12), (0,21)>). Hexagon (a,b) rotates its boundary
# word by r(a,b) = (4a + 2b) mod 6; the word is (11, 12, 21, 22, 31, 32), so
# opposite sides of adjacent hexagons always pair side k1 against side k2 of
# the same cut k (r changes by 2 or 4 in step with the side index shift of 3).

_WORD = ((0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2))  # (cut, side-of-cut)


def _lambda63_rep(a: int, b: int) -> tuple[int, int]:
    a0 = a % 3
    k = (a - a0) // 3
    return a0, (b - 12 * k) % 21


def _hex63_index(a: int, b: int) -> int:
    a0, b0 = _lambda63_rep(a, b)
    return 21 * a0 + b0


def _r63(a: int, b: int) -> int:
    return (4 * a + 2 * b) % 6


def _m63_inv(a: Fraction, b: Fraction) -> Frac2:
    return (Fraction(3 * a + b, 21), Fraction(-a + 2 * b, 21))


@dataclass
class CutDisk:
    """A sphere cut open along the three paths: a disk whose boundary reads
    p_O, side 11, L_0, side 12, p_O, side 21, L_1, ... in walk order."""

    mesh: SurfaceMesh
    base_vertex: np.ndarray  # dup -> sphere vertex
    sides: list[list[int]]  # 6 dup sequences in boundary-walk order
    cut_order: tuple[int, int, int]  # original path index of effective cuts 0,1,2
    sigma_disk: np.ndarray  # dup permutation induced by the effective rotation
    sigma_disk_face: np.ndarray
    p_O_dups: tuple[int, int, int]
    leaf_dups: tuple[int, int, int]


def cut_sphere(cut: SphereCutSystem) -> CutDisk:
    sphere = cut.mesh
    cut_edges = set()
    for p in cut.paths:
        for a, b in zip(p[:-1], p[1:]):
            cut_edges.add(frozenset((a, b)))

    outgoing = [[] for _ in range(sphere.n_vertices)]
    for h in range(sphere.n_halfedges):
        outgoing[sphere.tail(h)].append(h)

    # group the corner fan at each vertex, splitting after every cut edge
    corner_group = np.full(sphere.n_halfedges, -1, dtype=np.int64)
    dup_base, dup_id = [], {}
    for v in range(sphere.n_vertices):
        out = outgoing[v]
        if not out:
            continue
        cuts_here = [h for h in out if frozenset((v, sphere.head(h))) in cut_edges]
        if cuts_here:
            # one group per incident cut edge, starting just past the crossing
            for s in sorted(he_next(int(sphere.twin[h])) for h in cuts_here):
                d = len(dup_base)
                dup_base.append(v)
                h = s
                while True:
                    corner_group[h] = d
                    crossed = frozenset((v, sphere.head(h)))
                    h = he_next(int(sphere.twin[h]))
                    if crossed in cut_edges:
                        break
        else:
            d = len(dup_base)
            dup_base.append(v)
            s = min(out)
            h = s
            while True:
                corner_group[h] = d
                h = he_next(int(sphere.twin[h]))
                if h == s:
                    break

    faces = np.empty_like(sphere.faces)
    for f in range(sphere.n_faces):
        for c in range(3):
            faces[f, c] = corner_group[3 * f + c]
    twin = sphere.twin.copy()
    for h in range(sphere.n_halfedges):
        if frozenset((sphere.tail(h), sphere.head(h))) in cut_edges:
            twin[h] = NO_TWIN
    base_vertex = np.array(dup_base, dtype=np.int64)
    positions = sphere.vertices[base_vertex]
    disk = SurfaceMesh.from_halfedges(positions, faces, twin)
    rep = classify(disk)
    if rep["euler_characteristic"] != 1 or rep["boundary_loop_count"] != 1:
        raise CutSystemError("cutting along the paths did not produce a disk")

    loop = list(boundary_loop(disk).vertices)
    p_O = cut.p_O
    leaves = set(cut.leaves)
    # start the walk on the boundary edge leaving p_O along path 0
    start = None
    for i, dp in enumerate(loop):
        nxt = loop[(i + 1) % len(loop)]
        if base_vertex[dp] == p_O and base_vertex[nxt] == cut.paths[0][1]:
            start = i
            break
    if start is None:
        raise CutSystemError("could not locate the first cut on the disk boundary")
    loop = loop[start:] + loop[:start]

    corner_pos = [
        i for i, dp in enumerate(loop) if base_vertex[dp] == p_O or base_vertex[dp] in leaves
    ]
    if len(corner_pos) != 6 or corner_pos[0] != 0:
        raise CutSystemError("disk boundary does not split into 6 sides")
    corner_pos.append(len(loop))
    sides = []
    for a, b in zip(corner_pos[:-1], corner_pos[1:]):
        seg = loop[a : b + 1] if b < len(loop) else loop[a:] + [loop[0]]
        sides.append(seg)

    # effective cut order: the walk visits path 0 out/back, then one of the
    # remaining paths out/back, then the last (relabeling swaps sigma, sigma^2)
    leaf_of = {cut.paths[j][-1]: j for j in range(3)}
    walk_cuts = [leaf_of[int(base_vertex[sides[s][-1]])] for s in (0, 2, 4)]
    if walk_cuts[0] != 0 or sorted(walk_cuts) != [0, 1, 2]:
        raise CutSystemError("boundary walk does not alternate the three cuts")
    cut_order = tuple(walk_cuts)
    sigma_eff = cut.sigma if cut_order[1] == 1 else cut.sigma[cut.sigma]

    for s in range(6):
        expect = cut.paths[cut_order[s // 2]]
        got = [int(base_vertex[dp]) for dp in sides[s]]
        if s % 2 == 1:
            got = got[::-1]
        if got != list(expect):
            raise CutSystemError(f"boundary side {s} does not follow its cut path")

    s_face = sigma_face(sphere, sigma_eff)
    sigma_disk = np.full(disk.n_vertices, -1, dtype=np.int64)
    for h in range(sphere.n_halfedges):
        f, c = divmod(h, 3)
        v = sphere.tail(h)
        fi = int(s_face[f])
        ci = int(np.flatnonzero(sphere.faces[fi] == sigma_eff[v])[0])
        img = corner_group[3 * fi + ci]
        d = corner_group[h]
        if sigma_disk[d] == -1:
            sigma_disk[d] = img
        elif sigma_disk[d] != img:
            raise CutSystemError("rotation does not respect the cut corner groups")
    return CutDisk(
        mesh=disk,
        base_vertex=base_vertex,
        sides=sides,
        cut_order=cut_order,
        sigma_disk=sigma_disk,
        sigma_disk_face=s_face,
        p_O_dups=tuple(sides[s][0] for s in (0, 2, 4)),
        leaf_dups=tuple(sides[s][-1] for s in (0, 2, 4)),
    )


def build_torus_63(cut: SphereCutSystem) -> GluedTorus:
    """63 copies of the cut-open sphere over the hexagons of Z^2 / (3*Lambda7);
    a degree-63 covering of the sphere branched to order 3 over each leaf."""
    cd = cut_sphere(cut)
    disk = cd.mesh
    k = 63
    reps = [(a0, b0) for a0 in range(3) for b0 in range(21)]
    r_of = [_r63(a, b) for a, b in reps]

    vertex_pairs, edge_pairs = [], []
    by_tail = _boundary_he_by_tail(disk)

    def side_halfedges(side):
        return [by_tail[side[i]] for i in range(len(side) - 1)]

    for ci, (a, b) in enumerate(reps):
        r = r_of[ci]
        for m in range(6):
            p = (m - r) % 6
            if p % 2 != 0:
                continue  # initiate from the k1 side only
            da, db = _HEX_DIRS[m]
            cj = _hex63_index(a + da, b + db)
            if cj == ci:
                raise MeshInvalidError("hexagon glued to itself; bad lattice")
            r2 = _r63(a + da, b + db)
            p2 = ((m + 3) % 6 - r2) % 6
            if p2 != p + 1:
                raise MeshInvalidError("side-label offsets do not pair 1-2 sides")
            side_a, side_b = cd.sides[p], cd.sides[p2]
            rev_b = side_b[::-1]
            hes_a = side_halfedges(side_a)
            hes_b = side_halfedges(side_b)[::-1]
            for va, vb in zip(side_a, rev_b):
                vertex_pairs.append(((ci, va), (cj, vb)))
            for ha, hb in zip(hes_a, hes_b):
                edge_pairs.append(((ci, ha), (cj, hb)))

    mirrored = [False] * k
    mesh, vmap, fmap = _glue(disk, mirrored, vertex_pairs, edge_pairs)

    ideal = []
    for ci, (a, b) in enumerate(reps):
        r = r_of[ci]
        center = (Fraction(a), Fraction(b))
        parts = []
        for p in range(6):
            m = (r + p) % 6
            ca, cb = _HEX_CORNERS[m], _HEX_CORNERS[(m + 1) % 6]
            qa = _m63_inv(center[0] + ca[0], center[1] + ca[1])
            qb = _m63_inv(center[0] + cb[0], center[1] + cb[1])
            parts.append(_seg_ideals(cd.sides[p], qa, qb))
        ideal.append(_merge_ideals(*parts))

    leaves = {int(cut.paths[cd.cut_order[i]][-1]) for i in range(3)}
    branch_spec = {
        "p_O": {"vertex": int(cut.p_O), "preimages": 63, "local_degree": 1},
        "leaves": {
            "vertices": sorted(leaves),
            "preimages": 21,
            "local_degree": 3,
        },
        "riemann_hurwitz_sum": 126,
    }
    return GluedTorus(
        mesh=mesh,
        kind="sphere63",
        copy_count=k,
        pattern=disk,
        vertex_map=vmap,
        face_map=fmap,
        mirrored=np.array(mirrored),
        lattice=Lattice.rhombic(),
        ideal=ideal,
        tile_class=np.array([r // 2 for r in r_of]),
        group_id=np.arange(k),
        pin_vertex=int(vmap[0, cd.p_O_dups[0]]),
        sym={
            "sigma_disk": cd.sigma_disk,
            "sigma_disk_face": cd.sigma_disk_face,
            "p_O_dups": cd.p_O_dups,
            "leaf_dups": cd.leaf_dups,
            "cut_order": cd.cut_order,
            "hex_reps": reps,
            "r": r_of,
        },
        base=cut.mesh,
        base_vertex=cd.base_vertex,
        branch_spec=branch_spec,
    )


# ---------------------------------------------------------------------------
# symmetric cut search and covering validation


def make_symmetric_cuts(
    mesh: SurfaceMesh, p_O: int, sigma, seed_target: int, max_retries: int = 20
) -> SphereCutSystem:
    """Shortest cut path p_O -> seed_target whose sigma-orbit is disjoint;
    conflicting edges are penalized and the search retried."""
    sigma = np.asarray(sigma, dtype=np.int64)
    if seed_target == p_O or sigma[seed_target] == seed_target:
        raise CutSystemError("seed_target must not be fixed by the rotation")
    n = mesh.n_vertices
    rows, cols, lens = [], [], []
    for h in mesh.edges():
        u, v = mesh.tail(h), mesh.head(h)
        rows.append(u)
        cols.append(v)
        lens.append(float(np.linalg.norm(mesh.vertices[u] - mesh.vertices[v])))
    lens = np.asarray(lens)
    penal = np.ones_like(lens)
    edge_index = {}
    for i, (u, v) in enumerate(zip(rows, cols)):
        edge_index[(u, v)] = i
        edge_index[(v, u)] = i

    for _ in range(max_retries):
        w = lens * penal
        graph = csr_matrix(
            (np.concatenate([w, w]), (rows + cols, cols + rows)), shape=(n, n)
        )
        dist, pred = dijkstra(
            graph, directed=False, indices=p_O, return_predecessors=True
        )
        if not np.isfinite(dist[seed_target]):
            raise CutSystemError("no path from p_O to seed_target")
        path = [seed_target]
        while path[-1] != p_O:
            path.append(int(pred[path[-1]]))
        g0 = tuple(reversed(path))
        g1 = tuple(int(sigma[v]) for v in g0)
        g2 = tuple(int(sigma[v]) for v in g1)
        sets = [set(g0[1:]), set(g1[1:]), set(g2[1:])]
        conflicts = (sets[0] & sets[1]) | (sets[0] & sets[2]) | (sets[1] & sets[2])
        if p_O in sets[0]:
            conflicts.add(p_O)
        if not conflicts:
            return SphereCutSystem(mesh=mesh, p_O=p_O, paths=(g0, g1, g2), sigma=sigma)
        for v in conflicts:
            for g in (g0, g1, g2):
                for a, b in zip(g[:-1], g[1:]):
                    if v in (a, b):
                        penal[edge_index[(a, b)]] *= 8.0
    raise CutSystemError(
        f"no disjoint symmetric cut triple found after {max_retries} retries; "
        f"last conflicts at {sorted(conflicts)}"
    )


def detect_rotation(mesh: SurfaceMesh, p_O: int, rel_tol: float = 1e-6) -> np.ndarray:
    """Find an order-3 simplicial automorphism fixing p_O that is a geometric
    isometry, by propagating a seed edge map across faces."""
    he_of = {}
    for h in range(mesh.n_halfedges):
        he_of[(mesh.tail(h), mesh.head(h))] = h
    out0 = [h for h in range(mesh.n_halfedges) if mesh.tail(h) == p_O]
    if not out0:
        raise CutSystemError("p_O has no incident faces")
    h0 = min(out0)

    def propagate(h1):
        vmap = {}
        hmap = {}
        stack = [(h0, h1)]
        while stack:
            a, b = stack.pop()
            if a in hmap:
                if hmap[a] != b:
                    return None
                continue
            hmap[a] = b
            for va, vb in ((mesh.tail(a), mesh.tail(b)), (mesh.head(a), mesh.head(b))):
                if vmap.setdefault(va, vb) != vb:
                    return None
            stack.append((he_next(a), he_next(b)))
            ta, tb = int(mesh.twin[a]), int(mesh.twin[b])
            if (ta == NO_TWIN) != (tb == NO_TWIN):
                return None
            if ta != NO_TWIN:
                stack.append((ta, tb))
        if len(vmap) != mesh.n_vertices:
            return None
        return np.array([vmap[v] for v in range(mesh.n_vertices)], dtype=np.int64)

    diam = float(np.ptp(mesh.vertices, axis=0).max())
    for h1 in sorted(out0):
        if h1 == h0:
            continue
        sigma = propagate(h1)
        if sigma is None:
            continue
        n = np.arange(mesh.n_vertices)
        if np.array_equal(sigma, n) or not np.array_equal(sigma[sigma[sigma]], n):
            continue
        ok = True
        for h in mesh.edges():
            u, v = mesh.tail(h), mesh.head(h)
            l0 = np.linalg.norm(mesh.vertices[u] - mesh.vertices[v])
            l1 = np.linalg.norm(mesh.vertices[sigma[u]] - mesh.vertices[sigma[v]])
            if abs(l0 - l1) > rel_tol * max(l0, 1e-12 * diam):
                ok = False
                break
        if ok:
            return sigma
    raise CutSystemError("no order-3 rotation found fixing the given vertex")


def validate_covering(t: GluedTorus, base: SurfaceMesh) -> dict:
    """Structural report: chi, manifoldness, glued-edge geometry, and (for the
    sphere construction) the full branch table with Riemann-Hurwitz accounting."""
    report: dict = {"kind": t.kind, "copies": t.copy_count}
    chi = t.mesh.euler_characteristic
    report["euler_characteristic"] = chi
    ok = chi == 0
    try:
        t.mesh._check_vertex_links()
        report["manifold"] = True
    except MeshInvalidError as exc:
        report["manifold"] = False
        report["manifold_error"] = str(exc)
        ok = False
    report["face_count_ok"] = t.mesh.n_faces == t.copy_count * t.pattern.n_faces
    ok = ok and report["face_count_ok"]

    # glued edges must identify segments of equal 3D length
    max_len_dev = 0.0
    pv = t.pattern.vertices
    for c in range(t.copy_count):
        for h in range(t.pattern.n_halfedges):
            th = t.torus_halfedge(c, h)
            tt = int(t.mesh.twin[th])
            c2, u2, v2 = t.halfedge_pattern(tt)
            l1 = np.linalg.norm(pv[t.pattern.tail(h)] - pv[t.pattern.head(h)])
            l2 = np.linalg.norm(pv[u2] - pv[v2])
            max_len_dev = max(max_len_dev, abs(l1 - l2))
    report["max_glued_length_deviation"] = float(max_len_dev)
    ok = ok and max_len_dev < 1e-12 * (1.0 + float(np.abs(pv).max()))

    deg_t = t.mesh.vertex_degrees()
    if t.kind == "sphere63":
        deg_b = base.vertex_degrees()
        per_base: dict[int, list[int]] = {}
        bad = []
        for tv in range(t.mesh.n_vertices):
            bv = None
            for c in range(t.copy_count):
                hits = np.flatnonzero(t.vertex_map[c] == tv)
                if len(hits):
                    bv = int(t.base_vertex[hits[0]])
                    break
            e, rem = divmod(int(deg_t[tv]), int(deg_b[bv]))
            if rem:
                bad.append(tv)
                e = 0
            per_base.setdefault(bv, []).append(e)
        table = {}
        rh = 0
        for bv, degs in sorted(per_base.items()):
            table[bv] = {
                "preimages": len(degs),
                "local_degrees": sorted(set(degs)),
            }
            rh += sum(e - 1 for e in degs)
        report["branch_table"] = table
        report["riemann_hurwitz_sum"] = rh
        report["non_integral_degrees"] = bad
        spec = t.branch_spec
        p_O = spec["p_O"]["vertex"]
        ok_p = table[p_O] == {"preimages": 63, "local_degrees": [1]}
        ok_l = all(
            table[lv] == {"preimages": 21, "local_degrees": [3]}
            for lv in spec["leaves"]["vertices"]
        )
        ok_rest = all(
            table[bv] == {"preimages": 63, "local_degrees": [1]}
            for bv in table
            if bv != p_O and bv not in spec["leaves"]["vertices"]
        )
        report["branch_table_ok"] = ok_p and ok_l and ok_rest and not bad
        report["riemann_hurwitz_ok"] = rh == 126
        ok = ok and report["branch_table_ok"] and report["riemann_hurwitz_ok"]
    else:
        # disk constructions: report the cone structure at the marked classes
        marks = t.sym.get("marks", ())
        cones = {}
        for m in marks:
            classes = sorted({int(t.vertex_map[c, m]) for c in range(t.copy_count)})
            cones[int(m)] = {
                str(tv): {
                    "copies_meeting": int(
                        sum(t.vertex_map[c, m] == tv for c in range(t.copy_count))
                    ),
                    "corner_count": int(deg_t[tv]),
                }
                for tv in classes
            }
        report["marked_cones"] = cones
    report["passed"] = bool(ok)
    return report
