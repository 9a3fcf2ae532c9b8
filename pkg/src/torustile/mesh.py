"""Indexed triangle meshes with halfedge connectivity, validation, and OBJ I/O.

Halfedge numbering: face f owns halfedges 3f, 3f+1, 3f+2; halfedge h = 3f+c
runs from faces[f, c] to faces[f, (c+1) % 3]. next/prev are corner arithmetic,
twins are stored explicitly so that quotient complexes with multi-edges (two
vertices joined by several distinct edges) are representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshInvalidError, ObjFormatError, TopologyError

NO_TWIN = -1


def he_next(h: int) -> int:
    return h - h % 3 + (h + 1) % 3


def he_prev(h: int) -> int:
    return h - h % 3 + (h + 2) % 3


class SurfaceMesh:
    """Immutable oriented triangle mesh (manifold, possibly with boundary)."""

    def __init__(self, vertices, faces, twin=None, _validate=True):
        self.vertices = np.ascontiguousarray(np.asarray(vertices, dtype=float))
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshInvalidError("vertices must be an (n, 3) array")
        self.faces = np.ascontiguousarray(np.asarray(faces, dtype=np.int64))
        if self.faces.size and (self.faces.ndim != 2 or self.faces.shape[1] != 3):
            raise MeshInvalidError("faces must be an (m, 3) array")
        if self.faces.size == 0:
            self.faces = self.faces.reshape(0, 3)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise MeshInvalidError("face references a vertex that does not exist")
        for f, tri in enumerate(self.faces):
            if len(set(tri)) != 3:
                raise MeshInvalidError(
                    f"degenerate face {f}: repeated vertex indices {tuple(tri)}"
                )
        self.twin = (
            self._build_twins() if twin is None else np.asarray(twin, dtype=np.int64)
        )
        if len(self.twin) != 3 * len(self.faces):
            raise MeshInvalidError("twin array must have one entry per halfedge")
        if _validate:
            self._check_twins()
            self._check_vertex_links()
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        self.twin.setflags(write=False)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_halfedges(cls, vertices, faces, twin) -> "SurfaceMesh":
        """Build from an explicit twin array (needed for glued multi-edge quotients)."""
        return cls(vertices, faces, twin=twin)

    def _build_twins(self) -> np.ndarray:
        directed = {}
        n_he = 3 * len(self.faces)
        for h in range(n_he):
            key = (self.tail(h), self.head(h))
            if key in directed:
                raise MeshInvalidError(
                    f"directed edge {key} appears twice: non-manifold or "
                    "inconsistently oriented faces"
                )
            directed[key] = h
        twin = np.full(n_he, NO_TWIN, dtype=np.int64)
        for (u, v), h in directed.items():
            twin[h] = directed.get((v, u), NO_TWIN)
        return twin

    def _check_twins(self):
        for h in range(self.n_halfedges):
            t = self.twin[h]
            if t == NO_TWIN:
                continue
            if t < 0 or t >= self.n_halfedges or self.twin[t] != h:
                raise MeshInvalidError(f"twin array is not an involution at {h}")
            if self.tail(h) != self.head(t) or self.head(h) != self.tail(t):
                raise MeshInvalidError(f"twin of halfedge {h} reverses wrong endpoints")

    def _check_vertex_links(self):
        """Every vertex link must be a single fan (disk or half-disk)."""
        outgoing = [[] for _ in range(self.n_vertices)]
        for h in range(self.n_halfedges):
            outgoing[self.tail(h)].append(h)
        for v, out in enumerate(outgoing):
            if not out:
                continue
            ends = [h for h in out if self.twin[he_prev(h)] == NO_TWIN]
            if len(ends) > 1:
                raise MeshInvalidError(
                    f"vertex {v} link is not a single fan (non-manifold)"
                )
            start = ends[0] if ends else out[0]
            seen = set()
            h = start
            while True:
                if h in seen:
                    break
                seen.add(h)
                t = self.twin[h]
                if t == NO_TWIN:
                    break
                h = he_next(t)
            if len(seen) != len(out):
                raise MeshInvalidError(
                    f"vertex {v} link is not a single fan (non-manifold)"
                )

    # -- basic queries -----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_halfedges(self) -> int:
        return 3 * len(self.faces)

    @property
    def n_edges(self) -> int:
        boundary = int(np.count_nonzero(self.twin == NO_TWIN))
        return (self.n_halfedges + boundary) // 2

    def tail(self, h: int) -> int:
        return int(self.faces[h // 3, h % 3])

    def head(self, h: int) -> int:
        return int(self.faces[h // 3, (h + 1) % 3])

    def edge_id(self, h: int) -> int:
        """Canonical undirected edge representative (min of halfedge pair)."""
        t = self.twin[h]
        return h if t == NO_TWIN else min(h, int(t))

    def edges(self):
        """Iterate canonical halfedges, one per undirected edge."""
        for h in range(self.n_halfedges):
            t = self.twin[h]
            if t == NO_TWIN or h < t:
                yield h

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def boundary_halfedges(self) -> np.ndarray:
        return np.flatnonzero(self.twin == NO_TWIN)

    def boundary_loops(self) -> list[list[int]]:
        """Vertex loops of each boundary component, surface to the left."""
        bdry = {self.tail(h): int(h) for h in self.boundary_halfedges()}
        loops, visited = [], set()
        for v0 in sorted(bdry):
            if v0 in visited:
                continue
            loop, v = [], v0
            while v not in visited:
                visited.add(v)
                loop.append(v)
                v = self.head(bdry[v])
            loops.append(loop)
        return loops

    def zero_area_faces(self, rel_tol: float = 1e-14) -> list[int]:
        p = self.vertices
        out = []
        for f, (a, b, c) in enumerate(self.faces):
            u, w = p[b] - p[a], p[c] - p[a]
            cr = np.linalg.norm(np.cross(u, w))
            if cr < rel_tol * max(np.linalg.norm(u) * np.linalg.norm(w), 1e-300):
                out.append(f)
        return out

    def vertex_degrees(self) -> np.ndarray:
        """Number of incident undirected edges per vertex."""
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for h in self.edges():
            deg[self.tail(h)] += 1
            deg[self.head(h)] += 1
        return deg

    def is_connected(self) -> bool:
        if self.n_faces == 0:
            return self.n_vertices <= 1
        seen = {0}
        stack = [0]
        while stack:
            f = stack.pop()
            for c in range(3):
                t = self.twin[3 * f + c]
                if t != NO_TWIN and t // 3 not in seen:
                    seen.add(t // 3)
                    stack.append(t // 3)
        return len(seen) == self.n_faces


@dataclass(frozen=True)
class BoundaryLoop:
    """Cyclic boundary vertex list, oriented so the surface lies to the left."""

    vertices: tuple[int, ...]

    def __len__(self):
        return len(self.vertices)

    def index(self, v: int) -> int:
        return self.vertices.index(v)


def classify(mesh: SurfaceMesh) -> dict:
    """Topology report: Euler characteristic, boundary loops, genus when closed."""
    chi = mesh.euler_characteristic
    loops = mesh.boundary_loops()
    closed = len(loops) == 0
    return {
        "euler_characteristic": chi,
        "boundary_loop_count": len(loops),
        "genus_if_closed": (2 - chi) // 2 if closed else None,
    }


def boundary_loop(mesh: SurfaceMesh) -> BoundaryLoop:
    rep = classify(mesh)
    if rep["euler_characteristic"] != 1 or rep["boundary_loop_count"] != 1:
        raise TopologyError(
            "mesh is not a disk (chi="
            f"{rep['euler_characteristic']}, loops={rep['boundary_loop_count']})"
        )
    return BoundaryLoop(tuple(mesh.boundary_loops()[0]))


# -- OBJ I/O ---------------------------------------------------------------


def _parse_obj(path):
    vertices, uvs, faces, uv_faces = [], [], [], []
    with open(path, "r", encoding="ascii", errors="strict") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ObjFormatError("vertex record needs 3 coordinates", lineno)
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise ObjFormatError("bad vertex coordinate", lineno) from None
            elif tag == "vt":
                if len(parts) < 3:
                    raise ObjFormatError("vt record needs 2 coordinates", lineno)
                try:
                    uvs.append([float(x) for x in parts[1:3]])
                except ValueError:
                    raise ObjFormatError("bad vt coordinate", lineno) from None
            elif tag == "f":
                if len(parts) != 4:
                    raise ObjFormatError(
                        f"face with {len(parts) - 1} corners: only triangles accepted",
                        lineno,
                    )
                vi, ti = [], []
                for corner in parts[1:]:
                    fields = corner.split("/")
                    try:
                        vi.append(int(fields[0]))
                        if len(fields) > 1 and fields[1]:
                            ti.append(int(fields[1]))
                    except ValueError:
                        raise ObjFormatError("bad face index", lineno) from None
                if len(set(vi)) != 3:
                    raise ObjFormatError(
                        f"degenerate face {tuple(vi)}: repeated vertex index", lineno
                    )
                faces.append((vi, lineno))
                uv_faces.append(ti if len(ti) == 3 else None)
            # other records (vn, o, g, s, usemtl, ...) are ignored
    n = len(vertices)
    resolved = []
    for vi, lineno in faces:
        tri = []
        for idx in vi:
            j = idx - 1 if idx > 0 else n + idx
            if not 0 <= j < n:
                raise ObjFormatError(f"vertex index {idx} out of range", lineno)
            tri.append(j)
        resolved.append(tri)
    return vertices, uvs, resolved, uv_faces


def load_obj(path) -> SurfaceMesh:
    """Load an ASCII OBJ file (v / f subset; vt and vn are ignored)."""
    vertices, _, faces, _ = _parse_obj(path)
    if not vertices:
        raise ObjFormatError("no vertices in file")
    return SurfaceMesh(vertices, faces)


def load_obj_with_uv(path):
    """Load an OBJ along with its per-vertex vt coordinates (or None)."""
    vertices, uvs, faces, uv_faces = _parse_obj(path)
    if not vertices:
        raise ObjFormatError("no vertices in file")
    mesh = SurfaceMesh(vertices, faces)
    if not uvs or any(t is None for t in uv_faces):
        return mesh, None
    uv = np.full((len(vertices), 2), np.nan)
    for tri, tuv in zip(faces, uv_faces):
        for v, ti in zip(tri, tuv):
            uv[v] = uvs[ti - 1 if ti > 0 else len(uvs) + ti]
    if np.isnan(uv).any():
        return mesh, None
    return mesh, uv


def _fmt(x: float) -> str:
    # repr() is the shortest round-tripping decimal form
    return repr(float(x))


def save_obj_with_uv(mesh: SurfaceMesh, uv, path) -> None:
    """Write v/vt/f records; f corners are written as i/i so uv is per-vertex."""
    uv = np.asarray(uv, dtype=float)
    if uv.shape != (mesh.n_vertices, 2):
        raise ValueError(
            f"uv must be ({mesh.n_vertices}, 2), got {uv.shape}"
        )
    lines = []
    for p in mesh.vertices:
        lines.append(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    for q in uv:
        lines.append(f"vt {_fmt(q[0])} {_fmt(q[1])}")
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1}/{a + 1} {b + 1}/{b + 1} {c + 1}/{c + 1}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def save_obj(mesh: SurfaceMesh, path) -> None:
    lines = []
    for p in mesh.vertices:
        lines.append(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
