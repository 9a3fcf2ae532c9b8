"""Deterministic example meshes: canonical disks, a kite with obtuse apexes
(negative cotangent weight on its diagonal), a random Delaunay disk, and
3-fold-symmetric spheres built by subdividing a regular tetrahedron.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from .mesh import SurfaceMesh, boundary_loop, save_obj


def single_triangle() -> SurfaceMesh:
    """Right isosceles triangle with unit legs."""
    v = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return SurfaceMesh(v, np.array([[0, 1, 2]]))


def equilateral_triangle() -> SurfaceMesh:
    v = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, math.sqrt(3.0) / 2.0, 0.0]]
    )
    return SurfaceMesh(v, np.array([[0, 1, 2]]))


def quad() -> SurfaceMesh:
    """Unit square split along one diagonal."""
    v = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
    )
    return SurfaceMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))


def fan_disk(n: int = 6, radius: float = 1.0) -> SurfaceMesh:
    """Regular n-gon triangulated as a fan around its center (vertex 0)."""
    if n < 3:
        raise ValueError("fan needs at least 3 boundary vertices")
    verts = [np.zeros(3)]
    for i in range(n):
        a = 2.0 * math.pi * i / n
        verts.append(np.array([radius * math.cos(a), radius * math.sin(a), 0.0]))
    faces = [[0, 1 + i, 1 + (i + 1) % n] for i in range(n)]
    return SurfaceMesh(np.array(verts), np.array(faces))


def kite_obtuse(apex_deg: float = 100.0) -> SurfaceMesh:
    """Rhombus of two triangles whose shared diagonal sees two apex_deg angles;
    past 90 degrees its cotangent weight goes negative."""
    h = 0.5 / math.tan(math.radians(apex_deg / 2.0))
    v = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, h, 0.0],
            [0.5, -h, 0.0],
        ]
    )
    return SurfaceMesh(v, np.array([[0, 1, 2], [0, 3, 1]]))


def delaunay_disk(n: int = 50, seed: int = 48, rim: int = 20) -> SurfaceMesh:
    """Delaunay triangulation of deterministic random points in the unit disk.

    A jittered rim ring keeps hull chords short and interior points stay at
    radius <= 0.8, so no vertex is obtuse-opposite a boundary edge and every
    cotangent weight comes out positive (interior ones by Delaunay-ness).
    """
    if n <= rim:
        raise ValueError(f"need more than {rim} points")
    rng = np.random.default_rng(seed)
    ang = (np.arange(rim) + rng.uniform(0.25, 0.75, rim)) * (2.0 * math.pi / rim)
    ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ni = n - rim
    r = 0.8 * np.sqrt(rng.uniform(0.0, 1.0, ni))
    a = rng.uniform(0.0, 2.0 * math.pi, ni)
    pts = np.concatenate(
        [ring, np.stack([r * np.cos(a), r * np.sin(a)], axis=1)]
    )
    tri = Delaunay(pts)
    faces = tri.simplices.copy()
    for f in faces:
        p, q, s = pts[f]
        if (q[0] - p[0]) * (s[1] - p[1]) - (q[1] - p[1]) * (s[0] - p[0]) < 0.0:
            f[1], f[2] = f[2], f[1]
    verts = np.concatenate([pts, np.zeros((n, 1))], axis=1)
    return SurfaceMesh(verts, faces)


def spread_marks(mesh: SurfaceMesh, k: int) -> tuple[int, ...]:
    """k boundary vertices, roughly equally spaced along the loop."""
    loop = boundary_loop(mesh).vertices
    idx = [round(i * len(loop) / k) % len(loop) for i in range(k)]
    if len(set(idx)) != k:
        raise ValueError("boundary loop too short for the requested marks")
    return tuple(loop[i] for i in idx)


# ---------------------------------------------------------------------------
# symmetric spheres


def _rot120z() -> np.ndarray:
    c, s = math.cos(2.0 * math.pi / 3.0), math.sin(2.0 * math.pi / 3.0)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def tetrahedron() -> tuple[SurfaceMesh, np.ndarray, int]:
    """Regular tetrahedron with apex on the z-axis; returns (mesh, sigma, p_O)
    where sigma is the 120-degree rotation permutation [0, 2, 3, 1]."""
    r = 2.0 * math.sqrt(2.0) / 3.0
    verts = [np.array([0.0, 0.0, 1.0])]
    for i in range(3):
        a = 2.0 * math.pi * i / 3.0
        verts.append(np.array([r * math.cos(a), r * math.sin(a), -1.0 / 3.0]))
    faces = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [3, 2, 1]])
    mesh = SurfaceMesh(np.array(verts), faces)
    return mesh, np.array([0, 2, 3, 1], dtype=np.int64), 0


def sym_sphere(subdiv: int = 2) -> tuple[SurfaceMesh, np.ndarray, int]:
    """Subdivided tetrahedron projected to the unit sphere, with a tracked
    order-3 vertex rotation. Positions are re-symmetrized so sigma-related
    vertices are exact 120-degree rotations of their orbit representative."""
    mesh, sigma, p_o = tetrahedron()
    verts = [v.copy() for v in mesh.vertices]
    faces = [tuple(f) for f in mesh.faces]
    sigma = sigma.tolist()

    for _ in range(subdiv):
        mid: dict[frozenset, int] = {}

        def midpoint(u, v):
            key = frozenset((u, v))
            if key not in mid:
                p = verts[u] + verts[v]
                verts.append(p / np.linalg.norm(p))
                mid[key] = len(verts) - 1
            return mid[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
        sigma = sigma + [0] * len(mid)
        for key, m in mid.items():
            u, v = tuple(key)
            sigma[m] = mid[frozenset((sigma[u], sigma[v]))]

    sig = np.array(sigma, dtype=np.int64)
    rot = _rot120z()
    pos = np.array(verts)
    done = np.zeros(len(pos), dtype=bool)
    for v in range(len(pos)):
        if done[v] or sig[v] == v:
            done[v] = True
            continue
        orbit = [v, int(sig[v]), int(sig[sig[v]])]
        rep = min(orbit)
        pos[sig[rep]] = rot @ pos[rep]
        pos[sig[sig[rep]]] = rot @ pos[sig[rep]]
        done[orbit] = True
    return SurfaceMesh(pos, np.array(faces, dtype=np.int64)), sig, p_o


def write_all(directory) -> list[Path]:
    """Write the OBJ fixture set used by the command-line examples."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = {
        "triangle.obj": single_triangle(),
        "equilateral.obj": equilateral_triangle(),
        "quad.obj": quad(),
        "kite.obj": kite_obtuse(),
        "delaunay50.obj": delaunay_disk(),
        "tetrahedron.obj": tetrahedron()[0],
        "symsphere2.obj": sym_sphere()[0],
    }
    out = []
    for name, mesh in items.items():
        path = directory / name
        save_obj(mesh, path)
        out.append(path)
    return out
