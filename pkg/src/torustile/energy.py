"""Edge weights and simplicial Dirichlet / conformal energies.

Weight convention: an edge weight is cot(alpha) + cot(beta) over the one or two
angles opposite the edge, with no 1/2 factor. Energies then carry a compensating
1/4 so that the identity map of a planar mesh reports the true mesh area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MeshInvalidError
from .mesh import NO_TWIN, SurfaceMesh

DEGENERATE_CROSS_TOL = 1e-14


@dataclass(frozen=True)
class EdgeWeights:
    """Per-undirected-edge weights stored on halfedges (symmetric under twin).

    cot_opp[h] is the cotangent of the angle opposite halfedge h inside its own
    face (the per-face share of the weight); halfedge[h] is the full edge weight,
    identical on h and twin(h).
    """

    scheme: str  # "cotangent" | "uniform"
    halfedge: np.ndarray
    cot_opp: np.ndarray
    sentinel_faces: tuple[int, ...] = ()

    def edge_values(self, mesh: SurfaceMesh) -> np.ndarray:
        return np.array([self.halfedge[h] for h in mesh.edges()])

    @property
    def has_sentinel(self) -> bool:
        return len(self.sentinel_faces) > 0

    def share(self, h: int, mesh: SurfaceMesh) -> float:
        """Per-face share of edge weight at halfedge h (sums to the edge weight)."""
        if self.scheme == "cotangent":
            return float(self.cot_opp[h])
        return 1.0 if mesh.twin[h] == NO_TWIN else 0.5


def _cotangents(mesh: SurfaceMesh):
    """cot of the angle opposite each halfedge; +inf sentinel on degenerate faces."""
    p = mesh.vertices
    cot = np.empty(mesh.n_halfedges)
    bad = []
    for f, (va, vb, vc) in enumerate(mesh.faces):
        tri = (p[va], p[vb], p[vc])
        for c in range(3):
            apex = tri[(c + 2) % 3]
            a = tri[c] - apex
            b = tri[(c + 1) % 3] - apex
            cross = np.linalg.norm(np.cross(a, b))
            scale = np.linalg.norm(a) * np.linalg.norm(b)
            if cross < DEGENERATE_CROSS_TOL * scale or scale == 0.0:
                cot[3 * f + c] = math.inf
                if f not in bad:
                    bad.append(f)
            else:
                cot[3 * f + c] = float(np.dot(a, b)) / cross
    return cot, tuple(bad)


def cotan_weights(mesh: SurfaceMesh) -> EdgeWeights:
    """Cotangent edge weights from the 3D embedding.

    Interior edges get cot(alpha) + cot(beta); boundary edges the single
    cotangent. Degenerate faces produce a +inf sentinel instead of aborting.
    """
    cot, bad = _cotangents(mesh)
    w = cot.copy()
    for h in range(mesh.n_halfedges):
        t = mesh.twin[h]
        if t != NO_TWIN:
            w[h] = cot[h] + cot[t]
    return EdgeWeights("cotangent", w, cot, sentinel_faces=bad)


def uniform_weights(mesh: SurfaceMesh) -> EdgeWeights:
    """Unit weight per undirected edge (the equal-weights scheme)."""
    w = np.ones(mesh.n_halfedges)
    shares = np.where(mesh.twin == NO_TWIN, 1.0, 0.5)
    return EdgeWeights("uniform", w, shares)


def make_weights(mesh: SurfaceMesh, scheme: str) -> EdgeWeights:
    if scheme in ("cotangent", "cotan"):
        return cotan_weights(mesh)
    if scheme == "uniform":
        return uniform_weights(mesh)
    raise ConfigError(f"unknown weight scheme {scheme!r}")


def weight_positivity_report(w: EdgeWeights, mesh: SurfaceMesh) -> dict:
    vals = w.edge_values(mesh)
    finite = vals[np.isfinite(vals)]
    return {
        "negative_edge_count": int(np.count_nonzero(finite < 0.0)),
        "min_weight": float(finite.min()) if len(finite) else math.nan,
        "sentinel_face_count": len(w.sentinel_faces),
    }


def _require_finite(w: EdgeWeights):
    if w.has_sentinel or not np.all(np.isfinite(w.halfedge)):
        raise MeshInvalidError(
            f"weights carry degenerate-face sentinels (faces {list(w.sentinel_faces)});"
            " reject the mesh or fall back to uniform weights"
        )


def dirichlet_energy(mesh: SurfaceMesh, w: EdgeWeights, uv) -> float:
    """E = 1/4 * sum over edges of w * |uv_i - uv_j|^2."""
    _require_finite(w)
    uv = np.asarray(uv, dtype=float)
    total = 0.0
    for h in mesh.edges():
        d = uv[mesh.head(h)] - uv[mesh.tail(h)]
        total += w.halfedge[h] * float(d @ d)
    return 0.25 * total


def signed_area(mesh: SurfaceMesh, uv) -> float:
    uv = np.asarray(uv, dtype=float)
    a = uv[mesh.faces[:, 0]]
    b = uv[mesh.faces[:, 1]]
    c = uv[mesh.faces[:, 2]]
    e1, e2 = b - a, c - a
    return float(0.5 * np.sum(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]))


def conformal_energy(mesh: SurfaceMesh, w: EdgeWeights, uv) -> float:
    """Dirichlet energy minus signed image area; zero iff per-face similarity."""
    return dirichlet_energy(mesh, w, uv) - signed_area(mesh, uv)


def face_corner_energy(mesh: SurfaceMesh, w: EdgeWeights, face_uv: np.ndarray) -> np.ndarray:
    """Per-face Dirichlet energies from per-face corner lifts (F, 3, 2).

    Uses the per-face weight share so the sum over faces equals the edge form.
    """
    _require_finite(w)
    out = np.zeros(mesh.n_faces)
    for f in range(mesh.n_faces):
        acc = 0.0
        for c in range(3):
            h = 3 * f + c
            d = face_uv[f, (c + 1) % 3] - face_uv[f, c]
            acc += w.share(h, mesh) * float(d @ d)
        out[f] = 0.25 * acc
    return out
