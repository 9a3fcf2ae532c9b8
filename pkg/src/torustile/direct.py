"""Direct constrained harmonic solve of a single disk onto a planar target,
and the cross-check of that route against the glued-torus route.

The boundary is constrained shape-wise, not pointwise: corners are pinned to
the target's corners and every other boundary vertex keeps one degree of
freedom, sliding along its target side. Boundary edge weights carry the same
per-copy share they have on the torus seam (cotangent weights do this on their
own; uniform weights are halved on the boundary), which makes the minimizer
agree with the restriction of the symmetric torus solution to one tile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .analysis import per_copy_energies, procrustes
from .construct import MarkedDisk, build_torus_4, build_torus_8, build_torus_42
from .energy import EdgeWeights, dirichlet_energy, make_weights
from .errors import ConfigError, MarkError, SolveError
from .mesh import NO_TWIN, SurfaceMesh
from .torus_solve import canonical_jumps, develop_copy, solve_torus


@dataclass(frozen=True)
class TargetShape:
    """A convex planar polygon target with one corner per mark."""

    name: str
    corners: np.ndarray
    scale_free: bool = False  # alignment to the torus tile needs a similarity
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "corners", np.asarray(self.corners, dtype=float))

    @classmethod
    def right_isosceles(cls) -> "TargetShape":
        return cls("right_isosceles", [(0.0, 0.0), (0.5, 0.5), (0.0, 0.5)])

    @classmethod
    def equilateral(cls) -> "TargetShape":
        return cls(
            "equilateral",
            [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0)],
            scale_free=True,
        )

    @classmethod
    def rectangle(cls, width: float = 1.0, height: float = 1.0) -> "TargetShape":
        if width <= 0 or height <= 0:
            raise ValueError("rectangle target needs positive side lengths")
        return cls(
            "rectangle",
            [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)],
            width=width,
            height=height,
        )

    @classmethod
    def by_name(cls, name: str, width: float = 1.0, height: float = 1.0):
        if name == "right_isosceles":
            return cls.right_isosceles()
        if name == "equilateral":
            return cls.equilateral()
        if name == "rectangle":
            return cls.rectangle(width, height)
        raise ConfigError(f"unknown target shape {name!r}")

    @property
    def diameter(self) -> float:
        c = self.corners
        return float(
            max(np.linalg.norm(a - b) for a in c for b in c)
        )


def _direct_edge_weights(mesh: SurfaceMesh, scheme: str) -> EdgeWeights:
    """Edge weights for the one-tile problem: the tile's share of each torus
    edge. Interior edges keep the full weight; boundary edges the seam share."""
    w = make_weights(mesh, scheme)
    if w.scheme == "uniform":
        adj = np.where(mesh.twin == NO_TWIN, 0.5, 1.0)
        return EdgeWeights("uniform", adj, w.cot_opp)
    return w  # single-cotangent boundary weights already are the share


@dataclass
class DirectResult:
    uv: np.ndarray
    energy: float
    target: TargetShape
    weights: EdgeWeights
    stats: dict = field(default_factory=dict)


def solve_direct(
    mesh: SurfaceMesh,
    marks,
    target: TargetShape,
    scheme: str = "cotangent",
    rel_tol: float = 1e-10,
) -> DirectResult:
    """Minimize the tile-share Dirichlet energy with corners pinned and other
    boundary vertices sliding along their target side (one tangential dof)."""
    d = MarkedDisk(mesh, tuple(marks))
    m = len(d.marks)
    if m != len(target.corners):
        raise MarkError(
            f"target {target.name!r} has {len(target.corners)} corners, got {m} marks"
        )
    paths = d.paths()
    w = _direct_edge_weights(mesh, scheme)

    n = mesh.n_vertices
    corner_pos = {v: target.corners[j] for j, v in enumerate(d.marks)}
    side_of = {}
    for j, path in enumerate(paths):
        for v in path[1:-1]:
            side_of[v] = j

    # dof layout: interior vertices two columns, side vertices one
    col_of: dict[int, int] = {}
    ndof = 0
    for v in range(n):
        if v in corner_pos:
            continue
        col_of[v] = ndof
        ndof += 1 if v in side_of else 2

    def affine(v):
        """pos(v) = sum over (col, vec) of q[col]*vec, plus const."""
        if v in corner_pos:
            return [], corner_pos[v]
        if v in side_of:
            j = side_of[v]
            a = target.corners[j]
            b = target.corners[(j + 1) % m]
            return [(col_of[v], b - a)], a
        c = col_of[v]
        return [(c, np.array([1.0, 0.0])), (c + 1, np.array([0.0, 1.0]))], np.zeros(2)

    rows, cols, vals = [], [], []
    rhs = np.zeros(ndof)
    for h in mesh.edges():
        i, j = mesh.tail(h), mesh.head(h)
        we = float(w.halfedge[h])
        ai, ci = affine(i)
        aj, cj = affine(j)
        diff_cols = ai + [(col, -vec) for col, vec in aj]
        dconst = ci - cj
        for ca, va in diff_cols:
            for cb, vb in diff_cols:
                rows.append(ca)
                cols.append(cb)
                vals.append(we * float(va @ vb))
            rhs[ca] -= we * float(va @ dconst)
    if ndof == 0:
        # every vertex is a corner; the constraints determine the map
        q = np.zeros(0)
        resid = 0.0
    else:
        k = coo_matrix((vals, (rows, cols)), shape=(ndof, ndof)).tocsc()
        q = spsolve(k, rhs)
        scale = float(np.linalg.norm(rhs)) or 1.0
        resid = float(np.linalg.norm(k @ q - rhs)) / scale
        if resid > rel_tol:
            raise SolveError(
                f"direct solve residual {resid:.3e} exceeds {rel_tol:.1e}"
            )

    uv = np.zeros((n, 2))
    for v in range(n):
        terms, const = affine(v)
        uv[v] = const + sum(q[col] * vec for col, vec in terms)
    energy = dirichlet_energy(mesh, w, uv)
    return DirectResult(
        uv=uv,
        energy=energy,
        target=target,
        weights=w,
        stats={"ndof": ndof, "residual": resid},
    )


def _matching_torus(d: MarkedDisk, target: TargetShape):
    if target.name == "right_isosceles":
        return build_torus_8(d)
    if target.name == "equilateral":
        return build_torus_42(d)
    if target.name == "rectangle":
        return build_torus_4(d, target.width, target.height)
    raise ValueError(f"no torus construction matches target {target.name!r}")


def crosscheck_against_torus(
    mesh: SurfaceMesh,
    marks,
    target: TargetShape,
    scheme: str = "cotangent",
    direct: DirectResult | None = None,
    embedding=None,
) -> dict:
    """Solve both routes and align the direct solution onto the developed first
    tile of the torus solution. Translation and rotation are free; scale only
    for targets whose tile is a scaled copy (the equilateral one). A solved
    torus embedding may be passed in to avoid re-solving."""
    if direct is None:
        direct = solve_direct(mesh, marks, target, scheme=scheme)
    if embedding is None:
        d = MarkedDisk(mesh, tuple(marks))
        t = _matching_torus(d, target)
        w_torus = make_weights(t.mesh, scheme)
        embedding = solve_torus(t, w_torus, canonical_jumps(t))
    else:
        t = embedding.torus
        w_torus = make_weights(t.mesh, scheme)
    emb = embedding
    tile_uv, _ = develop_copy(emb, 0)

    fit = procrustes(direct.uv, tile_uv, allow_scale=target.scale_free)
    tile_energy = float(per_copy_energies(t, w_torus, emb)[0])
    expected_scale = fit["scale"] ** 2
    return {
        "rms": fit["rms"],
        "rel_rms": fit["rms"] / target.diameter,
        "scale": fit["scale"],
        "reflected": fit["reflected"],
        "direct_energy": direct.energy,
        "tile_energy": tile_energy,
        "tile_energy_scaled": tile_energy / expected_scale,
        "torus_stats": emb.stats,
        "direct_stats": direct.stats,
    }
