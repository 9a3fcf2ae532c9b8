"""Harmonic maps from a glued complex to a flat torus R^2 / Lambda.

The map is encoded as one position per vertex plus an integer "jump" per
halfedge saying which lattice translate of the head is adjacent to the tail.
Jumps must be antisymmetric and sum to zero around every face; their sums
around a homology basis fix which torus map (up to translation) is being
computed. Two assignments are provided: an arbitrary tree-cotree one, and the
canonical one induced by the construction's ideal tile placements.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix, diags
from scipy.sparse.linalg import cg, splu

from .construct import GluedTorus
from .energy import EdgeWeights, _require_finite, face_corner_energy
from .errors import SolveError, TopologyError
from .lattice import Lattice
from .mesh import NO_TWIN, SurfaceMesh

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# homology scaffolding


@dataclass(frozen=True)
class TreeCotree:
    parent: np.ndarray  # vertex -> parent vertex (root: -1)
    parent_he: np.ndarray  # vertex -> halfedge parent->vertex (root: -1)
    tree_edges: frozenset[int]  # canonical halfedge ids
    cotree_edges: frozenset[int]
    leftover: tuple[int, int]  # canonical halfedges completing the 2 generators
    generators: tuple[tuple[int, ...], tuple[int, ...]]  # directed halfedge loops


def tree_cotree(mesh: SurfaceMesh) -> TreeCotree:
    """Primal spanning tree, dual spanning cotree, and the two leftover edges
    whose tree cycles generate first homology of the torus."""
    n = mesh.n_vertices
    outgoing = [[] for _ in range(n)]
    for h in range(mesh.n_halfedges):
        outgoing[mesh.tail(h)].append(h)

    parent = np.full(n, -1, dtype=np.int64)
    parent_he = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    tree_edges = set()
    q = deque([0])
    while q:
        u = q.popleft()
        for h in outgoing[u]:
            v = mesh.head(h)
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parent_he[v] = h
                tree_edges.add(mesh.edge_id(h))
                q.append(v)
    if not seen.all():
        raise TopologyError("mesh is not connected")

    nf = mesh.n_faces
    fseen = np.zeros(nf, dtype=bool)
    fseen[0] = True
    cotree_edges = set()
    q = deque([0])
    while q:
        f = q.popleft()
        for c in range(3):
            h = 3 * f + c
            t = int(mesh.twin[h])
            if t == NO_TWIN:
                continue
            eid = mesh.edge_id(h)
            g = t // 3
            if not fseen[g] and eid not in tree_edges:
                fseen[g] = True
                cotree_edges.add(eid)
                q.append(g)
    if not fseen.all():
        raise TopologyError("dual graph is not connected")

    leftover = [
        h
        for h in mesh.edges()
        if mesh.edge_id(h) not in tree_edges and mesh.edge_id(h) not in cotree_edges
    ]
    if len(leftover) != 2:
        raise TopologyError(
            f"expected 2 leftover edges on a torus, found {len(leftover)}"
        )

    def up_chain(v):
        chain = [v]
        while parent[chain[-1]] != -1:
            chain.append(int(parent[chain[-1]]))
        return chain

    def generator(h):
        a, b = mesh.tail(h), mesh.head(h)
        ca, cb = up_chain(a), up_chain(b)
        in_a = {v: i for i, v in enumerate(ca)}
        lca_i = next(i for i, v in enumerate(cb) if v in in_a)
        lca = cb[lca_i]
        loop = [h]
        for v in cb[:lca_i]:  # climb head -> lca
            loop.append(int(mesh.twin[parent_he[v]]))
        down = [int(parent_he[v]) for v in ca[: in_a[lca]]]  # lca -> tail
        loop.extend(reversed(down))
        # sanity: directed and closed
        for x, y in zip(loop, loop[1:] + loop[:1]):
            assert mesh.head(x) == mesh.tail(y)
        return tuple(loop)

    return TreeCotree(
        parent=parent,
        parent_he=parent_he,
        tree_edges=frozenset(tree_edges),
        cotree_edges=frozenset(cotree_edges),
        leftover=(leftover[0], leftover[1]),
        generators=(generator(leftover[0]), generator(leftover[1])),
    )


@dataclass(frozen=True)
class JumpAssignment:
    """Integer lattice jump per halfedge; J(twin) = -J and faces sum to zero."""

    jumps: np.ndarray  # (n_halfedges, 2) int64

    def __post_init__(self):
        j = np.asarray(self.jumps, dtype=np.int64)
        object.__setattr__(self, "jumps", j)

    def validate(self, mesh: SurfaceMesh) -> None:
        j = self.jumps
        if j.shape != (mesh.n_halfedges, 2):
            raise SolveError("jump array has the wrong shape")
        if not np.array_equal(j[mesh.twin], -j):
            raise SolveError("jumps are not antisymmetric under twin")
        per_face = j.reshape(-1, 3, 2).sum(axis=1)
        if np.any(per_face != 0):
            raise SolveError("jumps do not sum to zero around every face")

    def generator_sums(self, generators) -> np.ndarray:
        """Columns are the jump sums around each generator loop."""
        cols = [self.jumps[list(g)].sum(axis=0) for g in generators]
        return np.stack(cols, axis=1)

    def transformed(self, a: np.ndarray) -> "JumpAssignment":
        """Apply an integer change of marking: J'(h) = A @ J(h)."""
        a = np.asarray(a, dtype=np.int64)
        if abs(round(float(np.linalg.det(a)))) != 1:
            raise SolveError("marking change must be unimodular")
        return JumpAssignment(self.jumps @ a.T)


def assign_jumps(mesh: SurfaceMesh, tc: TreeCotree) -> JumpAssignment:
    """Tree edges jump zero, the two leftover edges jump by basis vectors, and
    cotree edges are forced by peeling degree-one faces of the dual tree."""
    nh = mesh.n_halfedges
    jumps = np.zeros((nh, 2), dtype=np.int64)
    assigned = np.zeros(nh, dtype=bool)

    def set_pair(h, val):
        t = int(mesh.twin[h])
        jumps[h] = val
        jumps[t] = -np.asarray(val)
        assigned[h] = assigned[t] = True

    for h in mesh.edges():
        if mesh.edge_id(h) in tc.tree_edges:
            set_pair(h, (0, 0))
    for k, h in enumerate(tc.leftover):
        basis = (1, 0) if k == 0 else (0, 1)
        set_pair(h, basis)

    remaining = np.array(
        [int((~assigned[3 * f : 3 * f + 3]).sum()) for f in range(mesh.n_faces)]
    )
    q = deque(np.flatnonzero(remaining == 1).tolist())
    while q:
        f = q.popleft()
        if remaining[f] != 1:
            continue
        hs = [3 * f + c for c in range(3)]
        h_open = next(h for h in hs if not assigned[h])
        total = jumps[hs].sum(axis=0) - jumps[h_open]
        set_pair(h_open, -total)
        for g in (f, int(mesh.twin[h_open]) // 3):
            remaining[g] -= 1
            if remaining[g] == 1:
                q.append(g)
    if assigned.sum() != nh:
        raise SolveError("jump peeling failed to reach every edge")
    out = JumpAssignment(jumps)
    out.validate(mesh)
    s = out.generator_sums(tc.generators)
    if abs(round(float(np.linalg.det(s)))) != 1:
        raise SolveError("tree-cotree jumps have non-unimodular generator sums")
    return out


def canonical_jumps(t: GluedTorus, tc: TreeCotree | None = None) -> JumpAssignment:
    """The marking induced by the ideal tile placements: each halfedge jumps by
    the difference of its endpoints' per-copy lattice offsets from a reference
    placement. Exact in rational arithmetic; integrality is asserted."""
    ref: dict[int, tuple[Fraction, Fraction]] = {}
    for c in range(t.copy_count):
        for p, q in t.ideal[c].items():
            tv = int(t.vertex_map[c, p])
            ref.setdefault(tv, q)

    def delta(c, p):
        q = t.ideal[c].get(p)
        if q is None:
            tv = int(t.vertex_map[c, p])
            if tv in ref:
                raise SolveError(
                    f"vertex {p} of copy {c} is glued but has no ideal position"
                )
            return (Fraction(0), Fraction(0))
        r = ref[int(t.vertex_map[c, p])]
        return (q[0] - r[0], q[1] - r[1])

    nh = t.mesh.n_halfedges
    jumps = np.zeros((nh, 2), dtype=np.int64)
    for h in range(nh):
        c, pt, ph = t.halfedge_pattern(h)
        dt, dh = delta(c, pt), delta(c, ph)
        jx, jy = dh[0] - dt[0], dh[1] - dt[1]
        if jx.denominator != 1 or jy.denominator != 1:
            raise SolveError(
                f"ideal placements give a fractional jump {jx},{jy} on halfedge {h}"
            )
        jumps[h] = (int(jx), int(jy))
    out = JumpAssignment(jumps)
    out.validate(t.mesh)
    if tc is None:
        tc = tree_cotree(t.mesh)
    s = out.generator_sums(tc.generators)
    det = round(float(np.linalg.det(s)))
    if abs(det) != 1:
        raise SolveError(
            f"canonical jumps span a sublattice (generator matrix det {det})"
        )
    return out


# ---------------------------------------------------------------------------
# the pinned harmonic solve


@dataclass
class TorusEmbedding:
    torus: GluedTorus
    lattice: Lattice
    positions: np.ndarray  # (n, 2), pin at the origin
    jumps: JumpAssignment
    pin: int
    stats: dict = field(default_factory=dict)

    def face_lifts(self) -> np.ndarray:
        """(F, 3, 2) coherent per-face corner positions: corner i is offset by
        the jump partial sum along the face from corner 0."""
        if getattr(self, "_lifts", None) is None:
            mesh = self.torus.mesh
            b = self.lattice.basis
            j = self.jumps.jumps.reshape(-1, 3, 2)
            partial = np.zeros_like(j)
            partial[:, 1] = j[:, 0]
            partial[:, 2] = j[:, 0] + j[:, 1]
            lifts = self.positions[mesh.faces] + partial @ b.T
            self._lifts = lifts
        return self._lifts


def solve_torus(
    t: GluedTorus,
    weights: EdgeWeights,
    jumps: JumpAssignment,
    lattice: Lattice | None = None,
    pin: int | None = None,
    rel_tol: float = 1e-10,
) -> TorusEmbedding:
    """Pinned SPD solve of the jump-corrected Laplace equation. Positive-weight
    systems go through preconditioned CG; if negative cotangents are present the
    system is only symmetric, and a direct sparse factorization is used."""
    mesh = t.mesh
    lattice = lattice if lattice is not None else t.lattice
    pin = t.pin_vertex if pin is None else int(pin)
    jumps.validate(mesh)
    _require_finite(weights)
    n = mesh.n_vertices
    b = lattice.basis

    tails = mesh.faces.reshape(-1)
    heads = mesh.faces[:, [1, 2, 0]].reshape(-1)
    canon = np.fromiter(mesh.edges(), dtype=np.int64)
    w_edge = weights.halfedge[canon]
    ii, jj = tails[canon], heads[canon]
    lap = csr_matrix(
        (
            np.concatenate([w_edge, w_edge, -w_edge, -w_edge]),
            (
                np.concatenate([ii, jj, ii, jj]),
                np.concatenate([ii, jj, jj, ii]),
            ),
        ),
        shape=(n, n),
    )

    # rhs_i = sum over outgoing halfedges of w * (B @ J); halfedge weights
    # already carry the full edge weight on both orientations
    rhs = np.zeros((n, 2))
    jb = jumps.jumps @ b.T
    np.add.at(rhs, tails, weights.halfedge[:, None] * jb)

    keep = np.ones(n, dtype=bool)
    keep[pin] = False
    a_red = lap[keep][:, keep].tocsr()
    b_red = rhs[keep]

    negative = bool(np.min(w_edge) < 0)
    x_red = np.empty_like(b_red)
    if negative:
        if n > 20_000:
            raise SolveError(
                "negative weights on a mesh too large for direct factorization"
            )
        log.warning(
            "negative cotangent weights: falling back to direct factorization"
        )
        x_red = splu(a_red.tocsc()).solve(b_red)
        iters = 0
        method = "splu"
    else:
        diag = a_red.diagonal()
        m = diags(1.0 / diag)
        iters = 0
        maxiter = int(50 * np.sqrt(n)) + 100

        def count(_):
            nonlocal iters
            iters += 1

        for k in range(2):
            xk, info = cg(
                a_red,
                b_red[:, k],
                rtol=1e-12,
                atol=0.0,
                maxiter=maxiter,
                M=m,
                callback=count,
            )
            x_red[:, k] = xk
        method = "cg"

    scale = float(np.linalg.norm(b_red)) or 1.0
    resid = float(np.linalg.norm(a_red @ x_red - b_red)) / scale
    if resid > rel_tol:
        raise SolveError(f"linear solve residual {resid:.3e} exceeds {rel_tol:.1e}")

    x = np.zeros((n, 2))
    x[keep] = x_red
    stats = {"method": method, "iters": int(iters), "residual": resid}
    return TorusEmbedding(
        torus=t, lattice=lattice, positions=x, jumps=jumps, pin=pin, stats=stats
    )


def energy_of(t: GluedTorus, weights: EdgeWeights, emb: TorusEmbedding) -> float:
    """Total Dirichlet energy of the torus map, from coherent face lifts."""
    return float(face_corner_energy(t.mesh, weights, emb.face_lifts()).sum())


def map_area(emb: TorusEmbedding) -> float:
    """Signed area of the map; equals |det Lambda| for a degree-1 oriented map."""
    lifts = emb.face_lifts()
    d1 = lifts[:, 1] - lifts[:, 0]
    d2 = lifts[:, 2] - lifts[:, 0]
    return float(0.5 * np.sum(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))


# ---------------------------------------------------------------------------
# developing faces into the plane


def develop_faces(emb: TorusEmbedding, faces) -> dict[int, np.ndarray]:
    """Coherent planar lifts for a connected set of faces: BFS from the first
    face, translating each neighbor so shared edges coincide exactly."""
    mesh = emb.torus.mesh
    lifts = emb.face_lifts()
    faces = [int(f) for f in faces]
    fset = set(faces)
    out: dict[int, np.ndarray] = {}
    q = deque([faces[0]])
    out[faces[0]] = lifts[faces[0]].copy()
    while q:
        f = q.popleft()
        for c in range(3):
            h = 3 * f + c
            tw = int(mesh.twin[h])
            g = tw // 3
            if g not in fset or g in out:
                continue
            # shared edge: tail(h) is corner c of f, head(tw) the same vertex
            anchor = out[f][c]
            own = lifts[g][(tw % 3 + 1) % 3]
            out[g] = lifts[g] + (anchor - own)
            q.append(g)
    if len(out) != len(fset):
        raise SolveError("face set is not connected; cannot develop coherently")
    return out


def develop_copy(emb: TorusEmbedding, c: int, atol: float = 1e-8):
    """Planar development of one copy. Returns (uv, face_lifts): uv indexed by
    pattern vertex, face_lifts by pattern face with pattern corner order."""
    t = emb.torus
    lifts = develop_faces(emb, t.face_map[c].tolist())
    npat = t.pattern.n_vertices
    uv = np.full((npat, 2), np.nan)
    fl = np.empty((t.pattern.n_faces, 3, 2))
    scale = max(float(np.abs(emb.positions).max()), 1.0)
    for pf in range(t.pattern.n_faces):
        tf = int(t.face_map[c, pf])
        for cc in range(3):
            pc = cc if not t.mirrored[c] else (-cc) % 3
            v = int(t.pattern.faces[pf, pc])
            pos = lifts[tf][cc]
            if np.isnan(uv[v, 0]):
                uv[v] = pos
            elif np.linalg.norm(uv[v] - pos) > atol * scale:
                raise SolveError(
                    f"incoherent development of copy {c} at pattern vertex {v}"
                )
            fl[pf, pc] = pos
    if np.isnan(uv).any():
        raise SolveError(f"copy {c} development missed some vertices")
    return uv, fl
