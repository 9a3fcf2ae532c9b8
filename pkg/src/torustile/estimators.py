"""Estimator-style facade in the scikit-learn mold: constructors only store
parameters, fit() does the work, learned artifacts live in trailing-underscore
attributes. There is no out-of-sample transform; like other manifold learners
these expose the embedding of the fitted mesh."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .analysis import (
    TileExtraction,
    check_reflections_8,
    check_rotation_63,
    check_tiling,
    flip_count,
    per_copy_energies,
)
from .construct import (
    MarkedDisk,
    SphereCutSystem,
    build_torus_4,
    build_torus_8,
    build_torus_42,
    build_torus_63,
    detect_rotation,
    make_symmetric_cuts,
    validate_covering,
)
from .direct import TargetShape, crosscheck_against_torus, solve_direct
from .energy import make_weights
from .mesh import SurfaceMesh
from .torus_solve import canonical_jumps, develop_copy, energy_of, solve_torus


def _require_fitted(obj, attr):
    if not hasattr(obj, attr):
        raise NotFittedError(
            f"this {type(obj).__name__} instance is not fitted yet; call fit first"
        )


class DiskEmbedding(BaseEstimator):
    """Harmonic embedding of a marked disk onto a fixed planar target.

    Parameters
    ----------
    target : "right_isosceles" | "equilateral" | "rectangle"
    weights : "cotangent" | "uniform"
    method : "torus" | "direct" | "both"
        Which route computes `uv_`; "both" runs the cross-check too.
    width, height : rectangle target dimensions (ignored otherwise).
    """

    def __init__(
        self,
        target: str = "right_isosceles",
        weights: str = "cotangent",
        method: str = "both",
        width: float = 1.0,
        height: float = 1.0,
    ):
        self.target = target
        self.weights = weights
        self.method = method
        self.width = width
        self.height = height

    def fit(self, mesh: SurfaceMesh, marks):
        if self.method not in ("torus", "direct", "both"):
            raise ValueError(f"unknown method {self.method!r}")
        shape = TargetShape.by_name(self.target, self.width, self.height)
        d = MarkedDisk(mesh, tuple(marks))
        report: dict = {"target": shape.name, "method": self.method}
        self.torus_ = None
        self.embedding_ = None
        self.direct_uv_ = None

        direct = None
        if self.method in ("direct", "both"):
            direct = solve_direct(mesh, d.marks, shape, scheme=self.weights)
            self.direct_uv_ = direct.uv
            report["direct"] = direct.stats | {"energy": direct.energy}

        if self.method in ("torus", "both"):
            if shape.name == "right_isosceles":
                t = build_torus_8(d)
            elif shape.name == "equilateral":
                t = build_torus_42(d)
            else:
                t = build_torus_4(d, shape.width, shape.height)
            w = make_weights(t.mesh, self.weights)
            emb = solve_torus(t, w, canonical_jumps(t))
            self.torus_ = t
            self.embedding_ = emb
            tile_uv, _ = develop_copy(emb, 0)
            self.uv_ = tile_uv
            energies = per_copy_energies(t, w, emb)
            report["torus"] = emb.stats | {
                "energy": energy_of(t, w, emb),
                "per_copy_energies": energies.tolist(),
                "flips": flip_count(emb),
            }
            if t.kind in ("disk8", "disk4"):
                report["reflections"] = check_reflections_8(emb).as_dict()
            report["tiling"] = check_tiling(emb).as_dict()
        else:
            self.uv_ = direct.uv

        if self.method == "both":
            report["crosscheck"] = crosscheck_against_torus(
                mesh, d.marks, shape, scheme=self.weights,
                direct=direct, embedding=self.embedding_,
            )
        self.report_ = report
        return self

    def fit_transform(self, mesh: SurfaceMesh, marks) -> np.ndarray:
        return self.fit(mesh, marks).uv_

    @property
    def n_tiles_(self) -> int:
        _require_fitted(self, "torus_")
        return 1 if self.torus_ is None else self.torus_.copy_count


class SphereEmbedding(BaseEstimator):
    """Flat-torus embedding of a 3-fold-symmetric sphere by the 63-copy
    branched covering.

    Parameters
    ----------
    weights : "cotangent" | "uniform"
    sigma : "detect" or an explicit vertex permutation of order 3.
    seed_target : cut endpoint; the lowest non-fixed vertex when omitted.
    """

    def __init__(self, weights: str = "cotangent", sigma="detect", seed_target=None):
        self.weights = weights
        self.sigma = sigma
        self.seed_target = seed_target

    def fit(self, mesh: SurfaceMesh, p_O: int):
        if isinstance(self.sigma, str) and self.sigma == "detect":
            sigma = detect_rotation(mesh, p_O)
        else:
            sigma = np.asarray(self.sigma, dtype=np.int64)
        if self.seed_target is None:
            seed = int(min(v for v in range(mesh.n_vertices) if sigma[v] != v))
        else:
            seed = int(self.seed_target)
        cuts = make_symmetric_cuts(mesh, p_O, sigma, seed)
        t = build_torus_63(cuts)
        self.covering_report_ = validate_covering(t, mesh)
        w = make_weights(t.mesh, self.weights)
        emb = solve_torus(t, w, canonical_jumps(t))
        self.cuts_ = cuts
        self.torus_ = t
        self.embedding_ = emb
        self.tiles_ = TileExtraction.from_embedding(emb)
        self.uv_ = self.tiles_.uv[0]
        self.report_ = {
            "covering": self.covering_report_,
            "solver": emb.stats,
            "energy": energy_of(t, w, emb),
            "per_copy_energies": per_copy_energies(t, w, emb).tolist(),
            "flips": flip_count(emb),
            "rotation": check_rotation_63(emb, tiles=self.tiles_).as_dict(),
            "tiling": check_tiling(emb, tiles=self.tiles_).as_dict(),
        }
        return self

    def fit_transform(self, mesh: SurfaceMesh, p_O: int) -> np.ndarray:
        return self.fit(mesh, p_O).uv_

    @property
    def n_tiles_(self) -> int:
        _require_fitted(self, "torus_")
        return self.torus_.copy_count
