"""Seamless flat-torus parameterizations from glued mesh copies.

The package builds branched flat tori out of mirrored or rotated copies of a
marked disk (or a cut sphere), solves one linear system on the glued surface,
and reads symmetric, tiling parameterizations off the single solution.
"""

from .analysis import (
    SymmetryReport,
    TileExtraction,
    check_reflections_8,
    check_rotation_63,
    check_tiling,
    emit_report,
    emit_svg,
    emit_svg_uv,
    flip_count,
    per_copy_energies,
    procrustes,
)
from .cli import RunConfig, run
from .construct import (
    GluedTorus,
    MarkedDisk,
    SphereCutSystem,
    build_torus_4,
    build_torus_8,
    build_torus_42,
    build_torus_63,
    cut_sphere,
    detect_rotation,
    make_symmetric_cuts,
    validate_covering,
)
from .direct import TargetShape, crosscheck_against_torus, solve_direct
from .energy import (
    EdgeWeights,
    conformal_energy,
    cotan_weights,
    dirichlet_energy,
    make_weights,
    uniform_weights,
    weight_positivity_report,
)
from .errors import (
    ConfigError,
    CutSystemError,
    MarkError,
    MeshInvalidError,
    ObjFormatError,
    SolveError,
    TopologyError,
    TorustileError,
)
from .estimators import DiskEmbedding, SphereEmbedding
from .lattice import Lattice
from .mesh import (
    BoundaryLoop,
    SurfaceMesh,
    boundary_loop,
    classify,
    load_obj,
    load_obj_with_uv,
    save_obj,
    save_obj_with_uv,
)
from .torus_solve import (
    JumpAssignment,
    TorusEmbedding,
    assign_jumps,
    canonical_jumps,
    develop_copy,
    develop_faces,
    energy_of,
    map_area,
    solve_torus,
    tree_cotree,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLoop",
    "ConfigError",
    "CutSystemError",
    "DiskEmbedding",
    "EdgeWeights",
    "GluedTorus",
    "JumpAssignment",
    "Lattice",
    "MarkError",
    "MarkedDisk",
    "MeshInvalidError",
    "ObjFormatError",
    "RunConfig",
    "SolveError",
    "SphereCutSystem",
    "SphereEmbedding",
    "SurfaceMesh",
    "SymmetryReport",
    "TargetShape",
    "TileExtraction",
    "TopologyError",
    "TorusEmbedding",
    "TorustileError",
    "assign_jumps",
    "boundary_loop",
    "build_torus_4",
    "build_torus_8",
    "build_torus_42",
    "build_torus_63",
    "canonical_jumps",
    "check_reflections_8",
    "check_rotation_63",
    "check_tiling",
    "classify",
    "conformal_energy",
    "cotan_weights",
    "crosscheck_against_torus",
    "cut_sphere",
    "detect_rotation",
    "develop_copy",
    "develop_faces",
    "dirichlet_energy",
    "emit_report",
    "emit_svg",
    "emit_svg_uv",
    "energy_of",
    "flip_count",
    "load_obj",
    "load_obj_with_uv",
    "make_symmetric_cuts",
    "make_weights",
    "map_area",
    "per_copy_energies",
    "procrustes",
    "run",
    "save_obj",
    "save_obj_with_uv",
    "solve_direct",
    "solve_torus",
    "tree_cotree",
    "uniform_weights",
    "validate_covering",
    "weight_positivity_report",
]
