"""Command-line entry point.

One subcommand, `run`: load an OBJ, build the requested construction, solve,
verify, and write three artifacts next to each other in the output directory:
`<name>.uv.obj`, `<name>.svg`, `<name>.report.json`. The report is canonical
JSON and is byte-identical across reruns of the same invocation.

Exit codes: 0 all gates passed; 1 a solve or verification gate failed;
2 the input or configuration was invalid.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    SymmetryReport,
    check_reflections_8,
    check_rotation_63,
    check_tiling,
    emit_report,
    emit_svg,
    emit_svg_uv,
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
from .energy import make_weights, weight_positivity_report
from .errors import (
    ConfigError,
    CutSystemError,
    MarkError,
    MeshInvalidError,
    ObjFormatError,
    SolveError,
    TopologyError,
)
from .mesh import load_obj, save_obj_with_uv
from .torus_solve import canonical_jumps, develop_copy, energy_of, solve_torus

log = logging.getLogger(__name__)

DISK_MODES = {
    "disk-isosceles": ("right_isosceles", 3),
    "disk-equilateral": ("equilateral", 3),
    "disk-rectangle": ("rectangle", 4),
}
MODES = tuple(DISK_MODES) + ("sphere-3fold",)

DEFAULT_TOLERANCES = {
    "solver_residual": 1e-10,
    "symmetry": 1e-8,
    "tiling": 1e-8,
    "energy_spread": 1e-9,
    "crosscheck_rel_rms": 1e-7,
}

_INPUT_ERRORS = (
    ConfigError,
    MarkError,
    ObjFormatError,
    MeshInvalidError,
    TopologyError,
    CutSystemError,
)


@dataclass
class RunConfig:
    mode: str
    input: str
    marks: tuple[int, ...] | None = None
    p_O: int | None = None
    sigma: object = None  # "detect" or an explicit permutation
    seed_target: int | None = None
    weights: str = "cotangent"
    method: str = "both"
    out_dir: str = "."
    aspect: tuple[float, float] = (1.0, 1.0)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.weights == "cotan":
            self.weights = "cotangent"
        if self.weights not in ("cotangent", "uniform"):
            raise ConfigError(f"unknown weight scheme {self.weights!r}")
        if self.method not in ("torus", "direct", "both"):
            raise ConfigError(f"unknown method {self.method!r}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")
        if self.marks is not None:
            self.marks = tuple(int(m) for m in self.marks)
        if self.mode in DISK_MODES:
            _, need = DISK_MODES[self.mode]
            if self.marks is None or len(self.marks) != need:
                got = 0 if self.marks is None else len(self.marks)
                raise ConfigError(
                    f"mode {self.mode} needs exactly {need} marks, got {got}"
                )
            if self.p_O is not None or self.sigma is not None:
                raise ConfigError("--pO/--sigma only apply to sphere-3fold")
        else:
            if self.marks is not None:
                raise ConfigError("--marks does not apply to sphere-3fold")
            if self.p_O is None:
                raise ConfigError("sphere-3fold needs --pO")
            if self.method == "direct":
                raise ConfigError("sphere-3fold has no direct method")
            if self.sigma is None:
                self.sigma = "detect"
        w, h = self.aspect
        if w <= 0 or h <= 0:
            raise ConfigError("aspect sides must be positive")

    def tols(self) -> dict:
        return DEFAULT_TOLERANCES | dict(self.tolerances)


def _spread(values: np.ndarray) -> float:
    m = float(np.mean(values))
    return float(np.ptp(values)) / abs(m) if m else float(np.ptp(values))


def _gate(gates: dict, name: str, value: float, tol: float) -> None:
    gates[name] = {"value": value, "tol": tol, "passed": bool(value <= tol)}


def run(cfg: RunConfig) -> dict:
    """Execute a configured run, write artifacts, and return the report dict."""
    tols = cfg.tols()
    mesh = load_obj(cfg.input)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(cfg.input).stem

    report: dict = {
        "mode": cfg.mode,
        "input": Path(cfg.input).name,
        "weights": cfg.weights,
        "method": cfg.method,
        "tolerances": tols,
        "branch_table": None,
    }
    gates: dict = {}

    if cfg.mode in DISK_MODES:
        target_name, _ = DISK_MODES[cfg.mode]
        shape = TargetShape.by_name(target_name, *cfg.aspect)
        d = MarkedDisk(mesh, cfg.marks)
        report["marks"] = list(d.marks)

        direct = None
        if cfg.method in ("direct", "both"):
            direct = solve_direct(
                mesh, d.marks, shape, scheme=cfg.weights,
                rel_tol=tols["solver_residual"],
            )
            report["direct"] = {
                "energy": direct.energy,
                "residual": direct.stats["residual"],
                "ndof": direct.stats["ndof"],
            }
            _gate(gates, "direct_residual", direct.stats["residual"],
                  tols["solver_residual"])

        emb = None
        if cfg.method in ("torus", "both"):
            if shape.name == "right_isosceles":
                t = build_torus_8(d)
            elif shape.name == "equilateral":
                t = build_torus_42(d)
            else:
                t = build_torus_4(d, shape.width, shape.height)
            emb = _solve_and_check(t, cfg, tols, report, gates)
            uv, _ = develop_copy(emb, 0)
            covering = validate_covering(t, d.mesh)
            report["covering"] = covering
            gates["covering"] = {"value": 0.0 if covering["passed"] else 1.0,
                                 "tol": 0.5, "passed": covering["passed"]}
            save_obj_with_uv(d.mesh, uv, out_dir / f"{stem}.uv.obj")
            emit_svg(emb, out_dir / f"{stem}.svg")
        else:
            report["construction"] = "direct"
            report["k"] = 1
            report["energies"] = [direct.energy]
            report["solver"] = {"method": "direct",
                                "iters": 0,
                                "residual": direct.stats["residual"]}
            report["flips"] = 0
            save_obj_with_uv(mesh, direct.uv, out_dir / f"{stem}.uv.obj")
            emit_svg_uv(mesh, direct.uv, out_dir / f"{stem}.svg")

        if cfg.method == "both":
            cross = crosscheck_against_torus(
                mesh, d.marks, shape, scheme=cfg.weights,
                direct=direct, embedding=emb,
            )
            report["crosscheck"] = {
                "rms": cross["rms"],
                "rel_rms": cross["rel_rms"],
                "scale": cross["scale"],
                "reflected": cross["reflected"],
                "direct_energy": cross["direct_energy"],
                "tile_energy_scaled": cross["tile_energy_scaled"],
            }
            _gate(gates, "crosscheck_rel_rms", cross["rel_rms"],
                  tols["crosscheck_rel_rms"])
    else:
        if isinstance(cfg.sigma, str) and cfg.sigma == "detect":
            sigma = detect_rotation(mesh, cfg.p_O)
        else:
            sigma = np.asarray([int(x) for x in cfg.sigma], dtype=np.int64)
        if cfg.seed_target is None:
            seed = int(min(v for v in range(mesh.n_vertices)
                           if sigma[v] != v and v != cfg.p_O))
        else:
            seed = int(cfg.seed_target)
        cuts = make_symmetric_cuts(mesh, cfg.p_O, sigma, seed)
        report["cuts"] = [list(p) for p in cuts.paths]
        t = build_torus_63(cuts)
        covering = validate_covering(t, mesh)
        report["covering"] = covering
        report["branch_table"] = covering["branch_table"]
        gates["covering"] = {"value": 0.0 if covering["passed"] else 1.0,
                             "tol": 0.5, "passed": covering["passed"]}
        emb = _solve_and_check(t, cfg, tols, report, gates)
        uv, _ = develop_copy(emb, 0)
        save_obj_with_uv(t.pattern, uv, out_dir / f"{stem}.uv.obj")
        emit_svg(emb, out_dir / f"{stem}.svg")

    report["checks"] = gates
    report["passed"] = all(g["passed"] for g in gates.values())
    emit_report(report, out_dir / f"{stem}.report.json")
    report["artifacts"] = {
        "uv_obj": str(out_dir / f"{stem}.uv.obj"),
        "svg": str(out_dir / f"{stem}.svg"),
        "report": str(out_dir / f"{stem}.report.json"),
    }
    return report


def _solve_and_check(t, cfg: RunConfig, tols, report, gates):
    """Torus route shared by every mode: solve, then run the applicable checks."""
    w = make_weights(t.mesh, cfg.weights)
    wrep = weight_positivity_report(w, t.mesh)
    report["weight_report"] = wrep
    jumps = canonical_jumps(t)
    emb = solve_torus(t, w, jumps, rel_tol=tols["solver_residual"])
    energies = per_copy_energies(t, w, emb)
    flips = flip_count(emb)

    m = t.mesh
    report["construction"] = t.kind
    report["k"] = t.copy_count
    report["cells"] = {
        "vertices": m.n_vertices,
        "edges": m.n_edges,
        "faces": m.n_faces,
        "euler": m.euler_characteristic,
    }
    report["energies"] = energies.tolist()
    report["energy_total"] = float(energies.sum())
    report["flips"] = flips
    report["solver"] = dict(emb.stats)

    residuals = {"solver": emb.stats["residual"]}
    _gate(gates, "solver_residual", emb.stats["residual"], tols["solver_residual"])
    _gate(gates, "energy_spread", _spread(energies), tols["energy_spread"])
    if wrep["negative_edge_count"] == 0 and not wrep["sentinel_face_count"]:
        gates["flips"] = {"value": flips, "tol": 0, "passed": flips == 0}

    if t.kind in ("disk8", "disk4"):
        refl = check_reflections_8(emb, tol=tols["symmetry"])
        report["reflections"] = refl.as_dict()
        residuals["reflections"] = refl.max_deviation
        _gate(gates, "reflections", refl.max_deviation, tols["symmetry"])
    if t.kind == "sphere63":
        rot = check_rotation_63(emb, tol=tols["symmetry"])
        report["rotation"] = rot.as_dict()
        residuals["rotation"] = rot.max_deviation
        _gate(gates, "rotation", rot.max_deviation, tols["symmetry"])
    tiling = check_tiling(emb, tol=tols["tiling"])
    report["tiling"] = tiling.as_dict() | {"details": tiling.details}
    residuals["tiling"] = tiling.max_deviation
    _gate(gates, "tiling", tiling.max_deviation, tols["tiling"])
    if tiling.details.get("overlap_violations"):
        gates["tiling"]["passed"] = False

    report["residuals"] = residuals
    return emb


# ---------------------------------------------------------------------------
# argument handling


def _parse_int_list(s: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in s.split(","))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {s!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="torustile",
        description="Flat-torus tilings from glued mesh copies.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="build, solve, verify, and write artifacts")
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--input", help="triangle mesh in OBJ format")
    r.add_argument("--marks", help="comma-separated boundary vertex ids")
    r.add_argument("--pO", type=int, dest="p_O", help="cone vertex (sphere mode)")
    r.add_argument("--sigma", help="'detect' or comma-separated permutation")
    r.add_argument("--seed-target", type=int, help="cut endpoint vertex")
    r.add_argument("--weights", choices=["cotangent", "cotan", "uniform"])
    r.add_argument("--method", choices=["torus", "direct", "both"])
    r.add_argument("--out-dir")
    r.add_argument("--aspect", help="rectangle W,H (disk-rectangle mode)")
    r.add_argument("--config", help="JSON file with defaults for any option")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")

    def pick(flag, key, default=None):
        return flag if flag is not None else base.get(key, default)

    mode = pick(args.mode, "mode")
    src = pick(args.input, "input")
    if mode is None or src is None:
        raise ConfigError("both --mode and --input are required")
    marks = args.marks
    if marks is not None:
        marks = _parse_int_list(marks)
    elif "marks" in base and base["marks"] is not None:
        marks = tuple(int(x) for x in base["marks"])
    sigma = pick(args.sigma, "sigma")
    if isinstance(sigma, str) and sigma != "detect":
        sigma = _parse_int_list(sigma)
    aspect = args.aspect
    if aspect is not None:
        try:
            parts = tuple(float(x) for x in aspect.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --aspect {aspect!r}") from exc
        if len(parts) != 2:
            raise ConfigError("--aspect needs exactly W,H")
        aspect = parts
    else:
        aspect = tuple(base.get("aspect", (1.0, 1.0)))
    return RunConfig(
        mode=mode,
        input=src,
        marks=marks,
        p_O=pick(args.p_O, "p_O"),
        sigma=sigma,
        seed_target=pick(args.seed_target, "seed_target"),
        weights=pick(args.weights, "weights", "cotangent"),
        method=pick(args.method, "method", "both"),
        out_dir=pick(args.out_dir, "out_dir", "."),
        aspect=aspect,
        tolerances=base.get("tolerances", {}),
    )


def main(argv=None) -> int:
    level = os.environ.get("TORUSTILE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolveError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1

    if report.get("branch_table"):
        bt = report["branch_table"]
        degs: dict[str, int] = {}
        for entry in bt.values():
            key = f"{entry['preimages']} preimages of degree {entry['local_degrees']}"
            degs[key] = degs.get(key, 0) + 1
        print("branch table:")
        for key in sorted(degs):
            print(f"  {degs[key]} base vertices with {key}")
    status = "PASS" if report["passed"] else "FAIL"
    for name, g in sorted(report["checks"].items()):
        mark = "ok" if g["passed"] else "FAIL"
        print(f"  [{mark}] {name}: {g['value']:.3e} (tol {g['tol']:.1e})")
    print(f"{status}: report at {report['artifacts']['report']}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
