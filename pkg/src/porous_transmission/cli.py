"""Command-line driver: ``solve <scenario.toml> [--out DIR] [--threads N] [--seed S]``.

A scenario is a TOML file.  Top-level keys are ``mode``, ``seed`` and
``output``; the tables are ``mesh``, ``params``, ``nonlinear``, ``grid``,
``data``, ``evaluation`` and ``verify``.  See the README for the full schema
and the analytic data vocabulary.

Exit status: 0 on success, 2 for an invalid scenario, 3 when the solver fails
or the fixed-point loop does not converge.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import verify as vf
from .geometry import MeshError, SurfaceMesh, load_mesh, make_cube, make_shell_grid, make_sphere, make_volume_grid
from .nonlinear import NonConvergenceError, NonlinearConfig, picard_solve, smallness_report
from .transmission import (
    FlowState,
    Grids,
    OperatorCache,
    ParameterError,
    ProblemParams,
    SolverError,
    TransmissionData,
    TransmissionSolver,
    complementary_spectra,
    manufactured_problem,
)

MODES = ("linear", "nonlinear", "verify-jumps", "verify-green", "verify-decay", "verify-representation")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


class ScenarioError(ValueError):
    """Invalid scenario; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


# Defaults double as the schema: a key not listed here is rejected.
DEFAULTS: dict[str, Any] = {
    "mode": "linear",
    "seed": 0,
    "output": "output",
    "mesh": {"kind": "sphere", "radius": 1.0, "level": 2, "edge": 2.0, "divisions": 2,
             "center": [0.0, 0.0, 0.0], "path": ""},
    "params": {"alpha": 1.0, "mu": 1.0, "p": 0.0, "u_inf": [0.0, 0.0, 0.0]},
    "nonlinear": {"k": 0.0, "beta": 0.0, "max_iters": 50, "tol": 1e-8, "relaxation": 1.0,
                  "smallness_probes": 20},
    "grid": {"interior_h": 0.0, "exterior_h": 0.0, "exterior_inner_radius": 0.0, "exterior_outer_radius": 0.0},
    "data": {"manufactured": False, "h0": [], "g0": [], "f_plus": [], "f_minus": []},
    "evaluation": {"points": [], "count": 50, "radii": [0.5, 2.0]},
    "verify": {"levels": [1, 2, 3], "side": "interior", "radii": [4.0, 8.0, 16.0, 32.0, 64.0],
               "sphere_points": 200, "radial_order": 16, "test_radius": 0.0, "pole": [],
               "force": [1.0, -0.5, 0.25]},
}

TERM_KEYS = {
    "constant": {"type", "value"},
    "polynomial": {"type", "terms"},
    "gaussian": {"type", "amplitude", "center", "width"},
    "file": {"type", "path"},
}


@dataclass
class Scenario:
    """Resolved scenario: every key present, values type-checked, and the parameters validated."""

    config: dict[str, Any]
    source: Path
    params: ProblemParams = field(init=False)
    nonlinear: NonlinearConfig = field(init=False)

    def __post_init__(self) -> None:
        p = self.config["params"]
        try:
            self.params = ProblemParams(p["alpha"], p["mu"], np.asarray(p["p"], float) * (np.eye(3) if np.ndim(p["p"]) == 0 else 1.0), p["u_inf"])
        except ParameterError as exc:
            raise ScenarioError(f"params.{_param_key(exc.key)}", str(exc)) from exc
        n = self.config["nonlinear"]
        try:
            self.nonlinear = NonlinearConfig(n["k"], n["beta"], n["max_iters"], n["tol"], n["relaxation"])
        except ValueError as exc:
            raise ScenarioError("nonlinear", str(exc)) from exc

    @property
    def mode(self) -> str:
        return self.config["mode"]

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    @property
    def output(self) -> Path:
        return Path(self.config["output"])


def _param_key(key: str) -> str:
    return {"p_matrix": "p"}.get(key, key)


def _merge(user: dict, defaults: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ScenarioError(path, "unknown key")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ScenarioError(path, "must be a table")
            out[key] = _merge(val, defaults[key], path + ".")
        else:
            out[key] = val
    return out


def _check_number(cfg: dict, path: str, positive: bool = False, integer: bool = False) -> None:
    section, key = path.split(".") if "." in path else (None, path)
    val = cfg[section][key] if section else cfg[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(path, "must be a number")
    if integer and int(val) != val:
        raise ScenarioError(path, "must be an integer")
    if positive and not val > 0:
        raise ScenarioError(path, "must be > 0")


def _check_vector(val, path: str) -> None:
    arr = np.asarray(val, dtype=object)
    if arr.shape != (3,) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in arr):
        raise ScenarioError(path, "must be a list of 3 numbers")


def _check_terms(val, path: str) -> None:
    terms = val if isinstance(val, list) else [val]
    for i, term in enumerate(terms):
        where = f"{path}[{i}]" if isinstance(val, list) else path
        if not isinstance(term, dict) or term.get("type") not in TERM_KEYS:
            raise ScenarioError(where, f"each term needs type in {sorted(TERM_KEYS)}")
        kind = term["type"]
        extra = set(term) - TERM_KEYS[kind]
        if extra:
            raise ScenarioError(f"{where}.{sorted(extra)[0]}", "unknown key")
        missing = TERM_KEYS[kind] - set(term)
        if missing:
            raise ScenarioError(f"{where}.{sorted(missing)[0]}", "missing required key")
        if kind == "constant":
            _check_vector(term["value"], f"{where}.value")
        elif kind == "gaussian":
            _check_vector(term["amplitude"], f"{where}.amplitude")
            _check_vector(term["center"], f"{where}.center")
            if not isinstance(term["width"], (int, float)) or not term["width"] > 0:
                raise ScenarioError(f"{where}.width", "must be > 0")
        elif kind == "polynomial":
            if not isinstance(term["terms"], list):
                raise ScenarioError(f"{where}.terms", "must be a list of {coefficient, powers} tables")
            for j, mono in enumerate(term["terms"]):
                mw = f"{where}.terms[{j}]"
                if not isinstance(mono, dict) or set(mono) != {"coefficient", "powers"}:
                    raise ScenarioError(mw, "needs exactly the keys coefficient and powers")
                _check_vector(mono["coefficient"], f"{mw}.coefficient")
                pw = mono["powers"]
                if not (isinstance(pw, list) and len(pw) == 3 and all(isinstance(q, int) and q >= 0 for q in pw)):
                    raise ScenarioError(f"{mw}.powers", "must be 3 non-negative integers")


def resolve(user: dict) -> dict:
    """Fill defaults and check types; raises :class:`ScenarioError`."""
    cfg = _merge(user, DEFAULTS)
    if cfg["mode"] not in MODES:
        raise ScenarioError("mode", f"must be one of {', '.join(MODES)}")
    _check_number(cfg, "seed", integer=True)
    if cfg["seed"] < 0:
        raise ScenarioError("seed", "must be >= 0")
    mesh = cfg["mesh"]
    if mesh["kind"] not in ("sphere", "cube", "file"):
        raise ScenarioError("mesh.kind", "must be sphere, cube or file")
    if mesh["kind"] == "file" and not mesh["path"]:
        raise ScenarioError("mesh.path", "missing required key for a file mesh")
    for key in ("radius", "edge"):
        _check_number(cfg, f"mesh.{key}", positive=True)
    for key in ("level", "divisions"):
        _check_number(cfg, f"mesh.{key}", integer=True)
    _check_vector(mesh["center"], "mesh.center")
    for key in ("alpha", "mu"):
        _check_number(cfg, f"params.{key}")
    _check_vector(cfg["params"]["u_inf"], "params.u_inf")
    for key in ("interior_h", "exterior_h", "exterior_inner_radius", "exterior_outer_radius"):
        _check_number(cfg, f"grid.{key}")
    for key in ("h0", "g0", "f_plus", "f_minus"):
        if cfg["data"][key] != []:
            _check_terms(cfg["data"][key], f"data.{key}")
    if not isinstance(cfg["data"]["manufactured"], bool):
        raise ScenarioError("data.manufactured", "must be true or false")
    if cfg["data"]["f_plus"] != [] and cfg["grid"]["interior_h"] <= 0:
        raise ScenarioError("grid.interior_h", "missing required key: an interior force needs a cell size")
    if cfg["data"]["f_minus"] != [] and (cfg["grid"]["exterior_h"] <= 0 or cfg["grid"]["exterior_outer_radius"] <= 0):
        raise ScenarioError("grid.exterior_h", "missing required key: an exterior force needs a cell size and an outer radius")
    if cfg["mode"] == "nonlinear" and cfg["grid"]["interior_h"] <= 0:
        raise ScenarioError("grid.interior_h", "missing required key: the nonlinear mode needs an interior grid")
    if cfg["mode"] == "verify-decay" and len(cfg["verify"]["radii"]) < 4:
        raise ScenarioError("verify.radii", "needs at least 4 radii")
    if cfg["mode"] in ("verify-jumps", "verify-representation") and len(cfg["verify"]["levels"]) < 3:
        raise ScenarioError("verify.levels", "needs at least 3 levels")
    if cfg["verify"]["side"] not in ("interior", "exterior"):
        raise ScenarioError("verify.side", "must be interior or exterior")
    pts = cfg["evaluation"]["points"]
    if pts and np.asarray(pts, dtype=object).ndim != 2:
        raise ScenarioError("evaluation.points", "must be a list of [x, y, z] points")
    return cfg


def parse_scenario(path: str | Path, seed: int | None = None, output: str | Path | None = None) -> Scenario:
    """Read, default-fill and validate a scenario file; command-line overrides win."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            user = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ScenarioError("<file>", f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<file>", f"not valid TOML: {exc}") from exc
    if seed is not None:
        user["seed"] = seed
    if output is not None:
        user["output"] = str(output)
    cfg = resolve(user)
    if cfg["mesh"]["kind"] == "file" and not Path(cfg["mesh"]["path"]).is_absolute():
        cfg["mesh"]["path"] = str((path.parent / cfg["mesh"]["path"]).resolve())
    return Scenario(cfg, path)


# ---------------------------------------------------------------------------
# Data vocabulary


def eval_terms(entries, points: np.ndarray, base: Path) -> np.ndarray:
    """Sum of vocabulary terms at ``points``; an empty list is zero.

    ``file`` terms hold one 3-vector per row, matching the points in order.
    """
    out = np.zeros((len(points), 3))
    if entries == []:
        return out
    for term in entries if isinstance(entries, list) else [entries]:
        kind = term["type"]
        if kind == "constant":
            out += np.asarray(term["value"], float)
        elif kind == "polynomial":
            for mono in term["terms"]:
                pw = mono["powers"]
                mag = points[:, 0] ** pw[0] * points[:, 1] ** pw[1] * points[:, 2] ** pw[2]
                out += mag[:, None] * np.asarray(mono["coefficient"], float)
        elif kind == "gaussian":
            d2 = np.sum((points - np.asarray(term["center"], float)) ** 2, axis=1)
            out += np.exp(-d2 / term["width"] ** 2)[:, None] * np.asarray(term["amplitude"], float)
        else:
            p = Path(term["path"])
            arr = np.loadtxt(p if p.is_absolute() else base / p, delimiter=",", ndmin=2)
            if arr.shape != (len(points), 3):
                raise ScenarioError("data", f"file {p} must have {len(points)} rows of 3 values")
            out += arr
    return out


# ---------------------------------------------------------------------------
# Running


def build_mesh(cfg: dict) -> SurfaceMesh:
    m = cfg["mesh"]
    if m["kind"] == "sphere":
        return make_sphere(m["radius"], int(m["level"]), m["center"])
    if m["kind"] == "cube":
        return make_cube(m["edge"], int(m["divisions"]), m["center"])
    return load_mesh(m["path"])


def build_grids(cfg: dict, mesh: SurfaceMesh) -> Grids:
    g = cfg["grid"]
    interior = make_volume_grid(mesh, g["interior_h"]) if g["interior_h"] > 0 else None
    exterior = None
    if g["exterior_h"] > 0:
        exterior = make_shell_grid(mesh, g["exterior_h"], g["exterior_outer_radius"], g["exterior_inner_radius"])
    return Grids(interior, exterior)


def build_data(cfg: dict, mesh: SurfaceMesh, grids: Grids, base: Path) -> TransmissionData:
    d = cfg["data"]
    c = mesh.panel_centroids
    f_plus = eval_terms(d["f_plus"], grids.interior.centers, base) if d["f_plus"] != [] else None
    f_minus = eval_terms(d["f_minus"], grids.exterior.centers, base) if d["f_minus"] != [] else None
    return TransmissionData(eval_terms(d["h0"], c, base), eval_terms(d["g0"], c, base), f_plus, f_minus)


def evaluation_points(cfg: dict, mesh: SurfaceMesh, seed: int) -> np.ndarray:
    """Explicit points, or ``count`` seeded random directions spread over the listed radii (scaled by the surface radius)."""
    ev = cfg["evaluation"]
    if ev["points"]:
        return np.asarray(ev["points"], float)
    center = mesh.center()
    scale = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    d = np.random.default_rng(seed).normal(size=(int(ev["count"]), 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    radii = np.asarray(ev["radii"], float)
    r = radii[np.arange(len(d)) * len(radii) // len(d)]
    return center + scale * r[:, None] * d


def write_fields(state: FlowState, points: np.ndarray, path: Path) -> None:
    s = state.evaluate(points)
    rows = [
        {"x": p[0], "y": p[1], "z": p[2], "domain": "interior" if ins else "exterior",
         "u1": u[0], "u2": u[1], "u3": u[2], "pi": q}
        for p, ins, u, q in zip(points, s.inside, s.u, s.pi)
    ]
    vf.write_csv(rows, path)


def write_densities(state: FlowState, path: Path) -> None:
    big, small = state.densities.phi_big, state.densities.phi_small
    rows = [
        {"panel": i, "Phi1": big[i, 0], "Phi2": big[i, 1], "Phi3": big[i, 2],
         "phi1": small[i, 0], "phi2": small[i, 1], "phi3": small[i, 2]}
        for i in range(len(big))
    ]
    vf.write_csv(rows, path)


class Report:
    """Deterministic ``key = value`` lines grouped in sections."""

    def __init__(self) -> None:
        self.lines: list[str] = []

    def section(self, name: str) -> None:
        if self.lines:
            self.lines.append("")
        self.lines.append(f"[{name}]")

    def add(self, key: str, value) -> None:
        if isinstance(value, (float, np.floating)):
            value = f"{float(value):.10e}"
        self.lines.append(f"{key} = {value}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _norm_section(report: Report, state: FlowState) -> None:
    report.section("norms")
    report.add("phi_big_norm", float(np.linalg.norm(state.densities.phi_big)))
    report.add("phi_small_norm", float(np.linalg.norm(state.densities.phi_small)))
    report.add("linear_residual", state.residual)
    center = state.mesh.center()
    radius = float(np.linalg.norm(state.mesh.vertices - center, axis=1).max())
    inner = 1.5 * radius
    if state.grids.exterior is not None and state.grids.exterior.outer_radius is not None:
        inner = max(inner, 1.1 * state.grids.exterior.outer_radius)
    w = vf.weighted_norms(state, inner, 2.0 * inner)
    report.add("weighted_norm_annulus", f"[{w.inner_radius:.6g}, {w.outer_radius:.6g}]")
    report.add("weighted_velocity_l2", w.weighted_velocity)
    report.add("velocity_gradient_l2", w.gradient)
    report.add("pressure_l2", w.pressure)


def _run_linear(s: Scenario, out: Path, report: Report, timings: dict) -> None:
    cfg = s.config
    mesh = build_mesh(cfg)
    grids = build_grids(cfg, mesh)
    t0 = time.perf_counter()
    operators = OperatorCache.build(mesh, s.params.alpha)
    solver = TransmissionSolver(s.params, mesh, grids, operators)
    timings["assembly_and_factorization"] = time.perf_counter() - t0
    if cfg["data"]["manufactured"]:
        data = manufactured_problem(s.params, mesh).data(mesh)
    else:
        data = build_data(cfg, mesh, grids, s.source.parent)
    t0 = time.perf_counter()
    state = solver.solve(data)
    timings["solve"] = time.perf_counter() - t0
    report.section("linear")
    report.add("panels", mesh.n_panels)
    if cfg["data"]["manufactured"]:
        err, _ = vf.manufactured_error(s.params, mesh, solver=solver)
        report.add("manufactured_max_relative_error", err)
    write_fields(state, evaluation_points(cfg, mesh, s.seed), out / "fields.csv")
    write_densities(state, out / "densities.csv")
    _norm_section(report, state)
    report.section("complementary_spectra")
    for name, sv in complementary_spectra(operators).items():
        picks = sv[[0, len(sv) // 10, len(sv) // 2, -1]] / sv[0]
        report.add(f"{name}_relative_singular_values", "[" + ", ".join(f"{v:.4e}" for v in picks) + "]")


def _run_nonlinear(s: Scenario, out: Path, report: Report, timings: dict) -> None:
    cfg = s.config
    mesh = build_mesh(cfg)
    grids = build_grids(cfg, mesh)
    data = build_data(cfg, mesh, grids, s.source.parent)
    t0 = time.perf_counter()
    solver = TransmissionSolver(s.params, mesh, grids)
    timings["assembly_and_factorization"] = time.perf_counter() - t0
    report.section("nonlinear")
    report.add("panels", mesh.n_panels)
    report.add("interior_cells", grids.interior.n_cells)
    probes = int(cfg["nonlinear"]["smallness_probes"])
    if probes > 0:
        t0 = time.perf_counter()
        rep = smallness_report(s.params, mesh, grids, data, s.nonlinear, probes, s.seed, solver)
        timings["smallness"] = time.perf_counter() - t0
        for key in ("c_star", "c1", "zeta", "eta", "data_norm", "data_ratio"):
            report.add(f"estimated_{key}", getattr(rep, key))
    t0 = time.perf_counter()
    try:
        state, trace = picard_solve(s.params, mesh, grids, data, s.nonlinear, solver)
    except NonConvergenceError as exc:
        vf.write_csv(exc.trace.rows(), out / "trace.csv")
        report.add("iterations", exc.trace.iterations)
        raise
    finally:
        timings["fixed_point"] = time.perf_counter() - t0
    vf.write_csv(trace.rows(), out / "trace.csv")
    report.add("iterations", trace.iterations)
    report.add("final_update_norm", trace.update_norms[-1])
    report.add("final_solution_norm", trace.solution_norms[-1])
    write_fields(state, evaluation_points(cfg, mesh, s.seed), out / "fields.csv")
    write_densities(state, out / "densities.csv")
    _norm_section(report, state)


def _write_studies(studies, out: Path, name: str, report: Report) -> None:
    rows = [r for st in studies for r in st.rows()]
    vf.write_csv(rows, out / f"{name}.csv")
    report.section(name)
    report.lines.extend(vf.study_report(studies).rstrip("\n").splitlines())


def _run_verify(s: Scenario, out: Path, report: Report, timings: dict) -> None:
    cfg, v = s.config, s.config["verify"]
    alpha = s.params.alpha
    t0 = time.perf_counter()
    if s.mode == "verify-jumps":
        studies = vf.run_jump_suite([int(x) for x in v["levels"]], alpha, s.seed)
        _write_studies(list(studies.values()), out, "jumps", report)
    elif s.mode == "verify-representation":
        study = vf.run_representation([int(x) for x in v["levels"]], alpha, v["side"], v["force"])
        _write_studies([study], out, "representation", report)
    elif s.mode == "verify-green":
        mesh = build_mesh(cfg)
        center = mesh.center()
        radius = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
        interior = v["side"] == "interior"
        default_pole = center + (1.5 if interior else 0.3) * radius * np.array([0.6, 0.0, 0.8])
        pole = np.asarray(v["pole"], float) if v["pole"] else default_pole
        test_radius = v["test_radius"] or (1.3 if interior else 2.5) * radius
        test = vf.BumpField.random(center, test_radius, s.seed)
        alpha_side = alpha if interior else 0.0
        res = vf.run_green_identity(mesh, alpha_side, vf.point_source(alpha_side, pole, v["force"]), test,
                                    v["side"], int(v["radial_order"]))
        vf.write_csv([{"side": v["side"], "alpha": alpha_side, "boundary": res.boundary, "volume": res.volume,
                       "scale": res.scale, "gap": res.gap}], out / "green.csv")
        report.section("green")
        report.add("boundary", res.boundary)
        report.add("volume", res.volume)
        report.add("relative_gap", res.gap)
    else:
        mesh = build_mesh(cfg)
        grids = build_grids(cfg, mesh)
        data = build_data(cfg, mesh, grids, s.source.parent)
        state = TransmissionSolver(s.params, mesh, grids).solve(data)
        decay = vf.run_decay_study(state, v["radii"], int(v["sphere_points"]))
        vf.write_csv(decay.rows(), out / "decay.csv")
        report.section("decay")
        report.add("velocity_slope", decay.velocity_slope)
        report.add("gradient_slope", decay.gradient_slope)
        report.add("pressure_slope", decay.pressure_slope)
        report.add("leray_ratios", "[" + ", ".join(f"{r:.6f}" for r in decay.leray_ratios()) + "]")
        write_densities(state, out / "densities.csv")
        _norm_section(report, state)
    timings["study"] = time.perf_counter() - t0


def run_scenario(s: Scenario) -> int:
    """Run one scenario and write its artifacts; returns the exit status.

    ``report.txt`` and the CSVs depend only on the scenario and seed.
    Wall-clock timings go to ``timings.json`` so that reruns compare equal.
    """
    out = s.output
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.resolved.json").write_text(json.dumps(s.config, indent=2, sort_keys=True) + "\n")
    report = Report()
    report.section("scenario")
    report.add("mode", s.mode)
    report.add("seed", s.seed)
    timings: dict[str, float] = {}
    status = EXIT_OK
    try:
        if s.mode == "linear":
            _run_linear(s, out, report, timings)
        elif s.mode == "nonlinear":
            _run_nonlinear(s, out, report, timings)
        else:
            _run_verify(s, out, report, timings)
    except (NonConvergenceError, SolverError) as exc:
        status = EXIT_SOLVER
        report.section("failure")
        report.add("status", "failed; outputs in this directory may be partial")
        report.add("error", str(exc).replace("\n", " "))
        if isinstance(exc, SolverError) and exc.condition is not None:
            report.add("condition_number", exc.condition)
    (out / "report.txt").write_text(report.text())
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="solve", description="Stokes/Brinkman transmission solver")
    parser.add_argument("scenario", help="scenario TOML file")
    parser.add_argument("--out", help="output directory (overrides the scenario)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads for compiled kernels")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides the scenario)")
    args = parser.parse_args(argv)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ScenarioError("--threads", "must be >= 1")
            import numba

            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        scenario = parse_scenario(args.scenario, args.seed, args.out)
        return run_scenario(scenario)
    except (ScenarioError, ParameterError, MeshError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
