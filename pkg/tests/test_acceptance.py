"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""

import csv
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from porous_transmission import cli
from porous_transmission import kernels as kn
from porous_transmission import nonlinear as nl
from porous_transmission import verify as vf
from porous_transmission.geometry import make_sphere, make_volume_grid
from porous_transmission.transmission import (
    Grids,
    OperatorCache,
    ProblemParams,
    TransmissionData,
    TransmissionSolver,
)

pytestmark = pytest.mark.acceptance


def announce(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


# ---------------------------------------------------------------------------


def _pde_residual(x, alpha, h):
    t0 = kn.brinkman_tensors(x, alpha)
    lap = -6.0 * t0.g
    grad_p = np.zeros((3, 3))
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        tp, tm = kn.brinkman_tensors(x + e, alpha), kn.brinkman_tensors(x - e, alpha)
        lap += tp.g + tm.g
        grad_p[:, m] = (tp.p - tm.p) / (2 * h)
    return lap / (h * h) - alpha * t0.g - grad_p.T


def test_criterion_1_kernels(capsys):
    t0 = time.perf_counter()
    z = np.linspace(kn.Z_SERIES / 2, 2 * kn.Z_SERIES, 201)
    series = kn.eval_scalar_set(z, "series").as_tuple()
    closed = kn.eval_scalar_set(z, "closed").as_tuple()
    agreement = max(float(np.max(np.abs(s - c) / np.abs(c))) for s, c in zip(series, closed))
    limit = max(
        abs(float(v) - ref)
        for zz in (0.0, 1e-12, 1e-10)
        for v, ref in zip(kn.eval_scalar_set(zz).as_tuple(), (1.0, 1.0, 0.0, 0.0, 3.0))
    )
    d = np.array([0.7, 0.2, -0.5])
    b, st = kn.brinkman_tensors(d, 1e-20), kn.stokes_tensors(d)
    limit = max(limit, *(float(np.abs(getattr(b, k) - getattr(st, k)).max()) for k in ("g", "p", "s", "lam")))
    x = np.array([0.6, -0.3, 0.5])
    pde_ratios, div_ratios = [], []
    for alpha in (0.0, 1.0, 4.0):
        pde_ratios.append(np.abs(_pde_residual(x, alpha, 2e-2)).max() / np.abs(_pde_residual(x, alpha, 1e-2)).max())
        div_ratios.append(
            np.abs(kn.kernel_divergence_check(x, alpha, 2e-2)).max()
            / np.abs(kn.kernel_divergence_check(x, alpha, 1e-2)).max()
        )
    elapsed = time.perf_counter() - t0
    second_order = all(3.0 < r < 5.0 for r in pde_ratios + div_ratios)
    ok = agreement <= 1e-10 and limit <= 1e-8 and second_order and elapsed < 1.0
    announce(
        capsys, 1, ok,
        f"series/closed {agreement:.2e}, zero limits {limit:.2e}, PDE halving ratios "
        f"{[round(float(r), 2) for r in pde_ratios]}, divergence {[round(float(r), 2) for r in div_ratios]}, "
        f"{elapsed:.2f} s",
    )


def test_criterion_2_jump_relations(capsys):
    t0 = time.perf_counter()
    studies = vf.run_jump_suite([1, 2, 3], alpha=1.0, seed=0)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 120.0
    parts = []
    for name, s in studies.items():
        good = min(s.reductions) >= 1.5 and s.final_error <= 0.05
        ok &= good
        parts.append(f"{name} L3={s.final_error:.2e} reductions={[round(r, 1) for r in s.reductions]}")
    announce(capsys, 2, ok, "; ".join(parts) + f"; {elapsed:.0f} s")


def test_criterion_3_manufactured(capsys):
    t0 = time.perf_counter()
    params = ProblemParams(1.0, 0.5, np.eye(3))
    study, results = vf.run_manufactured_study(params, (1, 2, 3))
    elapsed = time.perf_counter() - t0
    decreasing = all(r > 1 for r in study.reductions)
    ok = study.final_error <= 0.02 and decreasing and elapsed < 300.0
    announce(
        capsys, 3, ok,
        f"errors {[f'{e:.3e}' for e in study.errors]}, order {study.fitted_order:.2f}, "
        f"max residual {max(r.residual for r in results):.1e}, {elapsed:.0f} s",
    )


def test_criterion_4_uniqueness_and_linearity(capsys):
    mesh = make_sphere(1.0, 2)
    grid = make_volume_grid(mesh, 0.3)
    grids = Grids(interior=grid)
    params = ProblemParams(1.0, 0.5, np.diag([1.0, 0.5, 0.0]))
    solver = TransmissionSolver(params, mesh, grids)
    rng = np.random.default_rng(7)
    a, b = (nl.random_data(mesh, grids, rng) for _ in range(2))
    sa, sb = solver.solve(a), solver.solve(b)
    scale = np.linalg.norm(sa.densities.as_vector())
    zero = np.linalg.norm(solver.solve(TransmissionData.zeros(mesh)).densities.as_vector())
    c = 2.75
    combo = solver.solve(a + b.scaled(c)).densities.as_vector()
    sup = np.linalg.norm(combo - sa.densities.as_vector() - c * sb.densities.as_vector()) / np.linalg.norm(combo)
    ok = zero <= 1e-10 * scale and sup <= 1e-10
    announce(capsys, 4, ok, f"homogeneous density norm {zero:.1e} (scale {scale:.2e}), superposition defect {sup:.1e}")


def test_criterion_5_decay(tmp_path, capsys):
    text = (
        'mode = "verify-decay"\n[mesh]\nlevel = 1\n[params]\nalpha = 1.0\nmu = 0.5\nu_inf = [1.0, 0.0, 0.0]\n'
        "[grid]\nexterior_h = 0.25\nexterior_inner_radius = 1.0\nexterior_outer_radius = 1.6\n"
        '[data]\nf_minus = [{type="constant", value=[0.0, 0.0, 1.0]}]\n'
    )
    path = tmp_path / "decay.toml"
    path.write_text(text)
    t0 = time.perf_counter()
    status = cli.main([str(path), "--out", str(tmp_path / "out")])
    elapsed = time.perf_counter() - t0
    rows = read_rows(tmp_path / "out" / "decay.csv")
    sv, sg, sp = (float(rows[0][k]) for k in ("velocity_slope", "gradient_slope", "pressure_slope"))
    ok = (
        status == 0 and abs(sv + 1) <= 0.1 and abs(sg + 2) <= 0.15 and abs(sp + 2) <= 0.15 and elapsed < 60.0
    )
    announce(capsys, 5, ok, f"slopes velocity {sv:.3f}, gradient {sg:.3f}, pressure {sp:.3f}, {elapsed:.1f} s")


def read_rows(path: Path) -> list[dict[str, str]]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------


def smooth_data(mesh, grid, scale: float) -> TransmissionData:
    c = mesh.panel_centroids
    x = grid.centers
    h0 = np.stack([np.sin(c[:, 0]), c[:, 1] * c[:, 2], np.ones(len(c))], axis=1)
    g0 = np.stack([c[:, 2], np.cos(c[:, 0]), c[:, 0] * c[:, 1]], axis=1)
    f = np.stack([np.exp(-np.sum(x * x, axis=1)), x[:, 0] * x[:, 1], np.ones(len(x))], axis=1)
    return TransmissionData(scale * h0, scale * g0, scale * f)


def test_criterion_6_fixed_point(capsys):
    t0 = time.perf_counter()
    mesh = make_sphere(1.0, 2)
    params = ProblemParams(1.0, 0.5, np.eye(3))
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0, max_iters=30, tol=1e-8)
    ops = OperatorCache.build(mesh, params.alpha)
    notes, ok = [], True

    grid = make_volume_grid(mesh, 0.25)
    grids = Grids(interior=grid)
    solver = TransmissionSolver(params, mesh, grids, ops)
    unit = smooth_data(mesh, grid, 1.0)

    _, lin = nl.picard_solve(params, mesh, grids, unit, nl.NonlinearConfig(), solver)
    ok &= lin.converged and lin.iterations == 1
    notes.append(f"k=beta=0 iterations {lin.iterations}")

    est = nl.smallness_report(params, mesh, grids, unit, cfg, probes=20, seed=0, solver=solver)
    scale = 1e-2 * est.zeta / nl.data_norm(unit, params, mesh, grids)
    notes.append(f"c*={est.c_star:.3g} c1={est.c1:.3g} zeta={est.zeta:.3g}")

    _, small = nl.picard_solve(params, mesh, grids, unit.scaled(scale), cfg, solver)
    contracting = small.converged and small.iterations <= 30 and all(r < 1 for r in small.ratios)
    ok &= contracting
    notes.append(f"small data: {small.iterations} iterations, ratios {[f'{r:.2g}' for r in small.ratios]}")

    residuals = []
    probes = nl.interior_probes(mesh, 20)
    for h in (0.3, 0.2, 0.14):
        g = make_volume_grid(mesh, h)
        gr = Grids(interior=g)
        s = TransmissionSolver(params, mesh, gr, ops)
        _, tr = nl.picard_solve(params, mesh, gr, smooth_data(mesh, g, scale), cfg, s, probes=probes)
        residuals.append(tr.residuals[-1])
    refining = all(b < a for a, b in zip(residuals, residuals[1:]))
    ok &= refining
    notes.append(f"residual h=0.3/0.2/0.14: {[f'{r:.2e}' for r in residuals]}")

    try:
        _, big = nl.picard_solve(params, mesh, grids, unit.scaled(100 * scale), cfg, solver)
        ok = False
        notes.append(
            f"100x data CONVERGED in {big.iterations} iterations "
            f"(max ratio {max(big.ratios):.3f}); no non-convergence error raised"
        )
    except nl.NonConvergenceError as exc:
        notes.append(f"100x data raised non-convergence after {exc.trace.iterations} iterations")

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 900.0
    announce(capsys, 6, ok, "; ".join(notes) + f"; {elapsed:.0f} s")


def test_criterion_7_nonlinearity(capsys):
    mesh = make_sphere(1.0, 2)
    grid = make_volume_grid(mesh, 0.25)
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0)
    rng = np.random.default_rng(0)
    worst_homog = 0.0
    for v in nl.random_cell_fields(grid, 10, rng):
        base = nl.nonlinear_term(v, cfg)
        for c in (0.5, 2.0, 7.0):
            diff = np.abs(nl.nonlinear_term(v.scaled(c), cfg) - c * c * base).max()
            worst_homog = max(worst_homog, diff / (c * c * np.abs(base).max()))

    def batch(seed):
        r = np.random.default_rng(seed)
        f = nl.random_cell_fields(grid, 200, r)
        pairs = []
        for i in range(100):
            v, d = f[i].scaled(10 ** r.uniform(-3, 3)), f[100 + i]
            if i % 2:
                # nearby pairs probe the local Lipschitz quotient
                w = v + d.scaled(nl.h1_norm(v, grid) / nl.h1_norm(d, grid) * 10 ** r.uniform(-4, 0))
            else:
                w = d.scaled(10 ** r.uniform(-3, 3))
            pairs.append((v, w))
        return nl.lipschitz_ratios(pairs, grid, cfg)

    fitted = 1.5 * batch(1).max()
    fresh = batch(2)
    ok = worst_homog <= 8 * np.finfo(float).eps and np.all(fresh <= fitted)
    announce(
        capsys, 7, ok,
        f"homogeneity defect {worst_homog:.1e} (relative); fitted c1 {fitted:.3f}, "
        f"largest ratio over 100 fresh pairs {fresh.max():.3f}",
    )


def test_criterion_8_determinism(tmp_path, capsys):
    scenarios = {
        "linear.toml": (
            "seed = 17\n[mesh]\nlevel = 1\n[params]\nalpha = 1.0\nmu = 0.5\np = 1.0\n[data]\nmanufactured = true\n"
        ),
        "nonlinear.toml": (
            'mode = "nonlinear"\nseed = 17\n[mesh]\nlevel = 1\n[params]\nmu = 0.5\n[grid]\ninterior_h = 0.3\n'
            "[nonlinear]\nk = 1.0\nbeta = 1.0\nsmallness_probes = 3\n"
            '[data]\nf_plus = [{type="gaussian", amplitude=[0.05, 0.0, 0.02], center=[0, 0, 0], width=0.5}]\n'
        ),
    }
    mismatched, compared = [], 0
    for name, text in scenarios.items():
        path = tmp_path / name
        path.write_text(text)
        out = tmp_path / "out"
        runs = []
        for k in range(2):
            assert cli.main([str(path), "--out", str(out)]) == 0
            kept = tmp_path / f"{name}.{k}"
            shutil.move(str(out), kept)
            runs.append(kept)
        files = sorted(p.name for p in runs[0].iterdir() if p.name != "timings.json")
        assert files == sorted(p.name for p in runs[1].iterdir() if p.name != "timings.json")
        for f in files:
            compared += 1
            if (runs[0] / f).read_bytes() != (runs[1] / f).read_bytes():
                mismatched.append(f"{name}:{f}")
    ok = not mismatched
    announce(capsys, 8, ok, f"{compared} files compared byte-for-byte, mismatches {mismatched or 'none'}")
