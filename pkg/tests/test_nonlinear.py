import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from porous_transmission import nonlinear as nl
from porous_transmission.geometry import make_volume_grid
from porous_transmission.transmission import Grids, ProblemParams, TransmissionData, TransmissionSolver


@pytest.fixture(scope="module")
def setup(sphere1):
    grid = make_volume_grid(sphere1, 0.3)
    grids = Grids(interior=grid)
    params = ProblemParams(1.0, 0.5, np.eye(3))
    solver = TransmissionSolver(params, sphere1, grids)
    rng = np.random.default_rng(3)
    data = nl.random_data(sphere1, grids, rng).scaled(0.02)
    return params, sphere1, grids, solver, data


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=float("inf")), dict(beta=float("nan")), dict(max_iters=0), dict(max_iters=2.5), dict(tol=0.0), dict(relaxation=0.0), dict(relaxation=1.5)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        nl.NonlinearConfig(**kwargs)


def test_nonlinearity_of_zero_is_zero():
    v = nl.CellField.zeros(7)
    assert not np.any(nl.nonlinear_term(v, nl.NonlinearConfig(k=3.0, beta=-2.0)))


def test_nonlinearity_on_constant_field():
    v = nl.CellField(np.tile([1.0, 0.0, 0.0], (4, 1)), np.zeros((4, 3, 3)))
    out = nl.nonlinear_term(v, nl.NonlinearConfig(k=2.0, beta=5.0))
    np.testing.assert_allclose(out, np.tile([2.0, 0.0, 0.0], (4, 1)))


def test_convective_term_on_linear_field():
    # v = A x has (v . grad) v = A A x
    A = np.array([[0.0, 1.0, 0.0], [-1.0, 0.5, 0.0], [0.2, 0.0, 0.3]])
    x = np.random.default_rng(0).normal(size=(5, 3))
    v = nl.CellField(x @ A.T, np.broadcast_to(A, (5, 3, 3)).copy())
    out = nl.nonlinear_term(v, nl.NonlinearConfig(beta=1.0))
    np.testing.assert_allclose(out, x @ (A @ A).T, rtol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.5, 2.0, 7.0]), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
def test_nonlinearity_is_quadratically_homogeneous(c, k, beta, seed):
    rng = np.random.default_rng(seed)
    v = nl.CellField(rng.normal(size=(6, 3)), rng.normal(size=(6, 3, 3)))
    cfg = nl.NonlinearConfig(k=k, beta=beta)
    np.testing.assert_allclose(nl.nonlinear_term(v.scaled(c), cfg), c**2 * nl.nonlinear_term(v, cfg), rtol=1e-12, atol=1e-12)


def test_lipschitz_ratio_bounded(sphere1):
    grid = make_volume_grid(sphere1, 0.3)
    rng = np.random.default_rng(1)
    fields = nl.random_cell_fields(grid, 20, rng)
    pairs = list(zip(fields[::2], fields[1::2]))
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0)
    ratios = nl.lipschitz_ratios(pairs, grid, cfg)
    assert np.all(np.isfinite(ratios)) and np.all(ratios > 0)
    # scaling both fields by c scales the ratio by 1
    scaled = nl.lipschitz_ratios([(v.scaled(3.0), w.scaled(3.0)) for v, w in pairs], grid, cfg)
    np.testing.assert_allclose(scaled, ratios, rtol=1e-10)


def test_random_fields_have_consistent_gradients(sphere1):
    grid = make_volume_grid(sphere1, 0.3)
    rng = np.random.default_rng(2)
    (v,) = nl.random_cell_fields(grid, 1, rng)
    # neighbouring cells along x give a centred difference
    c = grid.centers
    i, j = np.nonzero(np.all(np.isclose(c[:, None, :] - c[None, :, :], [grid.h, 0.0, 0.0]), axis=2))
    fd = (v.u[i] - v.u[j]) / grid.h
    mid = 0.5 * (v.grad[i, :, 0] + v.grad[j, :, 0])
    np.testing.assert_allclose(fd, mid, atol=0.05 * np.abs(mid).max())


def test_linear_config_converges_in_one_step(setup):
    params, mesh, grids, solver, data = setup
    state, trace = nl.picard_solve(params, mesh, grids, data, nl.NonlinearConfig(), solver)
    assert trace.converged and trace.iterations == 1 and trace.ratios == []
    ref = solver.solve(data)
    np.testing.assert_array_equal(state.densities.as_vector(), ref.densities.as_vector())


def test_small_data_converges_to_fixed_point(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0, tol=1e-10)
    state, trace = nl.picard_solve(params, mesh, grids, data, cfg, solver)
    assert trace.converged
    assert all(r < 1 for r in trace.ratios)
    v = nl.sample_interior(state, grids.interior)
    again = solver.solve(TransmissionData(data.h0, data.g0, data.f_plus + nl.nonlinear_term(v, cfg)))
    w = nl.sample_interior(again, grids.interior)
    assert nl.h1_norm(w - v, grids.interior) <= 1e-8 * nl.h1_norm(v, grids.interior)


def test_fixed_point_independent_of_initial_guess(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=-1.0, tol=1e-11)
    s0, _ = nl.picard_solve(params, mesh, grids, data, cfg, solver)
    start = nl.sample_interior(solver.solve(data), grids.interior)
    s1, _ = nl.picard_solve(params, mesh, grids, data, cfg, solver, initial=start)
    a, b = (nl.sample_interior(s, grids.interior) for s in (s0, s1))
    assert nl.h1_norm(a - b, grids.interior) <= 1e-8 * nl.h1_norm(a, grids.interior)


def test_solution_depends_continuously_on_data(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0, tol=1e-11)
    rng = np.random.default_rng(4)
    direction = nl.random_data(mesh, grids, rng).scaled(0.02)
    base = nl.sample_interior(nl.picard_solve(params, mesh, grids, data, cfg, solver)[0], grids.interior)
    diffs = []
    for eps in (1e-2, 1e-3):
        moved = nl.picard_solve(params, mesh, grids, data + direction.scaled(eps), cfg, solver)[0]
        diffs.append(nl.h1_norm(nl.sample_interior(moved, grids.interior) - base, grids.interior))
    assert 8 < diffs[0] / diffs[1] < 12


def test_large_data_raises_with_trace(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0, max_iters=30)
    with pytest.raises(nl.NonConvergenceError) as info:
        nl.picard_solve(params, mesh, grids, data.scaled(1e5), cfg, solver)
    assert not info.value.trace.converged


def test_residual_recorded_per_iteration(setup):
    params, mesh, grids, solver, data = setup
    probes = nl.interior_probes(mesh, 5)
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0)
    _, trace = nl.picard_solve(params, mesh, grids, data, cfg, solver, probes=probes)
    assert len(trace.residuals) == trace.iterations
    rows = trace.rows()
    assert np.isnan(rows[0]["ratio"]) and rows[-1]["iteration"] == trace.iterations


def test_smallness_constants_scale_with_coefficients(setup):
    params, mesh, grids, solver, data = setup
    a = nl.smallness_report(params, mesh, grids, data, nl.NonlinearConfig(k=1.0, beta=1.0), probes=4, solver=solver)
    b = nl.smallness_report(params, mesh, grids, data, nl.NonlinearConfig(k=2.0, beta=2.0), probes=4, solver=solver)
    assert a.c_star == b.c_star
    np.testing.assert_allclose(b.c1, 2 * a.c1, rtol=1e-12)
    np.testing.assert_allclose(b.zeta, a.zeta / 2, rtol=1e-12)
    np.testing.assert_allclose(a.zeta, 3 / (16 * a.c1 * a.c_star**2), rtol=1e-12)
    lin = nl.smallness_report(params, mesh, grids, data, nl.NonlinearConfig(), probes=2, solver=solver)
    assert lin.zeta == float("inf")


def test_zero_data_norm(setup):
    params, mesh, grids, _, _ = setup
    assert nl.data_norm(TransmissionData.zeros(mesh), params, mesh, grids) == 0.0


def test_smallness_ratio_is_linear_in_data(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0)
    a = nl.smallness_report(params, mesh, grids, data, cfg, probes=3, solver=solver)
    b = nl.smallness_report(params, mesh, grids, data.scaled(2.0), cfg, probes=3, solver=solver)
    np.testing.assert_allclose(b.data_ratio, 2 * a.data_ratio, rtol=1e-12)


def test_converged_norm_within_eta(setup):
    params, mesh, grids, solver, data = setup
    cfg = nl.NonlinearConfig(k=1.0, beta=1.0)
    rep = nl.smallness_report(params, mesh, grids, data, cfg, probes=10, solver=solver)
    assert rep.data_ratio < 1
    _, trace = nl.picard_solve(params, mesh, grids, data, cfg, solver)
    assert trace.solution_norms[-1] <= rep.eta


def test_divergence_threshold_scales_with_coefficients(setup):
    # doubling (k, beta) and halving the data halves every iterate exactly,
    # so the contraction history and hence the failure threshold move with c1
    params, mesh, grids, solver, data = setup
    big = data.scaled(50.0)
    _, a = nl.picard_solve(params, mesh, grids, big, nl.NonlinearConfig(k=1.0, beta=1.0), solver)
    _, b = nl.picard_solve(params, mesh, grids, big.scaled(0.5), nl.NonlinearConfig(k=2.0, beta=2.0), solver)
    assert a.iterations == b.iterations
    np.testing.assert_allclose(b.ratios, a.ratios, rtol=1e-6)
    np.testing.assert_allclose(b.solution_norms, 0.5 * np.array(a.solution_norms), rtol=1e-9)
