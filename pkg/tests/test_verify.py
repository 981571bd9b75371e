import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from porous_transmission import verify as vf
from porous_transmission.transmission import Grids, ProblemParams, TransmissionSolver, manufactured_problem


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(1e-3, 10.0))
def test_refinement_fit_recovers_power_law(order, const):
    h = (0.4, 0.2, 0.1, 0.05)
    study = vf.RefinementStudy("synthetic", (1, 2, 3, 4), h, tuple(const * x**order for x in h))
    assert study.fitted_order == pytest.approx(order, rel=1e-9)
    lo, hi = study.order_bounds
    assert lo == pytest.approx(order, rel=1e-6) and hi == pytest.approx(order, rel=1e-6)
    np.testing.assert_allclose(study.reductions, 2.0**order, rtol=1e-9)


def test_refinement_study_validation():
    with pytest.raises(ValueError):
        vf.RefinementStudy("two", (1, 2), (0.2, 0.1), (1e-2, 1e-3))
    with pytest.raises(ValueError):
        vf.RefinementStudy("zero", (1, 2, 3), (0.4, 0.2, 0.1), (1e-2, 0.0, 1e-3))


def test_csv_round_trip(tmp_path):
    study = vf.RefinementStudy("s", (1, 2, 3), (0.4, 0.2, 0.1), (0.1 / 3, 1e-3, 2e-5), {"residual": (1e-16, 0.0, 3e-15)})
    path = tmp_path / "s.csv"
    vf.write_csv(study.rows(), path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["error"]) for r in rows] == list(study.errors)
    assert [float(r["residual"]) for r in rows] == [1e-16, 0.0, 3e-15]
    assert "[s]" in vf.study_report([study])


def test_bump_gradient_matches_differences():
    bump = vf.BumpField.random([0.1, 0.0, -0.2], 0.8, seed=4)
    x = np.array([[0.3, 0.2, 0.1], [-0.2, 0.1, -0.5]])
    _, grad = bump.value_and_gradient(x)
    h = 1e-6
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        fd = (bump.value_and_gradient(x + e)[0] - bump.value_and_gradient(x - e)[0]) / (2 * h)
        np.testing.assert_allclose(grad[:, :, b], fd, rtol=1e-6, atol=1e-8)
    w, g = bump.value_and_gradient([[2.0, 0.0, 0.0]])
    assert not np.any(w) and not np.any(g)


def test_cone_rule_volumes(sphere2):
    _, w = vf.cone_rule(sphere2)
    assert w.sum() == pytest.approx(sphere2.volume(), rel=1e-4)
    _, w_out = vf.cone_rule(sphere2, outer_radius=2.0)
    assert w_out.sum() == pytest.approx(4 / 3 * np.pi * 8 - sphere2.volume(), rel=1e-4)
    with pytest.raises(ValueError):
        vf.cone_rule(sphere2, outer_radius=0.5)


def test_green_identity_with_zero_test_field(sphere1):
    src = vf.point_source(1.0, [0.0, 0.0, 2.0], [1.0, 0.0, 0.0])
    res = vf.run_green_identity(sphere1, 1.0, src, vf.BumpField.zero([0.0, 0.0, 0.0], 0.9))
    assert res.boundary == 0.0 and res.volume == 0.0 and res.gap == 0.0


@pytest.mark.parametrize("side", ["interior", "exterior"])
def test_green_identity_gap_is_small(sphere2, side):
    if side == "interior":
        alpha, pole, bump = 1.0, [0.0, 0.3, 1.8], vf.BumpField.random([0.1, 0.0, 0.2], 1.3, seed=2)
    else:
        alpha, pole, bump = 0.0, [0.1, -0.1, 0.2], vf.BumpField.random([0.3, 0.0, 0.0], 1.5, seed=2)
    res = vf.run_green_identity(sphere2, alpha, vf.point_source(alpha, pole, [0.4, 1.0, -0.3]), bump, side)
    assert res.gap < 1e-3


def test_representation_of_zero_field(sphere1):
    assert vf.representation_error(sphere1, 1.0, [0, 0, 2.0], [0.0, 0.0, 0.0], vf.sphere_probes(5, 0.5)) == 0.0


def test_representation_improves_with_refinement():
    study = vf.run_representation((1, 2, 3), alpha=1.0, side="interior", probes=10)
    assert study.errors[2] < study.errors[1] < study.errors[0]
    assert study.errors[2] < study.errors[0] / 3
    assert study.final_error < 1e-2


def test_jump_relations_at_coarse_level(sphere1, sphere2):
    e1 = vf.jump_errors(sphere1, 1.0, 2.0 ** -(1 + vf.JUMP_OFFSET_SHIFT))
    e2 = vf.jump_errors(sphere2, 1.0, 2.0 ** -(2 + vf.JUMP_OFFSET_SHIFT))
    assert set(e1) == set(vf.JUMP_RELATIONS)
    for key in vf.JUMP_RELATIONS:
        assert e2[key] < e1[key] < 0.5


def test_jump_suite_needs_three_levels():
    with pytest.raises(ValueError):
        vf.run_jump_suite([1, 2])


def test_decay_of_point_force_exterior(sphere1):
    # the exterior field of a manufactured solve is a Stokes point force
    params = ProblemParams(1.0, 0.5, np.eye(3))
    state = TransmissionSolver(params, sphere1, Grids()).solve(manufactured_problem(params, sphere1).data(sphere1))
    study = vf.run_decay_study(state, [4.0, 8.0, 16.0, 32.0], points=100)
    assert study.velocity_slope == pytest.approx(-1.0, abs=0.05)
    assert study.gradient_slope == pytest.approx(-2.0, abs=0.1)
    assert study.pressure_slope == pytest.approx(-2.0, abs=0.1)
    np.testing.assert_allclose(study.leray_ratios(), 0.5, atol=0.05)
    with pytest.raises(ValueError):
        vf.run_decay_study(state, [4.0, 8.0, 16.0])


def test_decay_slopes_of_synthetic_data():
    r = (2.0, 4.0, 8.0, 16.0)
    study = vf.DecayStudy(r, tuple(3 / x for x in r), tuple(x**-2 for x in r), tuple(5 * x**-2 for x in r), 10)
    assert study.velocity_slope == pytest.approx(-1.0)
    assert study.pressure_slope == pytest.approx(-2.0)
    assert len(study.rows()) == 4


def test_weighted_norm_annulus_checked(sphere1):
    params = ProblemParams(1.0, 1.0)
    state = TransmissionSolver(params, sphere1).solve(manufactured_problem(params, sphere1).data(sphere1))
    with pytest.raises(ValueError):
        vf.weighted_norms(state, 0.5, 2.0)
    with pytest.raises(ValueError):
        vf.weighted_norms(state, 3.0, 2.0)
    norms = vf.weighted_norms(state, 1.5, 3.0)
    assert norms.weighted_velocity > 0 and norms.gradient > 0 and norms.pressure > 0


def test_manufactured_probes_split():
    P, inside = vf.manufactured_probes(10)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), np.where(inside, 0.5, 2.0))
    assert inside.sum() == 5
