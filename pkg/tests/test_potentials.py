import numpy as np
import pytest

from porous_transmission import kernels as kn
from porous_transmission import potentials as pt
from porous_transmission.geometry import make_volume_grid

INSIDE = np.array([[0.1, -0.2, 0.15], [-0.3, 0.1, 0.0]])
OUTSIDE = np.array([[1.8, 0.3, -0.2], [0.0, -2.5, 1.0]])


def test_stokes_double_layer_of_constant_density(sphere1):
    c = np.array([0.3, -1.0, 0.5])
    dens = np.tile(c, (sphere1.n_panels, 1))
    inside = pt.double_layer_eval(sphere1, dens, 0.0, INSIDE)
    outside = pt.double_layer_eval(sphere1, dens, 0.0, OUTSIDE)
    np.testing.assert_allclose(inside.u, -np.tile(c, (2, 1)), atol=2e-6)
    np.testing.assert_allclose(outside.u, 0.0, atol=2e-6)


def test_single_layer_of_normal_field(sphere1):
    n = sphere1.panel_normals
    inside = pt.single_layer_eval(sphere1, n, 0.0, INSIDE)
    outside = pt.single_layer_eval(sphere1, n, 0.0, OUTSIDE)
    np.testing.assert_allclose(inside.u, 0.0, atol=2e-6)
    np.testing.assert_allclose(outside.u, 0.0, atol=2e-6)
    np.testing.assert_allclose(inside.pi, -1.0, atol=2e-6)
    np.testing.assert_allclose(outside.pi, 0.0, atol=2e-6)


def test_collocated_double_layer_of_constant_is_half(sphere1):
    K = pt.assemble_boundary_operator(sphere1, 0.0, "K").matrix
    c = np.tile([1.0, 2.0, -0.5], sphere1.n_panels)
    np.testing.assert_allclose(K @ c, -0.5 * c, atol=1e-5)


def test_stokes_hypersingular_annihilates_rigid_motions(sphere2):
    D = pt.assemble_boundary_operator(sphere2, 0.0, "D").matrix
    c = sphere2.panel_centroids
    scale = np.linalg.norm(D, 2)
    for motion in (np.tile([1.0, 0.0, 0.0], (len(c), 1)), np.cross([0.2, -0.4, 1.0], c)):
        res = D @ motion.ravel()
        assert np.linalg.norm(res) <= 0.05 * scale * np.linalg.norm(motion.ravel())


def test_layer_gradient_matches_differences(sphere1, rng):
    g = rng.normal(size=(sphere1.n_panels, 3))
    x = np.array([[0.2, 0.1, -0.3]])
    s = pt.single_layer_eval(sphere1, g, 1.0, x, gradient=True)
    h = 1e-5
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        fd = (pt.single_layer_eval(sphere1, g, 1.0, x + e).u - pt.single_layer_eval(sphere1, g, 1.0, x - e).u) / (2 * h)
        np.testing.assert_allclose(s.grad_u[0, :, m], fd[0], rtol=1e-6, atol=1e-8)


def test_off_surface_traction_matches_gradient(sphere1, rng):
    h = rng.normal(size=(sphere1.n_panels, 3))
    x = np.array([[0.3, -0.1, 0.2], [1.5, 0.2, 0.1]])
    n = np.array([[0.0, 0.0, 1.0], [0.6, 0.8, 0.0]])
    s = pt.double_layer_eval(sphere1, h, 0.5, x, gradient=True)
    np.testing.assert_allclose(pt.layer_traction(sphere1, "double", 0.5, h, x, n), s.traction(n), rtol=1e-10)


def test_point_force_field_matches_kernel():
    pole, f = np.array([0.1, 0.2, 0.3]), np.array([1.0, -2.0, 0.5])
    x = np.array([[1.0, 0.0, 0.0]])
    s = pt.point_force_field(2.0, pole, f, x)
    np.testing.assert_allclose(s.u[0], kn.brinkman_tensors(x[0] - pole, 2.0).g @ f, rtol=1e-14)


def test_newtonian_far_field_is_total_force(sphere1):
    grid = make_volume_grid(sphere1, 0.2)
    f = np.tile([0.0, 0.0, 1.0], (grid.n_cells, 1))
    x = np.array([[30.0, 10.0, -20.0]])
    got = pt.newtonian_eval(grid, f, 0.0, x).u[0]
    total = grid.cell_volume * f.sum(axis=0)
    ref = -kn.stokes_tensors(x[0] - grid.centers.mean(axis=0)).g @ total
    np.testing.assert_allclose(got, ref, rtol=1e-3)


def test_newtonian_linear_in_force(sphere1, rng):
    grid = make_volume_grid(sphere1, 0.25)
    f1, f2 = rng.normal(size=(2, grid.n_cells, 3))
    x = np.array([[0.1, 0.0, 0.2], [2.0, 0.0, 0.0]])
    a = pt.newtonian_eval(grid, f1 + 3 * f2, 1.0, x, True)
    b = pt.newtonian_eval(grid, f1, 1.0, x, True) + pt.newtonian_eval(grid, f2, 1.0, x, True).scaled(3.0)
    np.testing.assert_allclose(a.u, b.u, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.grad_u, b.grad_u, rtol=1e-12, atol=1e-14)


def test_operator_dump_round_trip(tmp_path, sphere1):
    block = pt.assemble_boundary_operator(sphere1, 1.0, "V")
    path = tmp_path / "v.bin"
    pt.dump_operator(block, path)
    assert path.stat().st_size == 40 + 8 * (3 * sphere1.n_panels) ** 2
    back = pt.load_operator(path)
    np.testing.assert_array_equal(back.matrix, block.matrix)
    assert back.alpha == 1.0 and back.which == "V"


def test_unknown_operator_rejected(sphere1):
    with pytest.raises(ValueError):
        pt.assemble_boundary_operator(sphere1, 1.0, "Q")
    with pytest.raises(ValueError):
        pt.single_layer_eval(sphere1, np.zeros((3, 3)), 1.0, INSIDE)
