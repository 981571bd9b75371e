import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porous_transmission.geometry import (
    MeshError,
    load_mesh,
    make_cube,
    make_shell_grid,
    make_sphere,
    make_volume_grid,
    point_triangle_distance,
    validated_mesh,
    write_off,
)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_icosphere_counts_and_closure(level):
    m = make_sphere(1.0, level)
    assert m.n_panels == 20 * 4**level
    assert len(m.vertices) == 10 * 4**level + 2  # Euler: V - E + F = 2
    assert m.gauss_residual() < 1e-14
    np.testing.assert_allclose(np.linalg.norm(m.vertices, axis=1), 1.0, rtol=1e-14)
    # outward normals: centroids point the same way as normals
    assert np.all(np.einsum("ij,ij->i", m.panel_centroids, m.panel_normals) > 0)


def test_icosphere_area_and_volume_converge_to_sphere():
    area_err = [abs(make_sphere(1.0, L).total_area - 4 * np.pi) for L in (1, 2, 3)]
    vol_err = [abs(make_sphere(1.0, L).volume() - 4 * np.pi / 3) for L in (1, 2, 3)]
    # inscribed polyhedra: second-order convergence, ratio close to 4 per level
    for errs in (area_err, vol_err):
        assert errs[0] > errs[1] > errs[2]
        assert 3.5 < errs[1] / errs[2] < 4.5


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(1, 3))
def test_cube_area_and_volume_exact(edge, divisions):
    m = make_cube(edge, divisions)
    assert m.n_panels == 12 * divisions**2
    assert np.isclose(m.total_area, 6 * edge**2, rtol=1e-12)
    assert np.isclose(m.volume(), edge**3, rtol=1e-12)
    assert m.gauss_residual() < 1e-14


def test_off_round_trip(tmp_path, sphere1):
    path = tmp_path / "s.off"
    write_off(sphere1, path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.vertices, sphere1.vertices)
    np.testing.assert_array_equal(back.triangles, sphere1.triangles)


def test_obj_loading_and_orientation_fix(tmp_path):
    cube = make_cube(1.0, 1)
    lines = [f"v {v[0]} {v[1]} {v[2]}" for v in cube.vertices]
    # reversed winding everywhere: the loader flips it back to outward normals
    lines += [f"f {t[0] + 1} {t[2] + 1} {t[1] + 1}" for t in cube.triangles]
    path = tmp_path / "c.obj"
    path.write_text("\n".join(lines) + "\n")
    m = load_mesh(path)
    assert np.isclose(m.volume(), 1.0)


def test_open_surface_rejected():
    m = make_cube(1.0, 1)
    with pytest.raises(MeshError, match="non-closed"):
        validated_mesh(m.vertices, m.triangles[:-1])


def test_unsupported_format(tmp_path):
    p = tmp_path / "x.stl"
    p.write_text("solid")
    with pytest.raises(MeshError):
        load_mesh(p)


def test_point_triangle_distance_regions():
    a, b, c = np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    pts = np.array([[0.2, 0.2, 0.5], [2.0, 0, 0], [0.5, -1.0, 0], [-1.0, -1.0, 0.0]])
    d = point_triangle_distance(pts, a, b, c)
    np.testing.assert_allclose(d, [0.5, 1.0, 1.0, np.sqrt(2)])


def test_contains_and_distance(sphere2):
    pts = np.array([[0, 0, 0], [0.5, 0.2, -0.1], [1.5, 0, 0], [0, -3, 0.1]])
    np.testing.assert_array_equal(sphere2.contains(pts), [True, True, False, False])
    assert np.isclose(sphere2.distance(np.array([[0, 0, 2.0]]))[0], 1.0, atol=1e-12)


def test_volume_grid_inside_and_volume(sphere2):
    g = make_volume_grid(sphere2, 0.1)
    assert np.all(sphere2.contains(g.centers))
    assert abs(g.total_volume() - sphere2.volume()) / sphere2.volume() < 0.1
    with pytest.raises(ValueError):
        make_volume_grid(sphere2, -1.0)


def test_shell_grid_outside(sphere1):
    g = make_shell_grid(sphere1, 0.2, 1.6, 1.0)
    r = np.linalg.norm(g.centers, axis=1)
    assert np.all(r <= 1.6) and np.all(r >= 1.0)
    assert not np.any(sphere1.contains(g.centers))
    assert g.region == "exterior" and g.outer_radius == 1.6
