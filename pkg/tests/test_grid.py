import math

import numpy as np
import pytest

from balayage.grid import (Boundary, Kind, build_circle, build_polar_sphere, build_radial_ball,
                           build_sphere_latlong, build_symmetric_profile, sphere_area)


def _symmetric(K):
    return abs(K - K.T).max() < 1e-12


@pytest.mark.parametrize("m", [build_circle(17), build_sphere_latlong(8, 12), build_polar_sphere(40, 2),
                               build_polar_sphere(40, 3), build_radial_ball(3, 2.0, 30, "neumann")])
def test_closed_stiffness_kills_constants(m):
    K = m.stiffness
    assert _symmetric(K)
    assert np.abs(K @ np.ones(m.n_nodes)).max() < 1e-9 * abs(K).max()
    assert (K.diagonal() >= 0).all()
    off = K - np.diag(K.diagonal())
    assert off.max() <= 0


def test_dirichlet_stiffness_is_definite():
    m = build_radial_ball(2, 3.0, 50, "dirichlet")
    eig = np.linalg.eigvalsh(m.stiffness.toarray())
    assert eig.min() > 0
    assert list(m.boundary_nodes) == [49]
    assert not m.is_closed


def test_sphere_volume():
    m = build_sphere_latlong(64, 64)
    assert abs(m.total_volume - 4 * math.pi) / (4 * math.pi) < 1e-3
    assert m.meta["north"] == 0 and m.meta["south"] == m.n_nodes - 1


def test_profile_volumes():
    s2 = build_symmetric_profile(np.sin, (0.0, math.pi), 2 * math.pi, 512)
    assert abs(s2.total_volume - 4 * math.pi) < 1e-2
    s3 = build_symmetric_profile(lambda x: np.sin(x) ** 2, (0.0, math.pi), 4 * math.pi, 512)
    assert abs(s3.total_volume - 2 * math.pi ** 2) < 1e-1


def test_circle_layout():
    m = build_circle(10)
    assert m.total_volume == pytest.approx(1.0)
    assert m.spacing == pytest.approx(0.1)
    assert m.kind is Kind.CIRCLE


def test_sphere_area_values():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_laplacian_of_quadratic_on_circle():
    m = build_circle(200)
    f = np.cos(2 * math.pi * m.node_coords)
    lap = m.laplacian_density(f)
    assert np.abs(lap + 4 * math.pi ** 2 * f).max() < 1e-2 * 4 * math.pi ** 2


def test_nearest_node_ties_take_lowest_index():
    m = build_circle(4)
    # 0.125 is equidistant from nodes 0 and 1
    assert m.nearest_node(0.125) == 0


def test_locations_outside_chart():
    with pytest.raises(ValueError):
        build_circle(8).nearest_node(1.5)
    with pytest.raises(ValueError):
        build_sphere_latlong(8, 8).nearest_node((4.0, 0.0))
    with pytest.raises(ValueError):
        build_polar_sphere(8).nearest_node(-0.1)


def test_closed_profile_needs_vanishing_weight():
    with pytest.raises(ValueError):
        build_symmetric_profile(lambda r: 1 + 0 * r, (0.0, 1.0), 1.0, 10, Boundary.CLOSED)


def test_bad_sizes():
    with pytest.raises(ValueError):
        build_circle(2)
    with pytest.raises(ValueError):
        build_sphere_latlong(3, 8)


def test_csv_dump(tmp_path):
    m = build_sphere_latlong(4, 4)
    m.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "node,theta,phi,W"
    assert len(lines) == m.n_nodes + 1
