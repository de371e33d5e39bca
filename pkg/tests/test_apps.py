import math

import numpy as np
import pytest

from balayage import apps
from balayage.charge import atom
from balayage.greens import Potential
from balayage.grid import build_circle, build_sphere_latlong


@pytest.fixture(scope="module")
def sphere():
    return build_sphere_latlong(48, 64)


def test_components():
    m = build_circle(20)
    mask = np.zeros(20, bool)
    mask[[1, 2, 3, 10, 11]] = True
    assert apps.components(m, mask) == 2
    mask[[0, 19]] = True
    assert apps.components(m, mask) == 2
    assert apps.components(m, np.zeros(20, bool)) == 0


def test_circle_harmonic_ball_is_interval():
    m = build_circle(400)
    rep = apps.harmonic_ball(m, 0.5, 0.3)
    assert rep.measured_volume == pytest.approx(0.3, rel=1e-6)
    assert rep.measured_geodesic_radius == pytest.approx(0.15, rel=1e-6)
    assert apps.components(m, rep.region_mask) == 1


def test_sphere_harmonic_ball_radius(sphere):
    r = 1.0
    t = apps.geodesic_ball_volume(sphere, r)
    rep = apps.harmonic_ball(sphere, (math.pi / 2, math.pi), t)
    assert rep.measured_volume == pytest.approx(t, rel=1e-3)


def test_harmonic_ball_mass_range(sphere):
    with pytest.raises(ValueError):
        apps.harmonic_ball(sphere, (1.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        apps.harmonic_ball(sphere, (1.0, 1.0), 5 * math.pi)


def test_ball_equivalence_on_sphere(sphere):
    rep = apps.ball_equivalence_check(sphere, (math.pi / 2, math.pi), math.pi / 3)
    assert rep.passed
    # pi sin^2 r against the true cap area 2 pi (1 - cos r)
    assert rep.relation_residual == pytest.approx(math.pi * 0.75 - math.pi, rel=1e-12)


def test_curvature_relation_values():
    assert apps.curvature_ball_relation(0.0, 2.0) == pytest.approx(4 * math.pi)
    assert apps.curvature_ball_relation(1.0, math.pi / 2) == pytest.approx(math.pi)
    assert apps.curvature_ball_relation(-1.0, 1.0) == pytest.approx(math.pi * math.sinh(1.0) ** 2)


def test_geodesic_ball_limits(sphere):
    with pytest.raises(ValueError):
        apps.geodesic_ball(sphere, (1.0, 1.0), 4.0)
    assert apps.geodesic_ball_volume(build_circle(10), 0.2) == pytest.approx(0.4)


def test_growth_nested_and_matches_incremental():
    m = build_sphere_latlong(24, 32)
    a = (math.pi / 2, 0.0)
    ts = [0.5, 1.0, 2.0, 3.0]
    trace = apps.laplacian_growth(m, a, None, ts)
    for small, big in zip(trace.masks, trace.masks[1:]):
        assert not (small & ~big).any()
    assert np.allclose(trace.volumes, ts, rtol=1e-3)
    inc = apps.incremental_growth(m, a, None, ts)
    for x, y in zip(trace.masks, inc):
        assert apps.regions_agree(m, x, y)[0]


def test_growth_schedule_validated(sphere):
    with pytest.raises(ValueError):
        apps.laplacian_growth(sphere, (1.0, 1.0), None, [1.0, 0.5])
    with pytest.raises(ValueError):
        apps.laplacian_growth(sphere, (1.0, 1.0), None, [20.0])


def test_equilibrium_of_zero_field_is_uniform():
    m = build_sphere_latlong(16, 24)
    rep = apps.weighted_equilibrium(m, Potential(np.zeros(m.n_nodes), m), 0.3)
    assert np.allclose(rep.mu.masses, 0.3 * m.volume_weights, rtol=1e-8)
    assert rep.max_support_deviation < 1e-8
    with pytest.raises(ValueError):
        apps.weighted_equilibrium(m, Potential(np.zeros(m.n_nodes), m), 0.0)


def test_equilibrium_two_point_field_robin():
    m = build_sphere_latlong(32, 32)
    Q = apps.two_point_field(m, (math.pi / 2, 0.0))
    rep = apps.weighted_equilibrium(m, Q, 0.2)
    assert rep.mu.total == pytest.approx(0.2 * m.total_volume, rel=1e-9)
    assert rep.min_slack > -1e-6
    assert rep.max_support_deviation < 1e-6


def test_quadrature_on_harmonic_ball():
    m = build_circle(200)
    rep = apps.harmonic_ball(m, 0.5, 0.3)
    fill = np.clip(rep.result.nu.masses / m.volume_weights, 0, 1)
    q = apps.quadrature_verify(m, fill, atom(m, 0.5, 0.3), [0.0, 0.1, 0.2])
    assert q.passed
    assert abs(q.mass_gap) < 1e-10
    with pytest.raises(ValueError):
        apps.quadrature_verify(m, fill, atom(m, 0.5, 0.3), [0.5])
