import math

import numpy as np
import pytest

from balayage.charge import atom, from_density, zero
from balayage.greens import (energy, green_kernel_sphere, green_potential, mutual_energy,
                             solve_poisson, sphere_to_complex)
from balayage.grid import build_circle, build_polar_sphere, build_radial_ball, build_sphere_latlong


def test_pole_potential_on_s2(polar512):
    m = polar512
    g = green_potential(m, atom(m, 0.0)).values
    th = m.node_coords
    exact = -(np.log(np.sin(th / 2) ** 2) + 1) / (4 * math.pi)
    far = th > 0.3
    assert np.abs(g[far] - exact[far]).max() < 5e-3


def test_pole_potential_on_s3():
    m = build_polar_sphere(512, 3)
    g = green_potential(m, atom(m, 0.0)).values
    th = m.node_coords
    # -Delta G = delta - 1/(2 pi^2) with zero mean on the unit 3-sphere
    exact = ((math.pi - th) / np.tan(th) - 0.5) / (4 * math.pi ** 2)
    far = (th > 0.3) & (th < math.pi - 0.05)
    assert np.abs(g[far] - exact[far]).max() < 5e-3


def test_zero_mean_and_equation(sphere_small):
    m = sphere_small
    w = atom(m, (1.0, 2.0)) - atom(m, (2.0, 0.5), 0.5)
    g = green_potential(m, w).values
    assert abs(m.volume_weights @ g) < 1e-10
    rhs = w.masses - w.total / m.total_volume * m.volume_weights
    assert np.abs(m.stiffness @ g - rhs).sum() < 1e-9 * np.abs(w.masses).sum()


def test_constant_charge_has_zero_potential(circle64):
    g = green_potential(circle64, from_density(circle64, 3.0)).values
    assert np.abs(g).max() < 1e-12


def test_dirichlet_potential_vanishes_on_boundary():
    m = build_radial_ball(2, 2.0, 400, "dirichlet")
    g = green_potential(m, from_density(m, 1.0)).values
    # -Delta g = 1 on the disk of radius 2: g = (4 - r^2)/4
    r = m.node_coords
    assert np.abs(g - (4 - r ** 2) / 4).max() < 2e-2


def test_mutual_energy_symmetric_and_energy_positive():
    m = build_sphere_latlong(12, 16)
    a = atom(m, (0.5, 0.0)) - atom(m, (2.0, 1.0))
    b = atom(m, (1.5, 3.0)) - from_density(m, 1 / m.total_volume)
    assert mutual_energy(m, a, b) == pytest.approx(mutual_energy(m, b, a), rel=1e-9)
    assert energy(m, a) > 0
    assert energy(m, zero(m)) == 0


def test_poisson_rejects_nothing_on_zero_rhs(circle64):
    assert not solve_poisson(circle64, np.zeros(circle64.n_nodes)).any()


def test_kernel_matches_chordal_formula():
    for (t1, p1), (t2, p2) in [((0.4, 0.1), (2.0, 1.3)), ((1.0, 0.0), (1.0, math.pi)), ((0.0, 0.0), (1.2, 2.0))]:
        x = np.array([math.sin(t1) * math.cos(p1), math.sin(t1) * math.sin(p1), math.cos(t1)])
        y = np.array([math.sin(t2) * math.cos(p2), math.sin(t2) * math.sin(p2), math.cos(t2)])
        d = math.acos(np.clip(x @ y, -1, 1))
        exact = -(math.log(math.sin(d / 2) ** 2) + 1) / (4 * math.pi)
        k = green_kernel_sphere(sphere_to_complex(t1, p1), sphere_to_complex(t2, p2))
        assert k == pytest.approx(exact, rel=1e-12)


def test_kernel_symmetric_and_singular():
    a, b = 0.3 + 0.2j, -1.5 + 0.7j
    assert green_kernel_sphere(a, b) == green_kernel_sphere(b, a)
    assert green_kernel_sphere(None, a) == green_kernel_sphere(a, complex(math.inf, 0))
    with pytest.raises(ValueError):
        green_kernel_sphere(a, a)
    with pytest.raises(ValueError):
        green_kernel_sphere(None, None)


def test_kernel_antipodal_value():
    # antipodes: sin^2 = 1, so the kernel is -1/(4 pi)
    assert green_kernel_sphere(0j, None) == pytest.approx(-1 / (4 * math.pi))
