import math

import numpy as np
import pytest

from balayage.charge import (ChargeDistribution, atom, from_density, jordan, normalized_mass,
                             volume_form, zero)
from balayage.grid import build_circle, build_sphere_latlong


def test_atom_conserves_weight(sphere_small):
    a = atom(sphere_small, (0.0, 0.0), 2.5)
    assert a.total == 2.5
    assert a.masses[0] == 2.5


def test_density_linearity(circle64):
    f = lambda x: np.sin(2 * math.pi * x)
    g = lambda x: x ** 2
    lhs = from_density(circle64, lambda x: f(x) + g(x))
    rhs = from_density(circle64, f) + from_density(circle64, g)
    assert np.array_equal(lhs.masses, rhs.masses)


def test_constant_density_total(sphere_small):
    assert from_density(sphere_small, -0.3).total == pytest.approx(-0.3 * sphere_small.total_volume)


def test_normalized_mass_two_atoms():
    m = build_sphere_latlong(16, 16)
    s = atom(m, (0.0, 0.0)) - atom(m, (math.pi, 0.0), 2.0)
    assert normalized_mass(s) == pytest.approx(-1 / (4 * math.pi), rel=1e-3)


def test_jordan(circle64):
    s = atom(circle64, 0.1, 1.0) - atom(circle64, 0.6, 2.0)
    plus, minus = jordan(s)
    assert plus.total == 1.0 and minus.total == 2.0
    assert (np.minimum(plus.masses, minus.masses) == 0).all()
    assert np.array_equal((plus - minus).masses, s.masses)


def test_nonnegative_has_no_minus(circle64):
    _, minus = jordan(volume_form(circle64))
    assert minus.total == 0


def test_manifold_mismatch():
    with pytest.raises(ValueError):
        zero(build_circle(8)) + zero(build_circle(8))


def test_shape_checked(circle64):
    with pytest.raises(ValueError):
        ChargeDistribution(np.zeros(3), circle64)
