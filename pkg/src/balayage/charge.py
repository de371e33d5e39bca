"""Signed charge distributions stored as nodal masses."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .grid import DiscreteManifold


@dataclass(frozen=True, eq=False)
class ChargeDistribution:
    masses: np.ndarray
    manifold: DiscreteManifold

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.manifold.n_nodes,):
            raise ValueError(
                f"mass vector has shape {m.shape}, manifold has {self.manifold.n_nodes} nodes")
        object.__setattr__(self, "masses", m)

    @property
    def manifold_id(self) -> int:
        return self.manifold.uid

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def _other(self, other) -> np.ndarray:
        if isinstance(other, ChargeDistribution):
            if other.manifold is not self.manifold:
                raise ValueError("charges live on different manifolds")
            return other.masses
        return np.asarray(other, dtype=float)

    def __add__(self, other) -> "ChargeDistribution":
        return ChargeDistribution(self.masses + self._other(other), self.manifold)

    __radd__ = __add__

    def __sub__(self, other) -> "ChargeDistribution":
        return ChargeDistribution(self.masses - self._other(other), self.manifold)

    def __rsub__(self, other) -> "ChargeDistribution":
        return ChargeDistribution(self._other(other) - self.masses, self.manifold)

    def __neg__(self) -> "ChargeDistribution":
        return ChargeDistribution(-self.masses, self.manifold)

    def __mul__(self, s: float) -> "ChargeDistribution":
        return ChargeDistribution(float(s) * self.masses, self.manifold)

    __rmul__ = __mul__

    def restrict(self, mask: np.ndarray) -> "ChargeDistribution":
        return ChargeDistribution(np.where(mask, self.masses, 0.0), self.manifold)


def zero(m: DiscreteManifold) -> ChargeDistribution:
    return ChargeDistribution(np.zeros(m.n_nodes), m)


def volume_form(m: DiscreteManifold) -> ChargeDistribution:
    return ChargeDistribution(m.volume_weights.copy(), m)


def atom(m: DiscreteManifold, location, weight: float = 1.0) -> ChargeDistribution:
    """Point mass ``weight`` snapped to the node nearest ``location``."""
    masses = np.zeros(m.n_nodes)
    masses[m.nearest_node(location)] = weight
    return ChargeDistribution(masses, m)


def from_density(m: DiscreteManifold,
                 f: Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]) -> ChargeDistribution:
    """Masses ``f(x_i) * W_i``; ``f`` may be a constant, nodal array or callable of the coordinates."""
    if callable(f):
        vals = np.asarray(f(m.node_coords), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    vals = np.broadcast_to(vals, (m.n_nodes,))
    return ChargeDistribution(vals * m.volume_weights, m)


def normalized_mass(sigma: ChargeDistribution) -> float:
    return sigma.total / sigma.manifold.total_volume


def jordan(sigma: ChargeDistribution) -> tuple[ChargeDistribution, ChargeDistribution]:
    plus = np.maximum(sigma.masses, 0.0)
    minus = np.maximum(-sigma.masses, 0.0)
    return ChargeDistribution(plus, sigma.manifold), ChargeDistribution(minus, sigma.manifold)
