"""Green potentials, mutual energies and the closed-form sphere kernel."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .charge import ChargeDistribution, normalized_mass
from .grid import DiscreteManifold

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """An iterative solve hit its iteration cap."""


@dataclass(frozen=True, eq=False)
class Potential:
    values: np.ndarray
    manifold: DiscreteManifold

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.manifold.n_nodes,):
            raise ValueError("potential length does not match the node count")
        object.__setattr__(self, "values", v)

    @property
    def manifold_id(self) -> int:
        return self.manifold.uid

    def volume_average(self) -> float:
        W = self.manifold.volume_weights
        return float(W @ self.values / W.sum())

    def __add__(self, other):
        o = other.values if isinstance(other, Potential) else other
        return Potential(self.values + o, self.manifold)

    def __sub__(self, other):
        o = other.values if isinstance(other, Potential) else other
        return Potential(self.values - o, self.manifold)

    def __neg__(self):
        return Potential(-self.values, self.manifold)

    def __mul__(self, s):
        return Potential(float(s) * self.values, self.manifold)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        m = self.manifold
        coords = m.node_coords.reshape(m.n_nodes, -1)
        with open(path, "w") as fh:
            fh.write("node," + ",".join(f"c{k}" for k in range(coords.shape[1])) + ",value\n")
            for i in range(m.n_nodes):
                cs = ",".join(f"{c:.17g}" for c in coords[i])
                fh.write(f"{i},{cs},{self.values[i]:.17g}\n")


def _preconditioner(m: DiscreteManifold) -> spla.LinearOperator:
    """Factorization of K plus a tiny mass shift; cached on the manifold."""
    cached = m.meta.get("_precond")
    if cached is not None:
        return cached
    K = m.stiffness
    # Dirichlet K is already definite; closed K needs a shift off its kernel
    shift = 1e-8 * float(K.diagonal().mean()) / float(m.volume_weights.mean()) if m.is_closed else 0.0
    lu = spla.splu((K + shift * sp.diags(m.volume_weights)).tocsc())
    op = spla.LinearOperator(K.shape, matvec=lu.solve)
    m.meta["_precond"] = op
    return op


def _cg(m: DiscreteManifold, b: np.ndarray, atol: float, maxiter: int):
    M = _preconditioner(m)
    return spla.cg(m.stiffness, b, x0=M @ b, rtol=0.0, atol=atol, maxiter=maxiter, M=M)


def _residual_bound(m: DiscreteManifold, x: np.ndarray, scale: float) -> float:
    """Relative tolerance plus the rounding floor of evaluating K x itself."""
    floor = 64 * np.finfo(float).eps * float(np.linalg.norm(abs(m.stiffness) @ np.abs(x)))
    return RESIDUAL_TOL * scale + floor


def solve_poisson(m: DiscreteManifold, rhs: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Solve ``K g = rhs``.  On closed/Neumann manifolds ``rhs`` must sum to zero
    and the result is normalized to zero volume average.

    ``scale`` sets the residual target (default ``||rhs||_1``); right-hand
    sides far below it are rounding noise and give ``g = 0``.
    """
    K = m.stiffness
    norm = float(np.abs(rhs).sum())
    scale = norm if scale is None else float(scale)
    if norm <= 1e-14 * scale or norm == 0.0:
        return np.zeros(m.n_nodes)
    atol = 0.1 * RESIDUAL_TOL * scale
    maxiter = 20 * m.n_nodes
    x, info = _cg(m, rhs, atol, maxiter)
    if m.is_closed:
        W = m.volume_weights
        x = x - (W @ x) / W.sum()
    res = np.linalg.norm(K @ x - rhs)
    if res > _residual_bound(m, x, scale):
        # one refinement pass on the residual before giving up
        dx, _ = _cg(m, rhs - K @ x, atol, maxiter)
        x = x + dx
        if m.is_closed:
            x = x - (m.volume_weights @ x) / m.volume_weights.sum()
        res = np.linalg.norm(K @ x - rhs)
    bound = _residual_bound(m, x, scale)
    if res > bound:
        raise SolverError(
            f"conjugate gradients stalled: residual {res:.3e} > {bound:.3e} "
            f"after {maxiter} iterations (ill-conditioned grid)")
    return x


def green_potential(m: DiscreteManifold, omega: ChargeDistribution) -> Potential:
    """Potential ``G`` with ``K G = omega - m(omega) W`` and zero volume average
    (closed manifolds), or ``K G = omega`` with zero boundary data (Dirichlet)."""
    if m.is_closed:
        rhs = omega.masses - normalized_mass(omega) * m.volume_weights
    else:
        rhs = omega.masses
    return Potential(solve_poisson(m, rhs, float(np.abs(omega.masses).sum())), m)


def mutual_energy(m: DiscreteManifold, omega1: ChargeDistribution,
                  omega2: ChargeDistribution) -> float:
    g1 = green_potential(m, omega1).values
    g2 = green_potential(m, omega2).values
    return float(g1 @ (m.stiffness @ g2))


def energy(m: DiscreteManifold, omega: ChargeDistribution) -> float:
    g = green_potential(m, omega).values
    return float(g @ (m.stiffness @ g))


def _is_inf(z) -> bool:
    return z is None or cmath.isinf(complex(z))


def green_kernel_sphere(a, b) -> float:
    """Green kernel of the unit sphere in the stereographic chart.

    Points are complex numbers; ``None`` or any infinite complex value is the
    point at infinity (the north pole).
    """
    a_inf, b_inf = _is_inf(a), _is_inf(b)
    if a_inf and b_inf:
        raise ValueError("kernel is singular at a = b")
    if a_inf or b_inf:
        z = complex(b if a_inf else a)
        arg = 1.0 / (1.0 + abs(z) ** 2)
    else:
        a, b = complex(a), complex(b)
        if a == b:
            raise ValueError("kernel is singular at a = b")
        arg = abs(a - b) ** 2 / ((1 + abs(a) ** 2) * (1 + abs(b) ** 2))
    return -(math.log(arg) + 1.0) / (4 * math.pi)


def sphere_to_complex(theta: float, phi: float) -> complex:
    """Stereographic coordinate z = e^{i phi} cot(theta/2); theta = 0 maps to infinity."""
    if theta == 0.0:
        return complex(math.inf, 0.0)
    return cmath.exp(1j * phi) / math.tan(theta / 2)
