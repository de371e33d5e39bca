"""Partial balayage Bal(sigma, lambda) through the discrete obstacle problem.

Conventions: masses are absolute, ``nu = sigma - K u`` for ``lambda = 0`` and
the general case is reduced by ``Bal(sigma, lambda) = Bal(sigma - lambda, 0) + lambda``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .charge import ChargeDistribution, normalized_mass, zero
from .greens import Potential, green_potential
from .grid import DiscreteManifold
from .obstacle import InfeasibleError, LcpProblem, SolverParams, solve

log = logging.getLogger(__name__)

OMEGA_EPS = 1e-6


@dataclass(eq=False)
class BalayageResult:
    sigma: ChargeDistribution
    lam: ChargeDistribution
    nu: ChargeDistribution
    u: Potential
    v: Potential
    psi: Potential
    t: float
    omega_mask: np.ndarray
    mu: ChargeDistribution
    diagnostics: dict = field(default_factory=dict)

    @property
    def manifold(self) -> DiscreteManifold:
        return self.nu.manifold

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics.get("converged", False))

    @property
    def scale(self) -> float:
        s = float(np.abs(self.sigma.masses).sum() + np.abs(self.lam.masses).sum())
        return s if s > 0 else 1.0

    @property
    def noncoincidence_mask(self) -> np.ndarray:
        """Nodes where u is strictly positive."""
        u = self.u.values
        return u > self.diagnostics.get("tolerance", 1e-10) * max(1.0, float(np.abs(u).max()))

    @property
    def omega_volume(self) -> float:
        return float(self.manifold.volume_weights[self.omega_mask].sum())

    def summary(self) -> dict:
        return {
            "t": self.t,
            "total_sigma": self.sigma.total,
            "total_lambda": self.lam.total,
            "total_nu": self.nu.total,
            "total_mu": self.mu.total,
            "omega_volume": self.omega_volume,
            "omega_nodes": int(self.omega_mask.sum()),
            "diagnostics": {k: v for k, v in self.diagnostics.items()
                            if isinstance(v, (int, float, str, bool))},
        }

    def to_csv(self, path) -> None:
        m = self.manifold
        coords = m.node_coords.reshape(m.n_nodes, -1)
        cols = [f"c{k}" for k in range(coords.shape[1])]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", *cols, "sigma", "nu", "u", "v", "psi", "omega", "mu"])
            for i in range(m.n_nodes):
                w.writerow([i, *(f"{c:.17g}" for c in coords[i]),
                            *(f"{a[i]:.17g}" for a in (self.sigma.masses, self.nu.masses,
                                                       self.u.values, self.v.values, self.psi.values)),
                            int(self.omega_mask[i]), f"{self.mu.masses[i]:.17g}"])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def saturated_mask(m: DiscreteManifold, nu: np.ndarray, lam: np.ndarray,
                   eps: float = OMEGA_EPS) -> np.ndarray:
    """Nodes where nu equals lambda, relative to the largest deficit density."""
    gap = np.abs(lam - nu) / m.volume_weights
    ref = gap.max(initial=0.0)
    return gap <= eps * ref


def _balayage(m: DiscreteManifold, sigma: ChargeDistribution, lam: ChargeDistribution,
              params: Optional[SolverParams], eps_omega: float) -> BalayageResult:
    params = params or SolverParams()
    rho = sigma.masses - lam.masses
    total = float(rho.sum())
    scale = float(np.abs(rho).sum()) or 1.0
    tol = params.tolerance
    if m.is_closed and total > tol * scale:
        raise InfeasibleError(
            f"infeasible: total sigma {sigma.total:.6g} exceeds total lambda {lam.total:.6g}; "
            "partial balayage needs sum(sigma) <= sum(lambda)")
    rho_c = ChargeDistribution(rho, m)
    g = green_potential(m, rho_c).values
    K = m.stiffness
    if m.is_closed and abs(total) <= tol * scale:
        # zero net mass: nothing is swept, u is the Green potential lifted to min 0
        u = g - g.min()
        diag = {"converged": True, "method": "zero-mass", "sweeps": 0,
                "residual_feasibility": 0.0, "residual_complementarity": 0.0}
        nu_rel = np.zeros(m.n_nodes)
    else:
        sol = solve(LcpProblem(K, rho, params, closed=m.is_closed))
        u = sol.u
        nu_rel = rho - K @ u
        diag = {"converged": sol.converged, "method": sol.method, "sweeps": sol.sweeps_used,
                "residual_feasibility": sol.residual_feasibility,
                "residual_complementarity": sol.residual_complementarity}
        if not sol.converged:
            log.warning("balayage solve did not converge (%s)", diag)
    diag["tolerance"] = tol
    t = -normalized_mass(rho_c) if m.is_closed else 0.0
    psi = -g
    nu = nu_rel + lam.masses
    mu = lam.masses - nu
    omega = saturated_mask(m, nu, lam.masses, eps_omega)
    umax = max(1.0, float(np.abs(u).max(initial=0.0)))
    shallow = (u <= tol * umax) & (np.abs(mu) <= tol * scale) & ~omega
    diag["shallow_candidates"] = int(shallow.sum())
    return BalayageResult(
        sigma=sigma, lam=lam,
        nu=ChargeDistribution(nu, m),
        u=Potential(u, m), v=Potential(u + psi, m), psi=Potential(psi, m),
        t=t, omega_mask=omega,
        mu=ChargeDistribution(mu, m),
        diagnostics=diag,
    )


def bal_zero(m: DiscreteManifold, sigma: ChargeDistribution,
             params: Optional[SolverParams] = None, eps_omega: float = OMEGA_EPS) -> BalayageResult:
    """Bal(sigma, 0)."""
    return _balayage(m, sigma, zero(m), params, eps_omega)


def bal(m: DiscreteManifold, sigma: ChargeDistribution, lam: ChargeDistribution,
        params: Optional[SolverParams] = None, eps_omega: float = OMEGA_EPS) -> BalayageResult:
    """Bal(sigma, lambda)."""
    return _balayage(m, sigma, lam, params, eps_omega)


# -- checks ---------------------------------------------------------------

@dataclass
class BoundsReport:
    passed: bool
    worst_upper: float
    worst_lower: float
    upper_violations: list
    lower_violations: list


def check_bounds(result: BalayageResult, tol: float = 1e-8) -> BoundsReport:
    """min(sigma, lambda) <= nu <= lambda componentwise."""
    nu = result.nu.masses
    lam = result.lam.masses
    low = np.minimum(result.sigma.masses, lam)
    slack = tol * result.scale
    up = nu - lam
    lo = low - nu
    return BoundsReport(
        passed=bool(up.max() <= slack and lo.max() <= slack),
        worst_upper=float(up.max()), worst_lower=float(lo.max()),
        upper_violations=np.flatnonzero(up > slack).tolist(),
        lower_violations=np.flatnonzero(lo > slack).tolist(),
    )


@dataclass
class StructureReport:
    passed: bool
    nu_sing: ChargeDistribution
    sing_mass: float
    outside_collar_mass: float
    locations: list


def collar(m: DiscreteManifold, mask: np.ndarray) -> np.ndarray:
    """Nodes outside ``mask`` adjacent to a node inside it."""
    K = m.stiffness
    adj = (abs(K) @ mask.astype(float)) > 0
    return adj & ~mask


def check_structure(result: BalayageResult, eps_struct: float = 1e-2) -> StructureReport:
    """Compare nu with lambda on Omega and sigma off Omega.

    The remainder ``nu_sing`` may only live on the one-cell collar of the
    saturated set and must be small compared to the total charge.
    """
    m = result.manifold
    omega = result.omega_mask
    expected = np.where(omega, result.lam.masses, result.sigma.masses)
    sing = result.nu.masses - expected
    ring = collar(m, omega)
    zero_tol = 1e-8 * result.scale
    outside = float(np.abs(sing[~ring & ~omega]).sum())
    outside = outside if outside > zero_tol else 0.0
    mass = float(np.abs(sing).sum())
    passed = mass <= eps_struct * result.scale and outside == 0.0
    locs = np.flatnonzero(np.abs(sing) > zero_tol)
    locs = locs[np.argsort(-np.abs(sing[locs]))].tolist()
    return StructureReport(passed, ChargeDistribution(sing, m), mass, outside, locs)


def bal_incremental(m: DiscreteManifold, sigma1: ChargeDistribution, sigma2: ChargeDistribution,
                    lam1: ChargeDistribution, lam2: ChargeDistribution,
                    params: Optional[SolverParams] = None) -> tuple[BalayageResult, BalayageResult]:
    """Two-step balayage Bal(Bal(s1, l2) + s2, l1) against the direct Bal(s1 + s2, l1)."""
    slack = lam2.masses + sigma2.masses - lam1.masses
    if slack.min() < -1e-12 * (1 + np.abs(slack).max()):
        raise ValueError("composition needs lambda1 <= lambda2 + sigma2 componentwise")
    first = bal(m, sigma1, lam2, params)
    lhs = bal(m, first.nu + sigma2, lam1, params)
    rhs = bal(m, sigma1 + sigma2, lam1, params)
    return lhs, rhs


# -- existence ------------------------------------------------------------

@dataclass
class ExistenceReport:
    classification: str
    resolutions: list
    spacings: list
    mean_u: list
    sup_u: list
    sink_masses: list
    slope: float
    r_squared: float


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), r2


def existence_diagnostic(sigma_builder: Callable[[int], ChargeDistribution],
                         levels: Sequence[int], params: Optional[SolverParams] = None,
                         r2_min: float = 0.98) -> ExistenceReport:
    """Refine the grid and watch whether the potential u stays bounded.

    The tracked quantity is the volume average of u.  When Bal(sigma, 0) has
    no continuum limit that average grows at the Green kernel rate
    (log(1/h) in two dimensions, h^(2-n) above); otherwise it settles.
    """
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    hs, means, sups, sinks = [], [], [], []
    dim = 1
    for lev in levels:
        sigma = sigma_builder(lev)
        m = sigma.manifold
        dim = m.dimension
        res = bal_zero(m, sigma, params)
        hs.append(m.spacing)
        means.append(res.u.volume_average())
        sups.append(float(res.u.values.max()))
        dens = sigma.masses / m.volume_weights
        sink = dens < -10.0 * np.median(np.abs(dens)) if np.any(dens < 0) else np.zeros_like(dens, bool)
        sinks.append(float(res.nu.masses[sink].sum()))
    h = np.array(hs)
    y = np.array(means)
    x = np.log(1.0 / h) if dim <= 2 else h ** (2.0 - dim)
    slope, r2 = _fit(x, y)
    incr = np.diff(y)
    span = max(1.0, float(np.abs(y).max()))
    growing = incr[-1] > 1e-3 * span and incr[-1] >= 0.5 * incr[0] > 0
    classification = "diverging" if (growing and r2 > r2_min and slope > 0) else "converging"
    return ExistenceReport(classification, list(levels), hs, means, sups, sinks, slope, r2)
