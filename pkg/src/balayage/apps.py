"""Applications of partial balayage: harmonic and geodesic balls, Laplacian
growth, weighted equilibrium forms and quadrature inequalities."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse.csgraph as csgraph

from .charge import ChargeDistribution, atom, from_density, volume_form, zero
from .greens import Potential, green_kernel_sphere, green_potential, sphere_to_complex
from .grid import DiscreteManifold, Kind
from .obstacle import SolverParams
from .partial import BalayageResult, bal, bal_incremental, bal_zero, collar


def _geometry(m: DiscreteManifold) -> str:
    return m.meta.get("geometry", "custom")


def _centre_location(m: DiscreteManifold, a):
    """Coordinates of the centre; profiles are centred at their left end."""
    if m.kind is Kind.SYMMETRIC_PROFILE and a is None:
        return m.meta["interval"][0]
    return a


def components(m: DiscreteManifold, mask: np.ndarray) -> int:
    """Number of connected components of ``mask`` in the stencil graph."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return 0
    sub = m.stiffness[idx][:, idx]
    n, _ = csgraph.connected_components(sub, directed=False)
    return int(n)


# -- balls ----------------------------------------------------------------

@dataclass
class BallReport:
    center: object
    input: float
    region_mask: np.ndarray
    measured_volume: float
    measured_geodesic_radius: Optional[float] = None
    relation_residual: Optional[float] = None
    result: Optional[BalayageResult] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "center": self.center if not isinstance(self.center, tuple) else list(self.center),
            "input": self.input,
            "region_nodes": int(self.region_mask.sum()),
            "measured_volume": self.measured_volume,
            "measured_geodesic_radius": self.measured_geodesic_radius,
            "relation_residual": self.relation_residual,
        }


def _radius_from_fill(m: DiscreteManifold, centre, fill: np.ndarray) -> float:
    """Radius of a region given per-node fill fractions, from its outer edge."""
    d = m.distance_from(centre)
    if m.kind is Kind.SYMMETRIC_PROFILE:
        full = np.flatnonzero(fill >= 1 - 1e-9)
        edge = d[full].max() + m.spacing / 2 if full.size else 0.0
        part = (fill > 1e-9) & (fill < 1 - 1e-9) & (d > edge)
        return float(edge + m.spacing * fill[part].sum())
    if m.kind is Kind.CIRCLE:
        return float((fill * m.volume_weights).sum() / 2)
    full = fill >= 1 - 1e-9
    edge = float(d[full].max() + m.spacing / 2) if full.any() else 0.0
    ring = (d > edge) & (d < edge + m.spacing)
    return edge + m.spacing * float(fill[ring].mean()) if ring.any() else edge


def harmonic_ball(m: DiscreteManifold, a, t: float,
                  params: Optional[SolverParams] = None) -> BallReport:
    """Saturated set of Bal(t delta_a, vol)."""
    if not 0 < t < m.total_volume:
        raise ValueError(f"mass t={t} must lie in (0, vol(M)={m.total_volume})")
    a = _centre_location(m, a)
    res = bal(m, atom(m, a, t), volume_form(m), params)
    fill = np.clip(res.nu.masses / m.volume_weights, 0.0, 1.0)
    vol = float((fill * m.volume_weights).sum())
    return BallReport(a, t, res.omega_mask, vol, _radius_from_fill(m, a, fill), None, res)


def geodesic_ball(m: DiscreteManifold, a, r: float) -> BallReport:
    a = _centre_location(m, a)
    diam = {Kind.CIRCLE: 0.5, Kind.SPHERE_LATLONG: math.pi}.get(m.kind)
    if m.kind is Kind.SYMMETRIC_PROFILE:
        lo, hi = m.meta["interval"]
        diam = hi - lo
    if not 0 < r <= diam:
        raise ValueError(f"radius {r} outside the chart (0, {diam}]")
    mask = m.distance_from(a) < r
    return BallReport(a, r, mask, float(m.volume_weights[mask].sum()), r)


def geodesic_ball_volume(m: DiscreteManifold, r: float) -> float:
    """Analytic volume of a geodesic ball on the constant-curvature families."""
    g = _geometry(m)
    if g == "circle":
        return 2 * r
    if g == "sphere2":
        return 2 * math.pi * (1 - math.cos(r))
    if g == "flat" and m.dimension == 2:
        return math.pi * r * r
    raise ValueError(f"no closed-form ball volume for geometry {g!r}")


def curvature_ball_relation(kappa: float, r: float) -> float:
    """Closed-form t(r) for a harmonic ball of radius r at constant curvature kappa in two dimensions."""
    if kappa > 0:
        return math.pi / kappa * math.sin(math.sqrt(kappa) * r) ** 2
    if kappa < 0:
        return -math.pi / kappa * math.sinh(math.sqrt(-kappa) * r) ** 2
    return math.pi * r * r


@dataclass
class EquivalenceReport:
    passed: bool
    t_mass: float
    relation_t: Optional[float]
    relation_residual: Optional[float]
    mismatched_nodes: int
    harmonic: BallReport
    geodesic: BallReport


def regions_agree(m: DiscreteManifold, a_mask: np.ndarray, b_mask: np.ndarray) -> tuple[bool, int]:
    """True when the masks differ only on the one-cell collar of ``b_mask``."""
    diff = a_mask ^ b_mask
    allowed = collar(m, b_mask) | collar(m, ~b_mask)
    bad = diff & ~allowed
    return not bad.any(), int(diff.sum())


def ball_equivalence_check(m: DiscreteManifold, a, r: float,
                           params: Optional[SolverParams] = None) -> EquivalenceReport:
    """Harmonic ball of volume vol(B_geod(a, r)) against the geodesic ball itself."""
    g = _geometry(m)
    if g not in ("circle", "sphere2", "flat") or (g == "flat" and m.dimension != 2):
        raise ValueError(f"ball equivalence needs a constant-curvature family, got {g!r}")
    t_mass = geodesic_ball_volume(m, r)
    geo = geodesic_ball(m, a, r)
    harm = harmonic_ball(m, a, t_mass, params)
    ok, n_diff = regions_agree(m, harm.region_mask, geo.region_mask)
    rel = None
    if g in ("sphere2", "flat"):
        rel = curvature_ball_relation(1.0 if g == "sphere2" else 0.0, r)
    harm.relation_residual = None if rel is None else rel - t_mass
    return EquivalenceReport(ok, t_mass, rel, harm.relation_residual, n_diff, harm, geo)


# -- Laplacian growth -----------------------------------------------------

@dataclass
class GrowthTrace:
    source: object
    t_schedule: list
    masks: list
    volumes: list
    mask_volumes: list
    results: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {"source": self.source if not isinstance(self.source, tuple) else list(self.source),
                "t": list(self.t_schedule), "volumes": self.volumes,
                "mask_volumes": self.mask_volumes}

    def export(self, outdir) -> None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        for k, res in enumerate(self.results):
            res.to_csv(out / f"step_{k:03d}.csv")
        with open(out / "growth.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def laplacian_growth(m: DiscreteManifold, a, d0_mask: Optional[np.ndarray],
                     t_schedule: Sequence[float],
                     params: Optional[SolverParams] = None) -> GrowthTrace:
    """Weak Laplacian growth from a point source: D(t) is the saturated set of
    Bal(t delta_a + chi_{D0} vol, vol), each step solved from scratch."""
    ts = [float(t) for t in t_schedule]
    if any(t1 >= t2 for t1, t2 in zip(ts, ts[1:])) or (ts and ts[0] <= 0):
        raise ValueError("t_schedule must be positive and strictly increasing")
    a = _centre_location(m, a)
    d0 = np.zeros(m.n_nodes, bool) if d0_mask is None else np.asarray(d0_mask, bool)
    room = float(m.volume_weights[~d0].sum())
    if ts and ts[-1] >= room:
        raise ValueError(f"t_max={ts[-1]} must stay below vol(M minus D0)={room}")
    base = ChargeDistribution(np.where(d0, m.volume_weights, 0.0), m)
    lam = volume_form(m)
    trace = GrowthTrace(a, ts, [], [], [])
    for t in ts:
        res = bal(m, atom(m, a, t) + base, lam, params)
        trace.masks.append(res.omega_mask)
        fill = np.clip(res.nu.masses / m.volume_weights, 0.0, 1.0)
        trace.volumes.append(float((fill * m.volume_weights).sum()))
        trace.mask_volumes.append(res.omega_volume)
        trace.results.append(res)
    return trace


def incremental_growth(m: DiscreteManifold, a, d0_mask: Optional[np.ndarray],
                       t_schedule: Sequence[float],
                       params: Optional[SolverParams] = None) -> list[np.ndarray]:
    """Same schedule stepped through the composition rule: each step sweeps the
    previous balayage plus the newly injected mass."""
    a = _centre_location(m, a)
    d0 = np.zeros(m.n_nodes, bool) if d0_mask is None else np.asarray(d0_mask, bool)
    lam = volume_form(m)
    current = ChargeDistribution(np.where(d0, m.volume_weights, 0.0), m)
    prev_t = 0.0
    masks = []
    for t in t_schedule:
        lhs, _ = bal_incremental(m, current, atom(m, a, t - prev_t), lam, lam, params)
        masks.append(lhs.omega_mask)
        current = lhs.nu
        prev_t = t
    return masks


# -- weighted equilibrium -------------------------------------------------

@dataclass
class EquilibriumReport:
    Q: Potential
    t: float
    mu: ChargeDistribution
    robin_constant: float
    min_slack: float
    support_mask: np.ndarray
    max_support_deviation: float
    result: Optional[BalayageResult] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {"t": self.t, "mu_total": self.mu.total, "robin_constant": self.robin_constant,
                "min_slack": self.min_slack, "support_nodes": int(self.support_mask.sum()),
                "max_support_deviation": self.max_support_deviation}


def weighted_equilibrium(m: DiscreteManifold, Q: Potential, t: float,
                         params: Optional[SolverParams] = None) -> EquilibriumReport:
    """mu_{Q,t} = -Bal(-Laplacian(Q) - t vol, 0) with its modified Robin constant."""
    if t <= 0:
        raise ValueError("t must be positive")
    sigma_t = ChargeDistribution(m.stiffness @ Q.values - t * m.volume_weights, m)
    res = bal_zero(m, sigma_t, params)
    mu = -res.nu
    scale = float(np.abs(sigma_t.masses).sum())
    supp = mu.masses > 1e-9 * scale
    field_ = Q.values + green_potential(m, mu).values
    robin = float(np.median(field_[supp])) if supp.any() else 0.0
    dev = float(np.abs(field_[supp] - robin).max(initial=0.0))
    return EquilibriumReport(Q, t, mu, robin, float((field_ - robin).min()), supp, dev, res)


def two_point_field(m: DiscreteManifold, a, alpha: float = 1.0, beta: float = 1.0) -> Potential:
    """alpha G(., infinity) + beta G(., a) on the lat-long sphere from the
    closed-form kernel; at the two singular nodes the kernel is replaced by the
    discrete self-potential of the corresponding atom."""
    if m.kind is not Kind.SPHERE_LATLONG:
        raise ValueError("two_point_field needs the lat-long sphere")
    za = sphere_to_complex(*a)
    north = m.nearest_node((0.0, 0.0))
    ia = m.nearest_node(a)
    zs = [sphere_to_complex(th, ph) for th, ph in m.node_coords]
    q = np.zeros(m.n_nodes)
    self_n = green_potential(m, atom(m, (0.0, 0.0), 1.0)).values[north]
    self_a = green_potential(m, atom(m, a, 1.0)).values[ia]
    for i, z in enumerate(zs):
        g_inf = self_n if i == north else green_kernel_sphere(None, z)
        g_a = self_a if i == ia else green_kernel_sphere(za, z)
        q[i] = alpha * g_inf + beta * g_a
    return Potential(q, m)


# -- quadrature -----------------------------------------------------------

@dataclass
class QuadratureReport:
    passed: bool
    slacks: list
    mass_gap: float
    probes: list


def quadrature_verify(m: DiscreteManifold, domain: np.ndarray, source: ChargeDistribution,
                      probes: Sequence, tol: float = 1e-8) -> QuadratureReport:
    """Check the quadrature inequality for the Green potentials G(., y), y outside
    the domain, and equality for constants.

    ``domain`` is a boolean mask or per-node fill fractions in [0, 1].
    """
    fill = np.asarray(domain, dtype=float)
    W = m.volume_weights
    scale = float(np.abs(source.masses).sum() + (fill * W).sum())
    outside_src = source.masses[fill <= 0]
    if np.abs(outside_src).sum() > tol * scale:
        raise ValueError("source must be supported in the domain")
    nodes = []
    for y in probes:
        i = int(y) if isinstance(y, (int, np.integer)) else m.nearest_node(y)
        if fill[i] >= 1 - 1e-9:
            raise ValueError(f"probe node {i} lies inside the domain")
        nodes.append(i)
    slacks = []
    for i in nodes:
        e = np.zeros(m.n_nodes)
        e[i] = 1.0
        phi = green_potential(m, ChargeDistribution(e, m)).values
        slacks.append(float(phi @ (fill * W) - phi @ source.masses))
    gap = float((fill * W).sum() - source.total)
    passed = all(s >= -tol * scale for s in slacks) and abs(gap) <= tol * scale
    return QuadratureReport(passed, slacks, gap, nodes)
