"""Radial experiments in Euclidean balls B(0, R) of R^n.

The charge is ``sigma = t eta - chi_{B(0, rho)} vol`` where ``eta`` is the
surface measure of the unit sphere.  It is swept to zero with Dirichlet or
Neumann conditions at ``r = R``; the result is ``-chi_{B(0, s)} vol`` and with
Dirichlet data some mass ``q_R`` leaves through the outer boundary.

The shell measure has no grid representation of its own: its whole mass
``t |S^{n-1}|`` is deposited on the cell containing ``r = 1``.  The hole is
fill-weighted, so a cell cut by ``r = rho`` carries the matching fraction of
its volume.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .charge import ChargeDistribution
from .greens import Potential, mutual_energy
from .grid import Boundary, DiscreteManifold, build_radial_ball, sphere_area
from .obstacle import SolverParams
from .partial import BalayageResult, bal_zero

BISECT_TOL = 1e-12


@dataclass(frozen=True)
class RadialScenario:
    n: int
    rho: float
    t: float
    R: float
    bc: str = "dirichlet"
    n_cells: int = 4096

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension n must be at least 1")
        if not 0 < self.rho < 1 < self.R:
            raise ValueError(f"need 0 < rho < 1 < R, got rho={self.rho}, R={self.R}")
        if not 0 < self.t < self.rho ** self.n / self.n:
            raise ValueError(f"need 0 < t < rho^n/n = {self.rho ** self.n / self.n:.6g}, got t={self.t}")
        if Boundary(self.bc) is Boundary.CLOSED:
            raise ValueError("radial scenarios use dirichlet or neumann conditions")
        if self.n_cells < 8:
            raise ValueError("n_cells must be at least 8")

    @property
    def boundary(self) -> Boundary:
        return Boundary(self.bc)

    @property
    def spacing(self) -> float:
        return self.R / self.n_cells


@dataclass
class RadialResult:
    scenario: RadialScenario
    s_numeric: float
    s_closed: Optional[float]
    s_matched: Optional[float]
    u_profile: Potential
    q_R: float
    fraction_lost: float
    sigma: ChargeDistribution = field(repr=False)
    result: BalayageResult = field(repr=False)

    @property
    def manifold(self) -> DiscreteManifold:
        return self.u_profile.manifold


def _cell_overlap(m: DiscreteManifold, a: float, b: float) -> np.ndarray:
    """Fraction of each cell's radial extent inside [a, b]."""
    h = m.spacing
    lo = m.node_coords - h / 2
    hi = m.node_coords + h / 2
    return np.clip((np.minimum(hi, b) - np.maximum(lo, a)) / h, 0.0, 1.0)


def radial_charge(m: DiscreteManifold, sc: RadialScenario) -> ChargeDistribution:
    W = m.volume_weights
    masses = -_cell_overlap(m, 0.0, sc.rho) * W
    shell = min(int(1.0 / m.spacing), m.n_nodes - 1)
    masses[shell] += sc.t * sphere_area(sc.n)
    return ChargeDistribution(masses, m)


def _free_radius(m: DiscreteManifold, nu: np.ndarray) -> float:
    """Outer radius of {nu = -vol}: full cells from the centre plus the fill
    fraction of the next one."""
    fill = np.clip(-nu / m.volume_weights, 0.0, 1.0)
    full = fill >= 1 - 1e-6
    k = 0
    while k < full.size and full[k]:
        k += 1
    s = k * m.spacing
    if k < full.size:
        s += fill[k] * m.spacing
    return float(s)


def radial_solve(sc: RadialScenario, params: Optional[SolverParams] = None) -> RadialResult:
    m = build_radial_ball(sc.n, sc.R, sc.n_cells, sc.boundary)
    sigma = radial_charge(m, sc)
    res = bal_zero(m, sigma, params)
    if not res.converged:
        raise RuntimeError(f"radial solve did not converge for {sc}")
    s = _free_radius(m, res.nu.masses)
    q = sigma.total - res.nu.total if sc.boundary is Boundary.DIRICHLET else 0.0
    if sc.boundary is Boundary.DIRICHLET:
        s_closed, s_matched = closed_form_s(sc), matched_s(sc)
    else:
        s_closed = s_matched = neumann_s(sc)
    frac = q / (sc.t * sphere_area(sc.n))
    return RadialResult(sc, s, s_closed, s_matched, res.u, q, frac, sigma, res)


# -- closed forms ---------------------------------------------------------

def _dirichlet_equation(n: int, rho: float, t: float, R: float):
    if n == 2:
        logR = math.log(R)

        def f(s):
            b2 = s * s / 2 * math.log(s) - rho * rho / 2 * math.log(rho) + (rho * rho - s * s) / 4
            b3 = t - (rho * rho - s * s) / 2
            return b2 / logR - b3 if math.isfinite(logR) else -b3
        return f

    decay = 0.0 if math.isinf(R) else R ** (2 - n)

    def f(s):
        x = s ** n - rho ** n
        # divided through by (1 + R^{2-n}) so that R = inf needs no special case
        return t / (n - 2) + x / (n * (n - 2)) + x / (2 * n * (1 + decay))
    return f


def closed_form_s(sc: RadialScenario | None = None, *, n: int | None = None, rho: float | None = None,
                  t: float | None = None, R: float | None = None) -> float:
    """Free-boundary radius s from the Dirichlet matching condition, by bisection.

    Accepts a scenario or keyword parameters; ``R = math.inf`` gives the
    full-space limit.
    """
    if sc is not None:
        n, rho, t, R = sc.n, sc.rho, sc.t, sc.R
    f = _dirichlet_equation(n, rho, t, R)
    lo, hi = 1e-300, rho
    if f(lo) * f(hi) > 0:
        raise ValueError(f"no sign change on (0, rho) for n={n}, rho={rho}, t={t}, R={R}")
    return brentq(f, lo, hi, xtol=BISECT_TOL, rtol=4 * np.finfo(float).eps)


def _matching_residual(n: int, rho: float, t: float, R: float):
    """u(1) from the inside minus u(1) from the outside, for a trial radius s.

    Inside, u vanishes to first order at s, solves Lap u = 1 up to rho and is
    harmonic up to 1 with radial flux (rho^n - s^n)/n.  The shell lowers the
    flux by t, and outside u is harmonic with u(R) = 0.
    """
    def g(s):
        f_in = (rho ** n - s ** n) / n
        f_out = f_in - t
        if n == 2:
            u_rho = (rho * rho - s * s) / 4 - s * s / 2 * math.log(rho / s)
            return u_rho - f_in * math.log(rho) + f_out * math.log(R)
        decay = 0.0 if math.isinf(R) else R ** (2 - n)
        u_rho = (rho * rho - s * s) / (2 * n) - s ** n * (rho ** (2 - n) - s ** (2 - n)) / (n * (2 - n))
        return u_rho + (f_in * (1 - rho ** (2 - n)) - f_out * (1 - decay)) / (2 - n)
    return g


def matched_s(sc: RadialScenario | None = None, *, n: int | None = None, rho: float | None = None,
              t: float | None = None, R: float | None = None) -> float:
    """Free-boundary radius from continuity of u at r = 1, solved directly from
    the jump system rather than from ``closed_form_s``.  For n = 2 the
    two coincide; for n != 2 they differ at finite and infinite R."""
    if sc is not None:
        n, rho, t, R = sc.n, sc.rho, sc.t, sc.R
    g = _matching_residual(n, rho, t, R)
    lo, hi = 1e-12 * rho, rho
    if g(lo) * g(hi) > 0:
        raise ValueError(f"no sign change on (0, rho) for n={n}, rho={rho}, t={t}, R={R}")
    return brentq(g, lo, hi, xtol=BISECT_TOL, rtol=4 * np.finfo(float).eps)


def limit_fraction(n: int, rho: float, t: float) -> float:
    """R -> infinity fraction of t|S^{n-1}| lost, from the jump system.

    For n >= 3 the limiting radius satisfies s^2 = rho^2 - 2t; n = 1, 2 lose
    nothing in the limit.
    """
    if n <= 2:
        return 0.0
    s = math.sqrt(rho * rho - 2 * t)
    return 1.0 + (s ** n - rho ** n) / (n * t)


def neumann_s(sc: RadialScenario) -> float:
    return (sc.rho ** sc.n - sc.n * sc.t) ** (1.0 / sc.n)


def closed_form_q(sc: RadialScenario, s: Optional[float] = None) -> float:
    """Mass lost through r = R implied by the mass balance at radius s."""
    s = closed_form_s(sc) if s is None else s
    return sphere_area(sc.n) * (sc.t + (s ** sc.n - sc.rho ** sc.n) / sc.n)


# -- excess mass ----------------------------------------------------------

@dataclass
class ExcessLimit:
    n: int
    radii: list
    fractions: list
    limit: float
    expected: float
    matched: float
    abscissa: str


def _abscissa(n: int, R: float) -> float:
    if n == 2:
        return 1.0 / math.log(R)
    return float(R) ** (2 - n) if n >= 3 else 1.0 / R


def excess_limit(n: int, rho: float = 0.8, t: float = 0.1,
                 radii: Sequence[float] = (10, 30, 100, 300), h: float = 0.01,
                 params: Optional[SolverParams] = None) -> ExcessLimit:
    """fraction_lost over an R sweep, extrapolated to R = infinity.

    The fraction approaches its limit linearly in R^{2-n} (n >= 3), in
    1/log R (n = 2) and in 1/R (n = 1).  The limit is the intercept of a
    straight-line fit through the two largest radii.
    """
    fr = []
    for R in radii:
        sc = RadialScenario(n, rho, t, float(R), "dirichlet", int(math.ceil(R / h)))
        fr.append(radial_solve(sc, params).fraction_lost)
    x = np.array([_abscissa(n, R) for R in radii])
    y = np.array(fr)
    slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
    limit = float(y[-1] - slope * x[-1])
    expected = (n - 2) / n if n >= 3 else 0.0
    label = {1: "1/R", 2: "1/log R"}.get(n, f"R^{2 - n}")
    return ExcessLimit(n, list(radii), fr, limit, expected, limit_fraction(n, rho, t), label)


@dataclass
class BoundReport:
    q_R: float
    energy: float
    bound: float
    allowance: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound * (1 + self.allowance) - self.q_R ** 2


def excess_bound(n: int, rho: float, R: float, energy: float) -> float:
    if n == 2:
        return 2 * math.pi * energy / (math.log(R) - math.log(rho))
    return ((n - 2) * sphere_area(n) * (R * rho) ** (n - 2)
            / (R ** (n - 2) - rho ** (n - 2)) * energy)


def excess_bound_check(sc: RadialScenario | RadialResult, allowance: float = 0.05,
                       params: Optional[SolverParams] = None) -> BoundReport:
    res = sc if isinstance(sc, RadialResult) else radial_solve(sc, params)
    scen = res.scenario
    if scen.boundary is not Boundary.DIRICHLET:
        raise ValueError("the excess bound applies to Dirichlet runs")
    m = res.manifold
    sigma = res.sigma.masses
    plus = np.maximum(sigma, 0.0)
    minus = np.maximum(-sigma, 0.0)
    if plus.sum() >= minus.sum():
        raise ValueError("the excess bound needs a strictly negative total charge")
    nu_tilde = (plus.sum() / minus.sum() - 1.0) * minus
    diff = ChargeDistribution(nu_tilde - sigma, m)
    e = mutual_energy(m, diff, diff)
    bound = excess_bound(scen.n, scen.rho, scen.R, e)
    return BoundReport(res.q_R, e, bound, allowance, res.q_R ** 2 <= bound * (1 + allowance))


# -- batch output ---------------------------------------------------------

TABLE_COLUMNS = ["n", "rho", "t", "R", "bc", "s_numeric", "s_closed", "s_matched",
                 "q_R", "fraction_lost", "bound", "bound_ok"]


def table_rows(scenarios: Iterable[RadialScenario],
               params: Optional[SolverParams] = None) -> list[dict]:
    rows = []
    for sc in scenarios:
        res = radial_solve(sc, params)
        bound, ok = "", ""
        if sc.boundary is Boundary.DIRICHLET:
            rep = excess_bound_check(res)
            bound, ok = rep.bound, rep.passed
        rows.append({"n": sc.n, "rho": sc.rho, "t": sc.t, "R": sc.R, "bc": sc.bc,
                     "s_numeric": res.s_numeric, "s_closed": res.s_closed, "s_matched": res.s_matched,
                     "q_R": res.q_R, "fraction_lost": res.fraction_lost,
                     "bound": bound, "bound_ok": ok})
    return rows


def write_table(rows: list[dict], path) -> None:
    def fmt(v):
        return f"{v:.17g}" if isinstance(v, float) else str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow([fmt(r[c]) for c in TABLE_COLUMNS])
