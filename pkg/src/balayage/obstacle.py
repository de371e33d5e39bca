"""Discrete linear complementarity problem

    u >= 0,   K u - sigma >= 0,   u . (K u - sigma) = 0

with K a symmetric positive semidefinite M-matrix.  Three solvers share one
result type: projected SOR (``solve_pgs``), a primal-dual active set method
(``solve_active_set``) and exhaustive enumeration (``solve_brute``), the last
being the oracle for tiny instances.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class InfeasibleError(ValueError):
    """No u satisfies the constraints (total charge exceeds the ceiling)."""


@dataclass
class SolverParams:
    method: str = "active_set"
    relaxation: float = 1.5
    tolerance: float = 1e-10
    max_sweeps: Optional[int] = None
    polish: bool = False

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "SolverParams":
        if not d:
            return cls()
        known = {k: d[k] for k in ("method", "relaxation", "tolerance", "max_sweeps", "polish") if k in d}
        extra = set(d) - set(known)
        if extra:
            raise ValueError(f"unknown solver parameters: {sorted(extra)}")
        return cls(**known)


@dataclass
class LcpProblem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    params: SolverParams = field(default_factory=SolverParams)
    closed: bool = True

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        n = self.rhs.shape[0]
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix {self.matrix.shape} does not match rhs length {n}")
        if abs(self.matrix - self.matrix.T).max() > 1e-12 * max(1.0, abs(self.matrix).max()):
            raise ValueError("LCP matrix must be symmetric")

    @property
    def scale(self) -> float:
        s = float(np.abs(self.rhs).sum())
        return s if s > 0 else 1.0


@dataclass
class LcpSolution:
    u: np.ndarray
    residual_feasibility: float
    residual_complementarity: float
    sweeps_used: int
    converged: bool
    method: str = ""
    objective_history: list = field(default_factory=list)


def objective(p: LcpProblem, u: np.ndarray) -> float:
    """Quadratic energy u.K.u - 2 u.sigma minimised by the LCP solution."""
    return float(u @ (p.matrix @ u) - 2.0 * u @ p.rhs)


def residuals(p: LcpProblem, u: np.ndarray) -> tuple[float, float]:
    """(feasibility, complementarity) residuals scaled by ||sigma||_1.

    Feasibility is the worst violation of u >= 0 or K u - sigma >= 0.
    """
    y = p.matrix @ u - p.rhs
    feas = max(0.0, float(np.max(-y, initial=0.0)), float(np.max(-u, initial=0.0)))
    # complementarity measured as min(u, y), which is scale-consistent with y
    comp = float(np.max(np.abs(np.minimum(u, y)), initial=0.0))
    return feas / p.scale, comp / p.scale


def _finish(p: LcpProblem, u: np.ndarray, sweeps: int, method: str, history=None) -> LcpSolution:
    feas, comp = residuals(p, u)
    tol = p.params.tolerance
    return LcpSolution(u, feas, comp, sweeps, feas <= tol and comp <= tol, method, history or [])


def _check_feasible(p: LcpProblem) -> None:
    if p.closed and p.rhs.sum() > p.params.tolerance * p.scale:
        raise InfeasibleError(
            f"no feasible u: total charge {p.rhs.sum():.6g} > 0 violates the condition "
            "that the total of sigma not exceed the total of lambda")


def _solve_inactive(K: sp.csr_matrix, rhs: np.ndarray, inactive: np.ndarray) -> np.ndarray:
    u = np.zeros(rhs.shape[0])
    idx = np.flatnonzero(inactive)
    if idx.size:
        sub = K[idx][:, idx].tocsc()
        u[idx] = spla.spsolve(sub, rhs[idx]) if idx.size > 1 else rhs[idx] / sub[0, 0]
    return u


def solve_pgs(p: LcpProblem, record_objective: bool = False) -> LcpSolution:
    """Projected successive over-relaxation in ascending node order."""
    _check_feasible(p)
    K = p.matrix
    sigma = p.rhs
    n = sigma.shape[0]
    omega = p.params.relaxation
    if not 0.0 < omega < 2.0:
        raise ValueError("relaxation factor must lie in (0, 2)")
    max_sweeps = p.params.max_sweeps or 200 * n
    tol = p.params.tolerance
    indptr, indices, data = K.indptr, K.indices, K.data
    diag = K.diagonal()
    u = np.zeros(n)
    history = [objective(p, u)] if record_objective else []
    # rows as python lists; the sweep is inherently sequential
    rows = [(indices[indptr[i]:indptr[i + 1]], data[indptr[i]:indptr[i + 1]]) for i in range(n)]
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        for i in range(n):
            cols, vals = rows[i]
            if diag[i] == 0.0:
                u[i] = 0.0
                continue
            r = sigma[i] - vals @ u[cols]
            u[i] = max(0.0, u[i] + omega * r / diag[i])
        if record_objective:
            history.append(objective(p, u))
        feas, comp = residuals(p, u)
        if feas <= tol and comp <= tol:
            converged = True
            break
    if p.params.polish:
        u = polish(p, u)
    sol = _finish(p, u, sweeps, "pgs", history)
    if not sol.converged:
        log.warning("projected SOR stopped after %d sweeps (feas %.2e, comp %.2e)",
                    sweeps, sol.residual_feasibility, sol.residual_complementarity)
    return sol


def polish(p: LcpProblem, u: np.ndarray) -> np.ndarray:
    """One direct solve on the inactive set of an approximate solution."""
    y = p.matrix @ u - p.rhs
    inactive = u > y
    if p.closed and inactive.all():
        return u
    cand = _solve_inactive(p.matrix, p.rhs, inactive)
    f0 = sum(residuals(p, u))
    f1 = sum(residuals(p, cand))
    return cand if f1 <= f0 else u


def _coarse_guess(p: LcpProblem, min_size: int) -> Optional[np.ndarray]:
    """Active set predicted by the aggregated (piecewise constant) problem."""
    n = p.rhs.shape[0]
    if n <= min_size:
        return None
    from pyamg.aggregation.aggregate import standard_aggregation
    from pyamg.strength import symmetric_strength_of_connection

    agg, _ = standard_aggregation(symmetric_strength_of_connection(p.matrix))
    agg = sp.csr_matrix(agg, dtype=float)
    if agg.shape[1] >= n or agg.shape[1] < 2:
        return None
    coarse = LcpProblem((agg.T @ p.matrix @ agg).tocsr(), agg.T @ p.rhs, p.params, p.closed)
    uc = solve_active_set(coarse, min_size=min_size).u
    return (agg @ uc) <= 0.0


def solve_active_set(p: LcpProblem, max_iter: Optional[int] = None,
                     min_size: int = 48) -> LcpSolution:
    """Primal-dual active set iteration (semismooth Newton on min(u, Ku - sigma)).

    Each step fixes u = 0 on the active set and solves K u = sigma on the rest.
    On its own the free boundary advances about one cell per step, so larger
    problems start from the active set of an aggregated coarse problem.
    """
    _check_feasible(p)
    K = p.matrix
    sigma = p.rhs
    n = sigma.shape[0]
    diag = K.diagonal()
    cpar = np.where(diag > 0, diag, 1.0)
    max_iter = max_iter or (n + 20)
    guess = _coarse_guess(p, min_size)
    if guess is None:
        u = np.zeros(n)
        y = -sigma.copy()
    else:
        u = _solve_inactive(K, sigma, ~guess) if (guess.any() or not p.closed) else np.zeros(n)
        if not guess.any() and p.closed:
            guess = sigma < 0
            u = _solve_inactive(K, sigma, ~guess)
        y = K @ u - sigma
        y[~guess] = 0.0
    active = None
    seen = set()
    it = 0
    for it in range(1, max_iter + 1):
        new_active = y - cpar * u > 0
        if p.closed and not new_active.any():
            new_active[int(np.argmin(u - y / cpar))] = True
        if active is not None and np.array_equal(new_active, active):
            break
        key = new_active.tobytes()
        if key in seen:
            log.debug("active set cycled after %d steps", it)
            break
        seen.add(key)
        active = new_active
        u = _solve_inactive(K, sigma, ~active)
        y = K @ u - sigma
        y[~active] = 0.0
    sol = _finish(p, u, it, "active_set")
    if not sol.converged:
        log.info("active set residuals %.2e/%.2e; polishing",
                 sol.residual_feasibility, sol.residual_complementarity)
        u2 = polish(p, np.maximum(u, 0.0))
        sol = _finish(p, u2, it + 1, "active_set")
    return sol


def solve_brute(p: LcpProblem, max_dim: int = 16) -> LcpSolution:
    """Enumerate every active set; return the unique feasible candidate."""
    n = p.rhs.shape[0]
    if n > max_dim:
        raise ValueError(f"brute force limited to dimension {max_dim}, got {n}")
    _check_feasible(p)
    K = p.matrix.toarray()
    sigma = p.rhs
    found = None
    for bits in itertools.product((False, True), repeat=n):
        active = np.array(bits)
        inactive = ~active
        idx = np.flatnonzero(inactive)
        u = np.zeros(n)
        if idx.size:
            sub = K[np.ix_(idx, idx)]
            if np.linalg.matrix_rank(sub) < idx.size:
                continue
            u[idx] = np.linalg.solve(sub, sigma[idx])
        y = K @ u - sigma
        if u.min(initial=0.0) < -1e-12 or y.min(initial=0.0) < -1e-12:
            continue
        if found is None:
            found = u
        elif np.max(np.abs(found - u)) > 1e-9 * (1 + np.max(np.abs(u))):
            raise AssertionError("two distinct feasible active sets: LCP solution not unique")
    if found is None:
        raise InfeasibleError("no solution: no active set yields a feasible point")
    return _finish(p, found, 2 ** n, "brute")


SOLVERS = {"pgs": solve_pgs, "active_set": solve_active_set, "brute": solve_brute}


def solve(p: LcpProblem) -> LcpSolution:
    try:
        fn = SOLVERS[p.params.method]
    except KeyError:
        raise ValueError(f"unknown LCP method {p.params.method!r}") from None
    return fn(p)
