import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from balayage.grid import build_circle
from balayage.obstacle import (InfeasibleError, LcpProblem, SolverParams, objective, residuals,
                               solve, solve_active_set, solve_brute, solve_pgs)


def _path_laplacian(n, ground=0.0):
    K = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tolil()
    K[0, 0] = 1
    K[n - 1, n - 1] = 1 + ground
    return K.tocsr()


def _problem(n, seed, ground=0.0, method="active_set"):
    rng = np.random.default_rng(seed)
    sigma = rng.normal(size=n)
    if ground == 0.0:
        sigma -= sigma.sum() / n + 0.1
    return LcpProblem(_path_laplacian(n, ground), sigma, SolverParams(method=method), closed=ground == 0.0)


@given(n=st.integers(3, 10), seed=st.integers(0, 10_000), ground=st.sampled_from([0.0, 1.0]))
@settings(max_examples=40, deadline=None)
def test_solvers_agree_with_enumeration(n, seed, ground):
    p = _problem(n, seed, ground)
    ref = solve_brute(p).u
    for fn in (solve_active_set, solve_pgs):
        sol = fn(p)
        assert sol.converged
        assert np.abs(sol.u - ref).max() < 1e-6 * (1 + np.abs(ref).max())


def test_pgs_objective_never_increases():
    m = build_circle(40)
    rng = np.random.default_rng(3)
    sigma = rng.normal(size=40)
    sigma -= sigma.mean() + 0.05
    p = LcpProblem(m.stiffness, sigma, SolverParams(method="pgs", relaxation=1.0))
    sol = solve_pgs(p, record_objective=True)
    hist = np.array(sol.objective_history)
    assert len(hist) > 1
    assert (np.diff(hist) <= 1e-12 * np.abs(hist).max()).all()


def test_solution_minimizes_objective():
    p = _problem(8, 11)
    u = solve(p).u
    rng = np.random.default_rng(0)
    base = objective(p, u)
    for _ in range(50):
        w = np.maximum(u + 0.05 * rng.normal(size=u.size), 0)
        assert objective(p, w) >= base - 1e-12


def test_zero_charge_gives_zero():
    p = LcpProblem(_path_laplacian(5), np.zeros(5))
    assert not solve(p).u.any()


def test_positive_total_is_infeasible():
    p = LcpProblem(_path_laplacian(5), np.full(5, 0.1))
    with pytest.raises(InfeasibleError):
        solve(p)
    with pytest.raises(InfeasibleError):
        solve_brute(p)


def test_residuals_are_scaled():
    p = _problem(6, 2)
    sol = solve(p)
    f, c = residuals(p, sol.u)
    assert f <= 1e-10 and c <= 1e-10
    assert residuals(p, sol.u + 1.0)[1] > 0


def test_parameters_validated():
    with pytest.raises(ValueError):
        SolverParams.from_dict({"omega": 1.2})
    with pytest.raises(ValueError):
        solve(LcpProblem(_path_laplacian(3), np.zeros(3), SolverParams(method="newton")))
    with pytest.raises(ValueError):
        LcpProblem(sp.csr_matrix(np.array([[1.0, 0.5], [0.0, 1.0]])), np.zeros(2))


def test_brute_force_size_limit():
    with pytest.raises(ValueError):
        solve_brute(LcpProblem(_path_laplacian(20), np.zeros(20)), max_dim=16)
