import csv
import math

import pytest

from balayage.radial import (TABLE_COLUMNS, RadialScenario, closed_form_q, closed_form_s,
                             excess_bound_check, excess_limit, limit_fraction, matched_s,
                             neumann_s, radial_solve, table_rows, write_table)

T = {1: 0.1, 2: 0.1, 3: 0.1, 5: 0.05}


def test_scenario_validation():
    with pytest.raises(ValueError):
        RadialScenario(0, 0.8, 0.1, 10)
    with pytest.raises(ValueError):
        RadialScenario(3, 1.2, 0.1, 10)
    with pytest.raises(ValueError):
        RadialScenario(5, 0.8, 0.1, 10)  # t above rho^5/5
    with pytest.raises(ValueError):
        RadialScenario(2, 0.8, 0.1, 10, bc="robin")


def test_closed_form_reference_values():
    assert closed_form_s(n=3, rho=0.8, t=0.1, R=10) == pytest.approx(0.6735, abs=5e-4)
    assert closed_form_s(n=3, rho=0.8, t=0.1, R=math.inf) == pytest.approx((0.8 ** 3 - 0.2) ** (1 / 3), abs=1e-9)
    assert closed_form_s(n=2, rho=0.8, t=0.1, R=math.inf) == pytest.approx(math.sqrt(0.8 ** 2 - 0.2), abs=1e-9)


def test_matching_agrees_with_closed_form_in_the_plane():
    for R in (2, 10, 100):
        assert matched_s(n=2, rho=0.8, t=0.1, R=R) == pytest.approx(closed_form_s(n=2, rho=0.8, t=0.1, R=R), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_numeric_radius_tracks_matching(n):
    sc = RadialScenario(n, 0.8, T[n], 10.0, n_cells=1000)
    res = radial_solve(sc)
    assert abs(res.s_numeric - res.s_matched) <= 3 * sc.spacing
    assert res.q_R == pytest.approx(closed_form_q(sc, res.s_matched), rel=0.05)


def test_neumann_conserves_mass():
    sc = RadialScenario(3, 0.8, 0.1, 2.0, bc="neumann", n_cells=800)
    res = radial_solve(sc)
    assert abs(res.s_numeric - neumann_s(sc)) <= 3 * sc.spacing
    assert res.q_R == pytest.approx(0.0, abs=1e-9)


def test_limit_fraction_values():
    assert limit_fraction(2, 0.8, 0.1) == 0.0
    assert limit_fraction(1, 0.8, 0.1) == 0.0
    # s^2 = rho^2 - 2t in the limit
    s = math.sqrt(0.8 ** 2 - 0.2)
    assert limit_fraction(3, 0.8, 0.1) == pytest.approx(1 + (s ** 3 - 0.8 ** 3) / 0.3)


def test_excess_limit_extrapolation_n3():
    ex = excess_limit(3, radii=(10, 30), h=0.05)
    assert ex.limit == pytest.approx(ex.matched, abs=0.02)
    assert ex.expected == pytest.approx(1 / 3)


def test_excess_bound_holds():
    for n in (1, 2, 3):
        rep = excess_bound_check(RadialScenario(n, 0.8, 0.1, 10.0, n_cells=1000))
        assert rep.passed and rep.slack > 0
    with pytest.raises(ValueError):
        excess_bound_check(RadialScenario(2, 0.8, 0.1, 2.0, bc="neumann", n_cells=200))


def test_table(tmp_path):
    rows = table_rows([RadialScenario(2, 0.8, 0.1, 4.0, n_cells=200),
                       RadialScenario(2, 0.8, 0.1, 4.0, bc="neumann", n_cells=200)])
    write_table(rows, tmp_path / "t.csv")
    with open(tmp_path / "t.csv") as fh:
        got = list(csv.reader(fh))
    assert got[0] == TABLE_COLUMNS
    assert got[1][TABLE_COLUMNS.index("bound_ok")] == "True"
    assert got[2][TABLE_COLUMNS.index("bound")] == ""
