import numpy as np
import pytest

from scenred.errors import ConfigError, Infeasible, SolverFailure
from scenred.solver import Model, Solution, get_backend, require_optimal


def knapsack():
    m = Model()
    x = m.add_vars(4, cost=[-5.0, -4.0, -3.0, -2.0], binary=True)
    m.add_row(x, [2.0, 3.0, 1.0, 4.0], hi=5.0)
    m.offset = 1.5
    return m.compile()


def small_lp(cap=4.0):
    m = Model()
    x = m.add_vars(2, ub=[3.0, 3.0], cost=[1.0, 2.0])
    m.add_rows([(x[0], 1.0), (x[1], 1.0)], lo=cap)
    return m.compile()


def test_milp(backend):
    sol = backend.solve(knapsack())
    assert sol.certified
    assert sol.objective == pytest.approx(-9.0 + 1.5)
    assert np.allclose(sol.x, [1, 1, 0, 0])


def test_lp(backend):
    sol = backend.solve(small_lp())
    assert sol.certified and sol.objective == pytest.approx(5.0)
    assert np.allclose(sol.x, [3.0, 1.0])


def test_infeasible(backend):
    sol = backend.solve(small_lp(cap=7.0))
    assert sol.status == "infeasible"
    with pytest.raises(Infeasible):
        require_optimal(sol, "toy")


def test_session_resolves_match_fresh_solves(backend):
    tmpl = small_lp()
    sess = backend.lp_session(tmpl)
    for cap in (1.0, 4.0, 6.0, 2.5):
        lo = np.array([cap])
        a = sess.solve(tmpl.lb, tmpl.ub, lo, tmpl.row_hi)
        b = backend.solve(tmpl.with_bounds(row_lo=lo))
        assert a.objective == pytest.approx(b.objective, abs=1e-12)


def test_backends_agree_on_model():
    a, b = get_backend("scipy"), get_backend("highs")
    for model in (knapsack(), small_lp()):
        assert a.solve(model).objective == pytest.approx(b.solve(model).objective, abs=1e-12)


def test_env_selection(monkeypatch):
    monkeypatch.setenv("SCENRED_SOLVER", "scipy")
    assert get_backend().name == "scipy"
    monkeypatch.setenv("SCENRED_SOLVER", "highs")
    assert get_backend().name == "highs"
    monkeypatch.setenv("SCENRED_SOLVER", "cplex")
    with pytest.raises(ConfigError):
        get_backend()


def test_require_optimal_status_handling():
    tl = Solution("time_limit", 1.0, np.zeros(1))
    assert require_optimal(tl, "x", allow_time_limit=True) is tl
    with pytest.raises(SolverFailure):
        require_optimal(tl, "x")
    with pytest.raises(SolverFailure):
        require_optimal(Solution("error", float("nan"), None), "x")
