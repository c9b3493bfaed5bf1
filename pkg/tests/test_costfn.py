import numpy as np
import pytest

import oracles
from scenred import costfn
from scenred.core import DiscreteDistribution, equiprobable_from_vectors
from scenred.errors import ConfigError, NegativeRegret
from scenred.solver import get_backend
from scenred.suc import SucProblem, desk_instance, desk_variant


def draw(inst, n, seed):
    rng = np.random.default_rng(seed)
    return equiprobable_from_vectors(rng.uniform(0, 1, (n, inst.scenario_dim)) * inst.capacities()[0])


@pytest.fixture(scope="module")
def desk3():
    inst = desk_variant(7)
    return inst, SucProblem(inst), draw(inst, 3, 70)


def test_id_examples():
    P = equiprobable_from_vectors([[0.0, 0.0], [3.0, 4.0]])
    assert costfn.cost_matrix_id(P)[1, 2] == 25.0
    P = equiprobable_from_vectors([[0.0], [1.0], [2.0]])
    assert costfn.cost_matrix_id(P).entries.tolist() == [[0, 1, 4], [1, 0, 1], [4, 1, 0]]
    P = equiprobable_from_vectors([[1.0, 2.0]] * 3)
    C = costfn.cost_matrix_id(P)
    assert not C.entries.any() and C.stats.counts == (0, 0)


def test_evp_uses_mean_scenario():
    inst = desk_instance()
    prob = SucProblem(inst)
    P = DiscreteDistribution([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    assert np.allclose(prob.mean_scenario(P), [0.5, 0.5])
    sol = costfn.solve_evp(prob, P)
    want, _ = oracles.enumerate_optimum(inst, [[0.5, 0.5]], [1.0])
    assert sol.objective == pytest.approx(want, rel=1e-9)


def test_evp_mirrored_scenarios():
    inst = desk_instance()
    prob = SucProblem(inst)
    P = equiprobable_from_vectors([[0.3, 0.7], [0.7, 0.3]])
    assert np.allclose(prob.mean_scenario(P), [0.5, 0.5])


def test_mo_matches_fresh_lps(desk3):
    inst, prob, P = desk3
    C = costfn.cost_matrix_mo(prob, P)
    u = costfn.solve_evp(prob, P).decision.values["u"]
    v = [oracles.first_stage_cost(inst, u) + oracles.dispatch_lp(inst, u, inst.wind(x)) for x in P.values]
    want = np.abs(np.subtract.outer(v, v))
    assert np.allclose(C.entries, want, atol=1e-9)
    assert np.array_equal(C.entries, C.entries.T)


def test_br_matches_enumeration(desk3):
    inst, prob, P = desk3
    C = costfn.cost_matrix_br(prob, P)
    z = [oracles.enumerate_optimum(inst, [x], [1.0])[0] for x in P.values]
    assert np.allclose(C.entries, np.abs(np.subtract.outer(z, z)), atol=1e-9)
    E = C.entries
    for i in range(3):
        for j in range(3):
            for k in range(3):
                assert E[i, k] <= E[i, j] + E[j, k] + 1e-12


def oracle_cross(inst, P):
    n = P.n
    us = [oracles.enumerate_optimum(inst, [x], [1.0])[1] for x in P.values]
    Z = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            Z[i, j] = oracles.fixed_value(inst, us[j], [P.values[i]], [1.0])
    return Z


def test_pr_matches_enumeration(desk3):
    inst, prob, P = desk3
    C = costfn.cost_matrix_pr(prob, P)
    Z = oracle_cross(inst, P)
    assert np.allclose(C.entries, np.maximum(Z - np.diag(Z)[:, None], 0), atol=1e-8)
    assert (C.entries >= 0).all()


def test_cross_diagonal_and_optimality(desk3):
    inst, prob, P = desk3
    sols = costfn.solve_single_scenarios(prob, P)
    cross = costfn.cross_evaluate(prob, P, sols)
    assert np.array_equal(np.diag(cross.Z), sols.objectives)
    d = np.diag(cross.Z)
    assert (cross.Z >= d[:, None] - 1e-9 * np.abs(d)[:, None]).all()


def test_cross_constant_for_identical_scenarios():
    inst = desk_variant(2)
    prob = SucProblem(inst)
    x = np.array([0.3, 0.5, 0.1]) * inst.capacities()[0]
    P = equiprobable_from_vectors([x, x, x])
    cross = costfn.cross_evaluate(prob, P, costfn.solve_single_scenarios(prob, P))
    assert np.allclose(cross.Z, cross.Z[0, 0], rtol=1e-12)
    for kind in ("Br", "Be", "Pr"):
        assert np.allclose(costfn.build_cost_matrix(kind, P, prob).entries, 0, atol=1e-9)


def test_be_is_symmetrized_pr(desk3):
    _, prob, P = desk3
    shared = costfn.SharedSolves(prob, P)
    be = costfn.cost_matrix_be(prob, P, shared=shared)
    pr = costfn.cost_matrix_pr(prob, P, shared=shared)
    assert np.abs(be.entries - 0.5 * (pr.entries + pr.entries.T)).max() <= 1e-9
    assert np.array_equal(be.entries, be.entries.T)


@pytest.mark.parametrize("workers", [1, 3])
def test_table1_counts(workers):
    inst = desk_instance()
    prob = SucProblem(inst)
    n = 10
    P = draw(inst, n, 1)
    want = {"ID": (0, 0), "Mo": (1, n), "Br": (n, 0), "Be": (n, n * n - n), "Pr": (n, n * n - n)}
    for kind, counts in want.items():
        C = costfn.build_cost_matrix(kind, P, prob, workers=workers)
        assert C.stats.counts == counts, kind
        assert not C.stats.shared
        assert np.all(np.diag(C.entries) == 0)


def test_shared_mode_counts_once():
    inst = desk_instance()
    prob = SucProblem(inst)
    P = draw(inst, 4, 2)
    shared = costfn.SharedSolves(prob, P)
    br = costfn.build_cost_matrix("Br", P, prob, shared=shared)
    be = costfn.build_cost_matrix("Be", P, prob, shared=shared)
    pr = costfn.build_cost_matrix("Pr", P, prob, shared=shared)
    assert br.stats.counts == (4, 0) and not br.stats.shared
    assert be.stats.counts == (0, 12) and be.stats.shared
    assert pr.stats.counts == (0, 0) and pr.stats.shared


def test_parallel_results_identical():
    inst = desk_variant(4)
    prob = SucProblem(inst)
    P = draw(inst, 6, 3)
    a = costfn.cost_matrix_pr(prob, P, workers=1).entries
    b = costfn.cost_matrix_pr(prob, P, workers=4).entries
    assert np.array_equal(a, b)


def test_regret_clamps_tiny_negatives_and_rejects_large():
    Z = np.array([[10.0, 10.0 - 5e-7], [3.0, 2.0]])
    C = costfn.regret(costfn.CrossEvaluationMatrix(Z))
    assert C.entries.tolist() == [[0.0, 0.0], [1.0, 0.0]]
    with pytest.raises(NegativeRegret):
        costfn.regret(costfn.CrossEvaluationMatrix(np.array([[10.0, 9.0], [3.0, 2.0]])))


def test_problem_driven_kinds_need_a_problem():
    P = equiprobable_from_vectors([[0.0], [1.0]])
    with pytest.raises(ConfigError):
        costfn.build_cost_matrix("Pr", P)
    with pytest.raises(ConfigError):
        costfn.build_cost_matrix("XX", P)


def test_nonnegativity_on_random_instances():
    for seed in range(5):
        inst = desk_variant(seed)
        prob = SucProblem(inst)
        P = draw(inst, 5, seed)
        shared = costfn.SharedSolves(prob, P)
        for kind in ("Mo", "Br", "Be", "Pr"):
            C = costfn.build_cost_matrix(kind, P, prob, shared=shared)
            assert (C.entries >= 0).all()



@pytest.fixture(scope="module")
def rts_short():
    """24-bus system over three periods: big enough for simplex round-off to show."""
    from scenred.data import DrawSpec, SynthParams, synth_scenarios
    from scenred.data import draw as draw_pool
    from scenred.suc import load_rts24

    inst = load_rts24(horizon=3, first_period=5)
    pool = synth_scenarios(inst.capacities(), 3, 200, 2024, SynthParams(0.35, 0.2, 0.85, 0.6),
                           farm_ids=[w.id for w in inst.wind_farms])
    prob = SucProblem(inst, backend=get_backend("highs"))
    P = draw_pool(pool, DrawSpec(1, 12))
    return prob, P, costfn.solve_single_scenarios(prob, P)


def test_identical_commitments_give_identical_columns(rts_short):
    prob, P, sols = rts_short
    Z = costfn.cross_evaluate(prob, P, sols).Z
    keys = [d.key() for d in sols.decisions]
    pairs = [(a, b) for a in range(P.n) for b in range(a + 1, P.n) if keys[a] == keys[b]]
    assert pairs
    for a, b in pairs:
        rows = [i for i in range(P.n) if i not in (a, b)]
        assert np.array_equal(Z[rows, a], Z[rows, b])


def test_parallel_matches_serial_bitwise(rts_short):
    prob, P, sols = rts_short
    a = costfn.cross_evaluate(prob, P, sols, workers=1).Z
    b = costfn.cross_evaluate(prob, P, sols, workers=3).Z
    assert np.array_equal(a, b)
