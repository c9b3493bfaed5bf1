import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_distance
from scenred import kernels
from scenred.core import DiscreteDistribution
from scenred.costfn import cost_matrix_id
from scenred.errors import EmptySubset, IndexOutOfRange, InfeasibleMarginals
from scenred.transport import discrete_distance, redistribute, transport_lp_oracle


@pytest.fixture
def line():
    P = DiscreteDistribution([[0.0], [1.0], [2.0]], [0.5, 0.3, 0.2])
    return P, cost_matrix_id(P)


def test_distance_to_middle_point(line):
    P, C = line
    assert discrete_distance(P, (2,), C) == pytest.approx(0.7, abs=1e-15)


def test_distance_to_endpoints(line):
    P, C = line
    assert discrete_distance(P, (1, 3), C) == pytest.approx(0.3, abs=1e-15)


def test_full_subset_has_zero_distance(line):
    P, C = line
    assert discrete_distance(P, (1, 2, 3), C) == 0.0


def test_empty_and_out_of_range_subsets(line):
    P, C = line
    with pytest.raises(EmptySubset):
        discrete_distance(P, (), C)
    with pytest.raises(IndexOutOfRange):
        discrete_distance(P, (4,), C)
    with pytest.raises(IndexOutOfRange):
        redistribute(P, (0,), C)


def test_redistribute_to_middle(line):
    P, C = line
    Q = redistribute(P, (2,), C)
    assert Q.probabilities.tolist() == pytest.approx([1.0])
    assert Q.assignment == {1: 2, 3: 2}


def test_redistribute_full_subset_keeps_p(line):
    P, C = line
    Q = redistribute(P, (1, 2, 3), C)
    assert Q.probabilities.tolist() == [0.5, 0.3, 0.2]
    assert Q.assignment == {}


def test_redistribute_two_points_nothing_moves():
    P = DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5])
    Q = redistribute(P, (1, 2), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert Q.probabilities.tolist() == [0.5, 0.5]


def test_ties_go_to_smallest_selected_id():
    P = DiscreteDistribution([[0.0], [1.0], [2.0]], [0.2, 0.5, 0.3])
    C = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    Q = redistribute(P, (3, 2), C)  # scenario 1 is equidistant from 2 and 3
    assert Q.assignment == {1: 2}
    assert Q.mass(2) == pytest.approx(0.7) and Q.mass(3) == pytest.approx(0.3)


def test_lp_oracle_matches_line_example(line):
    P, C = line
    plan = transport_lp_oracle(P, np.array([1.0]), C.entries[:, [1]])
    assert plan.objective == pytest.approx(0.7, abs=1e-10)


def test_lp_oracle_identity_plan(line):
    P, C = line
    plan = transport_lp_oracle(P, P.probabilities, C.entries)
    assert plan.objective == pytest.approx(0.0, abs=1e-12)


def test_lp_oracle_rejects_bad_marginals(line):
    P, C = line
    with pytest.raises(InfeasibleMarginals):
        transport_lp_oracle(P, np.array([0.9]), C.entries[:, [1]])


def test_lp_oracle_plan_marginals(line):
    P, C = line
    Q = redistribute(P, (1, 3), C)
    plan = transport_lp_oracle(P, Q.probabilities, C.entries[:, [0, 2]])
    assert np.allclose(plan.plan.sum(axis=1), P.probabilities, atol=1e-9)
    assert np.allclose(plan.plan.sum(axis=0), Q.probabilities, atol=1e-9)
    assert plan.plan.min() >= -1e-12


@st.composite
def instances(draw):
    n = draw(st.integers(2, 9))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n))
    C = rng.uniform(0, 5, (n, n))
    np.fill_diagonal(C, 0)
    k = draw(st.integers(1, n))
    J = tuple(int(j) + 1 for j in rng.permutation(n)[:k])
    return DiscreteDistribution(np.zeros((n, 1)), p), C, J


@given(instances())
def test_distance_matches_brute_force(inst):
    P, C, J = inst
    assert discrete_distance(P, J, C) == pytest.approx(brute_distance(P.probabilities, C, J), abs=1e-14)


@given(instances())
def test_equivalence_with_lp(inst):
    P, C, J = inst
    Q = redistribute(P, J, C)
    val = discrete_distance(P, J, C)
    lp = transport_lp_oracle(P, Q.probabilities, C[:, np.array(J) - 1]).objective
    assert abs(val - lp) <= 1e-8 * (1 + abs(val))


@given(instances())
def test_conservation_and_assignment(inst):
    P, C, J = inst
    Q = redistribute(P, J, C)
    assert abs(Q.probabilities.sum() - 1) <= 1e-12
    for j in J:
        assert Q.mass(j) >= P.probabilities[j - 1]
    assert sorted(Q.assignment) == sorted(set(range(1, P.n + 1)) - set(J))
    for i, j in Q.assignment.items():
        assert C[i - 1, j - 1] == min(C[i - 1, k - 1] for k in J)


@given(instances(), st.integers(0, 2**31))
def test_monotone_in_subset(inst, seed):
    P, C, J = inst
    extra = np.random.default_rng(seed).integers(1, P.n + 1)
    J2 = tuple(dict.fromkeys(J + (int(extra),)))
    assert discrete_distance(P, J2, C) <= discrete_distance(P, J, C) + 1e-15
    assert discrete_distance(P, J, C) >= 0


def test_compensated_sum_for_large_n():
    # above 10^4 terms the outer sum is compensated; compare with an exact fsum
    n = 20001
    p = np.full(n, 1.0 / n)
    v = np.random.default_rng(0).uniform(0, 1e-3, n)
    skip = np.zeros(n, dtype=np.uint8)
    skip[0] = 1
    got = kernels.masked_weighted_sum(p, v, skip)
    assert got == pytest.approx(math.fsum(p[1:] * v[1:]), rel=1e-15)
