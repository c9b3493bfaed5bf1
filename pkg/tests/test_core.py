import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenred.core import (CostMatrix, DiscreteDistribution, ReducedDistribution, SolveStats, SupportSubset,
                          equiprobable_from_vectors, validate_distribution)
from scenred.errors import (DimensionMismatch, EmptyInput, IndexOutOfRange, MatrixShapeMismatch, NegativeProbability,
                            NonFiniteEntry, NonNormalized, ValidationError)


def test_uniform_two_point_is_valid():
    validate_distribution([[0.0, 1.0], [2.0, 3.0]], [0.5, 0.5])


def test_probabilities_must_sum_to_one():
    with pytest.raises(NonNormalized):
        validate_distribution([[0.0], [1.0]], [0.6, 0.6])


def test_negative_probability_rejected():
    with pytest.raises(NegativeProbability):
        DiscreteDistribution([[0.0], [1.0]], [1.5, -0.5])


def test_ragged_scenarios_rejected():
    with pytest.raises(DimensionMismatch):
        DiscreteDistribution([[0.0, 1.0], [0.0, 1.0, 2.0]], [0.5, 0.5])


def test_non_finite_entries_rejected():
    with pytest.raises(NonFiniteEntry):
        DiscreteDistribution([[np.nan], [1.0]], [0.5, 0.5])
    with pytest.raises(NonFiniteEntry):
        DiscreteDistribution([[0.0], [np.inf]], [0.5, 0.5])


def test_normalization_tolerance_is_tight():
    DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5 + 5e-13])
    with pytest.raises(NonNormalized):
        DiscreteDistribution([[0.0], [1.0]], [0.5, 0.5 + 1e-11])


def test_equiprobable():
    d = equiprobable_from_vectors([[1.0], [2.0], [3.0], [4.0]])
    assert d.probabilities.tolist() == [0.25] * 4
    assert list(d.ids) == [1, 2, 3, 4]
    assert equiprobable_from_vectors([[7.0, 8.0]]).probabilities.tolist() == [1.0]


def test_equiprobable_errors():
    with pytest.raises(EmptyInput):
        equiprobable_from_vectors([])
    with pytest.raises(DimensionMismatch):
        equiprobable_from_vectors([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0, 3.0]])


def test_ids_are_one_based():
    d = equiprobable_from_vectors([[1.0], [2.0]])
    assert d.scenario(1).values.tolist() == [1.0]
    assert d.scenario(2).id == 2
    with pytest.raises(IndexOutOfRange):
        d.scenario(0)


def test_distribution_is_immutable():
    d = equiprobable_from_vectors([[1.0], [2.0]])
    with pytest.raises(ValueError):
        d.values[0, 0] = 5.0
    with pytest.raises(ValueError):
        d.probabilities[0] = 1.0


def test_duplicate_vectors_allowed():
    d = equiprobable_from_vectors([[1.0], [1.0]])
    assert d.n == 2


def test_support_subset_keeps_draw_order():
    J = SupportSubset((3, 1, 2), 4)
    assert J.indices == (3, 1, 2)
    assert J.zero_based().tolist() == [2, 0, 1]
    with pytest.raises(ValidationError):
        SupportSubset((1, 1), 3)
    with pytest.raises(IndexOutOfRange):
        SupportSubset((5,), 4)


def test_cost_matrix_checks():
    with pytest.raises(MatrixShapeMismatch):
        CostMatrix(np.zeros((2, 3)), "ID")
    with pytest.raises(ValidationError):
        CostMatrix(np.zeros((2, 2)), "XX")
    with pytest.raises(NonFiniteEntry):
        CostMatrix(np.array([[0, np.nan], [1, 0]]), "ID")
    C = CostMatrix(np.array([[0.0, 2.0], [3.0, 0.0]]), "Pr")
    assert C[1, 2] == 2.0 and C[2, 1] == 3.0


def test_solve_stats_accumulate():
    s = SolveStats()
    s.add_milp(2.0)
    s.add_lp(1.0)
    s.add_lp(1.5)
    assert s.counts == (1, 2)
    assert s.wall_time_ms == {"milp": 2.0, "lp": 2.5}


def test_reduced_distribution_keeps_mass_unnormalized():
    base = equiprobable_from_vectors([[0.0], [1.0], [2.0]])
    red = ReducedDistribution(base, SupportSubset((2,), 3), np.array([1.0]), {1: 2, 3: 2})
    d = red.to_distribution()
    assert d.n == 1 and d.values.tolist() == [[1.0]]
    assert red.clusters() == {2: [1, 3]}


@given(st.lists(st.floats(0.01, 10), min_size=1, max_size=20))
def test_normalized_weights_validate(w):
    p = np.array(w) / np.sum(w)
    d = DiscreteDistribution(np.zeros((len(w), 1)), p)
    assert abs(d.probabilities.sum() - 1) <= 1e-12
