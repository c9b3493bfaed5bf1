"""Greedy forward selection of a reduced scenario set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import CostMatrix, DiscreteDistribution, ReducedDistribution, SupportSubset
from .errors import BudgetExceeded, InvalidM, MatrixShapeMismatch
from .transport import _entries, discrete_distance, redistribute

ENUMERATION_BUDGET = 5000


@dataclass(frozen=True)
class Pick:
    iteration: int
    index: int
    candidates: dict[int, float]


@dataclass(frozen=True, eq=False)
class SelectionTrace:
    picks: tuple[Pick, ...]
    final: ReducedDistribution
    objectives: np.ndarray  # (m, n), NaN where the id was already selected

    @property
    def subset(self) -> SupportSubset:
        return self.final.subset

    @property
    def indices(self) -> tuple[int, ...]:
        return self.final.subset.indices


def forward_select(P: DiscreteDistribution, m: int, C) -> SelectionTrace:
    """Select ``m`` scenarios greedily, then redistribute probabilities.

    At each iteration the candidate ``j`` minimising
    ``sum_{i in R \\ {j}} p_i * min_{k in J + {j}} C[i, k]`` is added, where
    ``R`` is the set of not-yet-selected ids. Ties go to the smallest id.
    """
    n = P.n
    if isinstance(C, CostMatrix) and C.n != n:
        raise MatrixShapeMismatch(f"cost matrix is {C.n}x{C.n}, distribution has n={n}")
    M = _entries(C, n)
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= n:
        raise InvalidM(f"m must be an integer in 1..{n}, got {m!r}")
    picks0, obj = kernels.forward_select(M, np.ascontiguousarray(P.probabilities), int(m))
    picks = []
    for k, j in enumerate(picks0):
        row = obj[k]
        cand = {int(i) + 1: float(row[i]) for i in np.flatnonzero(~np.isnan(row))}
        picks.append(Pick(k + 1, int(j) + 1, cand))
    J = SupportSubset(tuple(int(j) + 1 for j in picks0), n)
    obj.setflags(write=False)
    return SelectionTrace(tuple(picks), redistribute(P, J, M), obj)


def first_pick_globally_optimal_check(P: DiscreteDistribution, C, budget: int = ENUMERATION_BUDGET,
                                      tol: float = 1e-10) -> bool:
    """True iff the first greedy pick attains ``min_j D(P, {j})`` by enumeration."""
    if P.n > budget:
        raise BudgetExceeded(f"n={P.n} exceeds enumeration budget {budget}")
    M = _entries(C, P.n)
    pick = forward_select(P, 1, M).indices[0]
    dists = [discrete_distance(P, (j,), M) for j in range(1, P.n + 1)]
    return dists[pick - 1] <= min(dists) + tol
