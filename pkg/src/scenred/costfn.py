"""The five transport cost functions and their solver-call accounting.

Input-driven:
    ``ID``  squared Euclidean distance between scenario vectors.
Problem-driven (``Z[i, j] = z(x*(zeta_j), xi_i)``):
    ``Mo``  ``|z(x_evp, xi_i) - z(x_evp, xi_j)|``           1 MILP,  n LPs
    ``Br``  ``|Z[i, i] - Z[j, j]|``                        n MILPs, 0 LPs
    ``Be``  ``(Z[i, j] - Z[i, i] + Z[j, i] - Z[j, j]) / 2``  n MILPs, n^2 - n LPs
    ``Pr``  ``Z[i, j] - Z[i, i]``                          n MILPs, n^2 - n LPs

Diagonals are zero by definition and never solved for. A
:class:`SharedSolves` object lets ``Br``, ``Be`` and ``Pr`` reuse single
scenario solutions and the cross-evaluation matrix; matrices built from
reused work carry ``stats.shared = True`` and count only new solves.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import COST_KINDS, CostMatrix, DiscreteDistribution, SolveStats
from .errors import ConfigError, NegativeRegret, ValidationError
from .stochprog import FirstStageDecision, TwoStageProblem, TwoStageSolution, solve_two_stage

CLAMP_REL = 1e-7


def _parallel(fn, n_items: int, workers: int) -> list:
    """Run ``fn(k)`` for ``k < n_items``; results land in slot ``k``."""
    out = [None] * n_items
    if workers <= 1 or n_items <= 1:
        for k in range(n_items):
            out[k] = fn(k)
        return out

    def job(k):
        out[k] = fn(k)

    with ThreadPoolExecutor(max_workers=workers) as ex:
        for f in [ex.submit(job, k) for k in range(n_items)]:
            f.result()
    return out


class _Counter:
    """Thread-safe front for a :class:`SolveStats`."""

    def __init__(self, stats: SolveStats):
        self.stats = stats
        self.lock = threading.Lock()

    def milp(self, ms):
        with self.lock:
            self.stats.add_milp(ms)

    def lp(self, ms):
        with self.lock:
            self.stats.add_lp(ms)


def _timed_eval(problem: TwoStageProblem, x: FirstStageDecision, xi, counter: _Counter) -> float:
    t0 = time.perf_counter()
    v = problem.evaluate_fixed(x, xi)
    counter.lp((time.perf_counter() - t0) * 1e3)
    return v


# -- input-driven ----------------------------------------------------------------

def cost_matrix_id(P: DiscreteDistribution) -> CostMatrix:
    C = kernels.sq_euclidean(np.ascontiguousarray(P.values))
    np.fill_diagonal(C, 0.0)
    return CostMatrix(C, "ID", SolveStats())


# -- problem-driven ----------------------------------------------------------------

def solve_evp(problem: TwoStageProblem, P: DiscreteDistribution,
              stats: SolveStats | None = None) -> TwoStageSolution:
    """Solve the single-scenario problem at the mean scenario."""
    sol = solve_two_stage(problem, DiscreteDistribution(problem.mean_scenario(P).reshape(1, -1), [1.0]))
    if stats is not None:
        stats.add_milp(sol.time_ms)
    return sol


def cost_matrix_mo(problem: TwoStageProblem, P: DiscreteDistribution, workers: int = 1) -> CostMatrix:
    stats = SolveStats()
    x_bar = solve_evp(problem, P, stats).decision
    counter = _Counter(stats)
    v = np.array(_parallel(lambda k: _timed_eval(problem, x_bar, P.values[k], counter), P.n, workers))
    C = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(C, 0.0)
    return CostMatrix(C, "Mo", stats)


@dataclass(frozen=True, eq=False)
class SingleScenarioSolutions:
    decisions: tuple[FirstStageDecision, ...]
    objectives: np.ndarray  # z(x*(xi_i), xi_i)
    certified: np.ndarray

    def __post_init__(self):
        if len(self.decisions) != len(self.objectives):
            raise ValidationError("decisions and objectives differ in length")
        if not np.all(np.isfinite(self.objectives)):
            raise ValidationError("single-scenario objectives must be finite")

    @property
    def n(self) -> int:
        return len(self.decisions)


def solve_single_scenarios(problem: TwoStageProblem, P: DiscreteDistribution,
                           stats: SolveStats | None = None, workers: int = 1) -> SingleScenarioSolutions:
    counter = _Counter(stats if stats is not None else SolveStats())

    def one(k):
        sol = solve_two_stage(problem, DiscreteDistribution(P.values[k:k + 1], [1.0]), allow_time_limit=True)
        counter.milp(sol.time_ms)
        return sol

    sols = _parallel(one, P.n, workers)
    return SingleScenarioSolutions(tuple(s.decision for s in sols), np.array([s.objective for s in sols]),
                                   np.array([s.certified for s in sols]))


@dataclass(frozen=True, eq=False)
class CrossEvaluationMatrix:
    """``Z[i, j] = z(x*(zeta_j), xi_i)`` (0-based storage)."""

    Z: np.ndarray

    def __post_init__(self):
        Z = np.array(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ValidationError(f"cross-evaluation matrix must be square, got {Z.shape}")
        Z.setflags(write=False)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    def __getitem__(self, ij):
        i, j = ij
        return float(self.Z[i - 1, j - 1])

    def min_optimality_slack(self) -> float:
        """``min_ij (Z[i, j] - Z[i, i]) / max(1, |Z[i, i]|)``; nonnegative at exact optimality."""
        d = np.diag(self.Z)
        return float(np.min((self.Z - d[:, None]) / np.maximum(1.0, np.abs(d))[:, None]))


def cross_evaluate(problem: TwoStageProblem, P: DiscreteDistribution, solutions: SingleScenarioSolutions,
                   stats: SolveStats | None = None, workers: int = 1) -> CrossEvaluationMatrix:
    """Fill ``Z`` with exactly ``n^2 - n`` second-stage LPs; the diagonal is copied."""
    n = P.n
    if solutions.n != n:
        raise ValidationError(f"{solutions.n} solutions for {n} scenarios")
    counter = _Counter(stats if stats is not None else SolveStats())
    Z = np.empty((n, n))
    Z[np.diag_indices(n)] = solutions.objectives

    def column(j):
        x = solutions.decisions[j]
        col = np.empty(n)
        for i in range(n):
            if i != j:
                col[i] = _timed_eval(problem, x, P.values[i], counter)
        return col

    for j, col in enumerate(_parallel(column, n, workers)):
        mask = np.arange(n) != j
        Z[mask, j] = col[mask]
    return CrossEvaluationMatrix(Z)


class SharedSolves:
    """Cache of single-scenario solutions and ``Z`` for one (problem, P)."""

    def __init__(self, problem: TwoStageProblem, P: DiscreteDistribution, workers: int = 1):
        self.problem, self.P, self.workers = problem, P, workers
        self._solutions: SingleScenarioSolutions | None = None
        self._cross: CrossEvaluationMatrix | None = None

    def solutions(self, stats: SolveStats) -> SingleScenarioSolutions:
        if self._solutions is None:
            self._solutions = solve_single_scenarios(self.problem, self.P, stats, self.workers)
        else:
            stats.shared = True
        return self._solutions

    def cross(self, stats: SolveStats) -> CrossEvaluationMatrix:
        if self._cross is None:
            sols = self.solutions(stats)
            self._cross = cross_evaluate(self.problem, self.P, sols, stats, self.workers)
        else:
            stats.shared = True
        return self._cross


def _shared(problem, P, workers, shared: SharedSolves | None) -> SharedSolves:
    if shared is None:
        return SharedSolves(problem, P, workers)
    if shared.P.fingerprint() != P.fingerprint() or shared.problem is not problem:
        raise ValidationError("shared solves belong to a different problem or distribution")
    return shared


def cost_matrix_br(problem: TwoStageProblem, P: DiscreteDistribution, workers: int = 1,
                   shared: SharedSolves | None = None) -> CostMatrix:
    stats = SolveStats()
    z = _shared(problem, P, workers, shared).solutions(stats).objectives
    C = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(C, 0.0)
    return CostMatrix(C, "Br", stats)


def symmetric_loss(cross: CrossEvaluationMatrix, stats: SolveStats | None = None,
                   clamp_rel: float = CLAMP_REL) -> CostMatrix:
    """Symmetrized regret; built from the clamped regret so solver noise cannot make it negative."""
    R = regret(cross, clamp_rel=clamp_rel).entries
    C = 0.5 * (R + R.T)
    return CostMatrix(C, "Be", stats or SolveStats())


def regret(cross: CrossEvaluationMatrix, stats: SolveStats | None = None,
           clamp_rel: float = CLAMP_REL) -> CostMatrix:
    """``Z[i, j] - Z[i, i]``; entries in ``[-eps_i, 0)`` become 0, lower ones raise.

    ``eps_i = clamp_rel * |Z[i, i]|``.
    """
    Z = cross.Z
    d = np.diag(Z)
    C = Z - d[:, None]
    np.fill_diagonal(C, 0.0)
    eps = clamp_rel * np.abs(d)[:, None]
    bad = np.argwhere(C < -eps)
    if bad.size:
        i, j = bad[0]
        raise NegativeRegret(f"regret C[{i + 1}, {j + 1}] = {C[i, j]:.6g} below -{eps[i, 0]:.3g}; "
                             "single-scenario MILPs were not solved tightly enough")
    C[C < 0] = 0.0
    return CostMatrix(C, "Pr", stats or SolveStats())


def cost_matrix_be(problem: TwoStageProblem, P: DiscreteDistribution, workers: int = 1,
                   shared: SharedSolves | None = None) -> CostMatrix:
    stats = SolveStats()
    return symmetric_loss(_shared(problem, P, workers, shared).cross(stats), stats)


def cost_matrix_pr(problem: TwoStageProblem, P: DiscreteDistribution, workers: int = 1,
                   shared: SharedSolves | None = None) -> CostMatrix:
    stats = SolveStats()
    return regret(_shared(problem, P, workers, shared).cross(stats), stats)


PROBLEM_DRIVEN = ("Mo", "Br", "Be", "Pr")


def build_cost_matrix(kind: str, P: DiscreteDistribution, problem: TwoStageProblem | None = None,
                      workers: int = 1, shared: SharedSolves | None = None) -> CostMatrix:
    if kind not in COST_KINDS:
        raise ConfigError(f"unknown cost function {kind!r}; choose from {', '.join(COST_KINDS)}")
    if kind == "ID":
        return cost_matrix_id(P)
    if problem is None:
        raise ConfigError(f"cost function {kind} needs an optimization problem instance")
    if kind == "Mo":
        return cost_matrix_mo(problem, P, workers)
    fn = {"Br": cost_matrix_br, "Be": cost_matrix_be, "Pr": cost_matrix_pr}[kind]
    return fn(problem, P, workers, shared)
