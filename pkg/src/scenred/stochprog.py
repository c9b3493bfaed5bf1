"""Two-stage stochastic programs: abstraction, evaluation and regret.

A concrete problem (see :mod:`scenred.suc`) implements :class:`TwoStageProblem`.
Everything here works against that contract only.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import DiscreteDistribution, ReducedDistribution, SolveStats
from .errors import DegenerateDenominator
from .solver import Backend, SolverConfig, get_backend, require_optimal

RAE_NONNEG_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FirstStageDecision:
    values: Mapping[str, np.ndarray]
    first_stage_cost: float

    def key(self) -> tuple:
        return tuple((k, self.values[k].tobytes()) for k in sorted(self.values))

    def same_as(self, other: "FirstStageDecision") -> bool:
        return self.key() == other.key()


@dataclass(frozen=True)
class TwoStageSolution:
    decision: FirstStageDecision
    objective: float
    certified: bool = True
    gap: float = 0.0
    time_ms: float = 0.0


class TwoStageProblem(ABC):
    """Capability contract for a two-stage stochastic MILP.

    Subclasses build the extensive form for any finite distribution and
    evaluate ``z(x, xi) = f(x) + G(x, xi)`` for a fixed first stage. The
    second stage must have relatively complete recourse.
    """

    def __init__(self, backend: Backend | None = None, config: SolverConfig | None = None):
        self.backend = backend or get_backend()
        self.config = config or SolverConfig()

    @abstractmethod
    def solve_extensive(self, dist: DiscreteDistribution) -> TwoStageSolution:
        ...

    @abstractmethod
    def evaluate_fixed(self, x: FirstStageDecision, xi: np.ndarray) -> float:
        ...

    @abstractmethod
    def fingerprint(self) -> str:
        ...

    def solve_single_scenario(self, xi) -> TwoStageSolution:
        xi = np.asarray(xi, dtype=float)
        return self.solve_extensive(DiscreteDistribution(xi.reshape(1, -1), [1.0]))

    def mean_scenario(self, dist: DiscreteDistribution) -> np.ndarray:
        return dist.mean()


def _as_dist(Q) -> DiscreteDistribution:
    return Q.to_distribution() if isinstance(Q, ReducedDistribution) else Q


def solve_two_stage(problem: TwoStageProblem, dist, allow_time_limit: bool = False) -> TwoStageSolution:
    sol = problem.solve_extensive(_as_dist(dist))
    if not sol.certified and not allow_time_limit:
        from .errors import TimeLimit
        raise TimeLimit(f"extensive form not solved to optimality (gap {sol.gap:.3g})")
    return sol


def evaluate_decision(problem: TwoStageProblem, x: FirstStageDecision, dist,
                      stats: SolveStats | None = None) -> float:
    """``sum_i p_i z(x, xi_i)`` from one second-stage LP per scenario."""
    dist = _as_dist(dist)
    vals = np.empty(dist.n)
    for k in range(dist.n):
        vals[k] = problem.evaluate_fixed(x, dist.values[k])
        if stats is not None:
            stats.add_lp(0.0)
    return float(dist.probabilities @ vals)


@dataclass(frozen=True)
class EvaluationResult:
    z_star_P: float
    z_fixed: float
    rae: float
    certified: bool = True
    decision: FirstStageDecision | None = field(default=None, compare=False)

    @property
    def rae_percent(self) -> float:
        return 100.0 * self.rae


class ZStarCache:
    """z*(P) and x*(P) keyed by (problem fingerprint, distribution fingerprint)."""

    def __init__(self):
        self._d: dict[tuple[str, str], TwoStageSolution] = {}
        self._lock = threading.Lock()

    def get(self, problem: TwoStageProblem, P: DiscreteDistribution) -> TwoStageSolution:
        key = (problem.fingerprint(), P.fingerprint())
        with self._lock:
            hit = self._d.get(key)
        if hit is None:
            hit = solve_two_stage(problem, P, allow_time_limit=True)
            with self._lock:
                self._d[key] = hit
        return hit

    def __len__(self):
        return len(self._d)


DEFAULT_CACHE = ZStarCache()


def rae(problem: TwoStageProblem, P: DiscreteDistribution, Q, cache: ZStarCache | None = None,
        stats: SolveStats | None = None) -> EvaluationResult:
    """Relative regret of deciding under ``Q`` when ``P`` is the truth."""
    cache = DEFAULT_CACHE if cache is None else cache
    full = cache.get(problem, P)
    z_star = full.objective
    if not z_star > 0:
        raise DegenerateDenominator(f"z*(P) = {z_star!r} must be positive; use an objective offset")
    Qd = _as_dist(Q)
    if Qd.fingerprint() == P.fingerprint():
        red = full
    else:
        red = solve_two_stage(problem, Qd, allow_time_limit=True)
        if stats is not None:
            stats.add_milp(red.time_ms)
    z_fixed = evaluate_decision(problem, red.decision, P, stats)
    return EvaluationResult(z_star, z_fixed, (z_fixed - z_star) / z_star,
                            certified=full.certified and red.certified, decision=red.decision)


def saa_baseline(problem: TwoStageProblem, P: DiscreteDistribution,
                 cache: ZStarCache | None = None) -> EvaluationResult:
    return rae(problem, P, P, cache)


@dataclass(frozen=True, eq=False)
class Theorem1Result:
    argmin: frozenset[int]
    rae: np.ndarray  # rae[j-1] for the Dirac at scenario j
    z_star_P: float
    expected_cost: np.ndarray  # z(x*(zeta_j), P)


def theorem1_oracle(problem: TwoStageProblem, P: DiscreteDistribution,
                    cache: ZStarCache | None = None, rel_tol: float = 1e-9) -> Theorem1Result:
    """RAE of every single-atom reduction ``delta_{zeta_j}``, by brute force.

    A Dirac reduction solves the single-scenario problem, so
    ``x*(delta_j) = x*(zeta_j)``; each is evaluated on the full distribution.
    """
    cache = DEFAULT_CACHE if cache is None else cache
    z_star = cache.get(problem, P).objective
    if not z_star > 0:
        raise DegenerateDenominator(f"z*(P) = {z_star!r} must be positive")
    cost = np.empty(P.n)
    for j in range(P.n):
        x_j = solve_two_stage(problem, DiscreteDistribution(P.values[j:j + 1], [1.0])).decision
        cost[j] = evaluate_decision(problem, x_j, P)
    r = (cost - z_star) / z_star
    lo = cost.min()
    argmin = frozenset(int(j) + 1 for j in np.flatnonzero(cost <= lo + rel_tol * abs(lo)))
    return Theorem1Result(argmin, r, z_star, cost)


def argmin_chain(Z: np.ndarray, C_pr: np.ndarray, p: np.ndarray, tol: float = 1e-9):
    """Argmin sets of ``sum_i p_i Z[i, j]`` and ``sum_i p_i C_pr[i, j]`` (1-based).

    The two coincide whenever ``C_pr = Z - diag(Z)[:, None]`` up to clamping,
    because the subtracted column-independent term cannot move the argmin.
    """
    out = []
    for M in (Z, C_pr):
        v = p @ M
        lo = v.min()
        scale = max(abs(lo), abs(v).max(), 1.0)
        out.append(frozenset(int(j) + 1 for j in np.flatnonzero(v <= lo + tol * scale)))
    return out[0], out[1]
