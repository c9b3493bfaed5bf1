"""Self-checks run by ``scenred verify``.

Each suite returns a :class:`SuiteResult` with the number of instances
checked and the worst observed error. The ``perturb_diagonal`` fault lowers
the cross-evaluation diagonal before the regret matrix is formed; the
theorem suite is expected to catch it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import costfn
from .config import VerifySettings
from .core import DiscreteDistribution, SupportSubset, equiprobable_from_vectors
from .errors import VerificationFailure
from .selection import first_pick_globally_optimal_check, forward_select
from .solver import SolverConfig
from .stochprog import ZStarCache, argmin_chain, theorem1_oracle
from .suc import SucProblem, desk_instance, desk_variant
from .transport import discrete_distance, redistribute, transport_lp_oracle

FAULTS = ("perturb_diagonal",)


@dataclass
class SuiteResult:
    name: str
    instances: int
    max_error: float
    tolerance: float
    failures: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.instances > 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        s = (f"{status}  {self.name:<16} instances={self.instances:<4} max_error={self.max_error:.3e} "
             f"tolerance={self.tolerance:.1e} failures={self.failures}")
        return s + (f"  ({self.note})" if self.note else "")


def random_transport_instance(rng: np.random.Generator):
    """Random (P, J, C): n in 5..10, |J| in 1..4, nonnegative zero-diagonal C."""
    n = int(rng.integers(5, 11))
    k = int(rng.integers(1, 5))
    p = rng.dirichlet(np.ones(n))
    p = p / p.sum()
    P = DiscreteDistribution(rng.normal(size=(n, 2)), p)
    C = rng.uniform(0, 10, size=(n, n))
    np.fill_diagonal(C, 0.0)
    J = SupportSubset(tuple(int(j) + 1 for j in rng.permutation(n)[:k]), n)
    return P, J, C


def suite_transport(count: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng([seed, 1])
    worst, bad = 0.0, 0
    for _ in range(count):
        P, J, C = random_transport_instance(rng)
        val = discrete_distance(P, J, C)
        Q = redistribute(P, J, C)
        lp = transport_lp_oracle(P, Q.probabilities, C[:, np.array(J.indices) - 1]).objective
        err = abs(val - lp) / (1 + abs(val))
        worst = max(worst, err)
        bad += err > 1e-8
    return SuiteResult("transport", count, worst, 1e-8, bad)


def suite_redistribution(count: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng([seed, 1])
    worst, bad = 0.0, 0
    for _ in range(count):
        P, J, C = random_transport_instance(rng)
        Q = redistribute(P, J, C)
        err = abs(float(np.sum(Q.probabilities)) - 1.0)
        own = all(Q.mass(j) >= P.probabilities[j - 1] for j in J.indices)
        unselected = sorted(set(range(1, P.n + 1)) - set(J.indices))
        clusters = Q.clusters()
        members = sorted(i for j in J.indices for i in clusters[j] if i != j)
        worst = max(worst, err)
        bad += (err > 1e-12) or not own or members != unselected
    return SuiteResult("redistribution", count, worst, 1e-12, bad)


def suite_first_pick(count: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng([seed, 2])
    bad = 0
    for _ in range(count):
        n = int(rng.integers(1, 13))
        p = rng.dirichlet(np.ones(n))
        A = rng.uniform(0, 5, size=(n, n))
        C = A + A.T
        np.fill_diagonal(C, 0.0)
        bad += not first_pick_globally_optimal_check(DiscreteDistribution(np.zeros((n, 1)), p), C)
    return SuiteResult("first_pick", count, 0.0, 1e-10, bad)


def _desk_draw(inst, n: int, rng) -> DiscreteDistribution:
    W = rng.uniform(0, 1, size=(n, inst.scenario_dim)) * np.repeat(inst.capacities(), inst.horizon)
    return equiprobable_from_vectors(W)


def suite_table1(n: int, seed: int, backend=None) -> SuiteResult:
    expect = {"ID": (0, 0), "Mo": (1, n), "Br": (n, 0), "Be": (n, n * n - n), "Pr": (n, n * n - n)}
    inst = desk_instance()
    prob = SucProblem(inst, backend=backend)
    P = _desk_draw(inst, n, np.random.default_rng([seed, 3]))
    bad, notes = 0, []
    for kind, want in expect.items():
        got = costfn.build_cost_matrix(kind, P, prob).stats.counts
        if got != want:
            bad += 1
            notes.append(f"{kind} {got} != {want}")
    return SuiteResult("table1", len(expect), 0.0, 0.0, bad, "; ".join(notes))


def suite_theorem1(count: int, n: int, seed: int, fault: str | None = None, backend=None) -> SuiteResult:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    worst, bad = 0.0, 0
    for k in range(count):
        inst = desk_variant(seed * 1000 + k)
        prob = SucProblem(inst, backend=backend, config=SolverConfig(milp_gap=0.0))
        P = _desk_draw(inst, n, np.random.default_rng([seed, 4, k]))
        sols = costfn.solve_single_scenarios(prob, P)
        cross = costfn.cross_evaluate(prob, P, sols)
        if fault == "perturb_diagonal":
            Z = cross.Z.copy()
            scale = float(np.mean(np.abs(Z))) or 1.0
            Z[np.diag_indices(n)] -= 0.5 * scale * (np.arange(n) + 1) / n
            cross = costfn.CrossEvaluationMatrix(Z)
        C = costfn.regret(cross)
        pick = forward_select(P, 1, C).indices[0]
        oracle = theorem1_oracle(prob, P, ZStarCache())
        lo = oracle.rae.min()
        err = (oracle.rae[pick - 1] - lo) / max(abs(lo), 1.0)
        a_z, a_c = argmin_chain(cross.Z, C.entries, P.probabilities)
        worst = max(worst, err)
        bad += (pick not in oracle.argmin and err > 1e-6) or a_z != a_c
    return SuiteResult("theorem1", count, worst, 1e-6, bad, f"fault={fault}" if fault else "")


def run_all(settings: VerifySettings, backend=None) -> list[SuiteResult]:
    s = settings
    return [
        suite_transport(s.transport_instances, s.seed),
        suite_redistribution(s.transport_instances, s.seed),
        suite_first_pick(s.selection_instances, s.seed),
        suite_table1(s.table1_n, s.seed, backend),
        suite_theorem1(s.theorem1_instances, s.theorem1_n, s.seed, s.fault, backend),
    ]


def report(results: list[SuiteResult]) -> str:
    lines = ["scenred verification report", ""] + [r.line() for r in results]
    failed = [r.name for r in results if not r.passed]
    lines += ["", "all suites passed" if not failed else "failed suites: " + ", ".join(failed)]
    return "\n".join(lines) + "\n"


def check(results: list[SuiteResult]) -> None:
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise VerificationFailure(failed)
