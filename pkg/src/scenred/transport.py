"""Transport distance between a discrete distribution and a subset of its support.

For a fixed subset the optimal transport plan is known in closed form: every
unselected scenario ships all of its mass to its cheapest selected scenario.
:func:`discrete_distance` and :func:`redistribute` implement that; the
transport LP in :func:`transport_lp_oracle` exists only to check them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import CostMatrix, DiscreteDistribution, ReducedDistribution, SupportSubset
from .errors import EmptySubset, InfeasibleMarginals, MatrixShapeMismatch
from .solver import Model, SolverConfig, get_backend, require_optimal


def _as_subset(J, n: int) -> SupportSubset:
    if isinstance(J, SupportSubset):
        if J.n != n:
            raise MatrixShapeMismatch(f"subset built for n={J.n}, distribution has n={n}")
        return J
    J = tuple(J)
    if not J:
        raise EmptySubset("support subset is empty")
    return SupportSubset(J, n)


def _entries(C, n: int) -> np.ndarray:
    M = C.entries if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)
    if M.shape != (n, n):
        raise MatrixShapeMismatch(f"cost matrix shape {M.shape} does not match n={n}")
    return np.ascontiguousarray(M)


def _nearest(P: DiscreteDistribution, J: SupportSubset, C):
    M = _entries(C, P.n)
    sel = np.sort(J.zero_based())
    mins, arg = kernels.nearest_selected(M, sel)
    skip = np.zeros(P.n, dtype=np.uint8)
    skip[sel] = 1
    return M, sel, mins, arg, skip


def discrete_distance(P: DiscreteDistribution, J, C) -> float:
    """``sum_{i not in J} p_i * min_{j in J} C[i, j]``; zero when J is everything."""
    J = _as_subset(J, P.n)
    _, _, mins, _, skip = _nearest(P, J, C)
    return float(kernels.masked_weighted_sum(P.probabilities, mins, skip))


def redistribute(P: DiscreteDistribution, J, C) -> ReducedDistribution:
    """Move each unselected scenario's mass onto its nearest selected scenario.

    Ties go to the smallest selected id. The returned probabilities follow the
    order of ``J`` (draw order when J comes from forward selection).
    """
    J = _as_subset(J, P.n)
    _, sel, _, arg, skip = _nearest(P, J, C)
    p = P.probabilities
    owner = sel[arg]
    owner[sel] = sel  # selected scenarios keep their own mass
    mass = np.bincount(owner, weights=p, minlength=P.n)
    order = J.zero_based()
    q = mass[order]
    assignment = {int(i) + 1: int(owner[i]) + 1 for i in np.flatnonzero(skip == 0)}
    return ReducedDistribution(P, J, q, assignment)


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray
    objective: float


def transport_lp_oracle(P: DiscreteDistribution, q, C_sub, backend=None) -> TransportPlan:
    """Solve the mass-transport LP between ``p`` (length n) and ``q`` (length m).

    ``C_sub`` is the ``n x m`` block of costs from every original scenario to
    every target atom. Verification only; production code uses the closed form.
    """
    p = P.probabilities
    q = np.asarray(q, dtype=float).ravel()
    C_sub = np.asarray(C_sub, dtype=float)
    n, m = C_sub.shape
    if n != P.n or m != q.size:
        raise MatrixShapeMismatch(f"cost block {C_sub.shape} vs marginals ({P.n}, {q.size})")
    if abs(q.sum() - p.sum()) > 1e-9:
        raise InfeasibleMarginals(f"sum p = {p.sum()!r} but sum q = {q.sum()!r}")
    model = Model()
    pi = model.add_vars((n, m), lb=0.0, cost=C_sub)
    model.add_rows([(pi[:, k], 1.0) for k in range(m)], lo=p, hi=p)
    model.add_rows([(pi[i, :], 1.0) for i in range(n)], lo=q, hi=q)
    backend = backend or get_backend()
    sol = require_optimal(backend.solve(model.compile(), SolverConfig()), "transport LP")
    plan = np.asarray(sol.x).reshape(n, m)
    return TransportPlan(plan, float(sol.objective))
