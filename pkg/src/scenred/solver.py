"""Backend-neutral LP/MILP model building and solving.

A :class:`Model` collects variables, linear rows and an objective as sparse
triplets. It compiles into a :class:`CompiledModel` (CSC matrix plus bound
vectors) that any :class:`Backend` can solve. Two backends ship, both driving
HiGHS:

``scipy``
    :func:`scipy.optimize.milp`. Always available.
``highs``
    :mod:`highspy` directly. Keeps one solver instance per LP template and
    re-solves after bound changes, skipping model construction. Each re-solve
    starts cold so that identical LPs return bit-identical values.

The backend is chosen by ``SCENRED_SOLVER`` (``highs`` or ``scipy``); the
default is ``highs`` when :mod:`highspy` imports.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, Infeasible, SolverFailure

INF = np.inf


@dataclass(frozen=True)
class SolverConfig:
    milp_gap: float = 0.0
    time_limit: float | None = None
    workers: int = 1


@dataclass
class Solution:
    status: str  # "optimal", "time_limit", "infeasible", "error"
    objective: float
    x: np.ndarray | None
    gap: float = 0.0
    bound: float = float("nan")
    time_ms: float = 0.0

    @property
    def certified(self) -> bool:
        return self.status == "optimal"


class Model:
    """Incremental sparse model builder.

    Variables are created in blocks and referenced by integer index arrays.
    A row is the dot product of coefficient and variable arrays broadcast to a
    common shape, so ``add_rows([(p[:, 1:], 1), (p[:, :-1], -1)], hi=ru)``
    adds one ramp row per ``(g, t)``.
    """

    def __init__(self):
        self.ncols = 0
        self.nrows = 0
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._cost: list[np.ndarray] = []
        self._int: list[np.ndarray] = []
        self._ri: list[np.ndarray] = []
        self._ci: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self._rlo: list[np.ndarray] = []
        self._rhi: list[np.ndarray] = []
        self.offset = 0.0

    def add_vars(self, shape, lb=0.0, ub=INF, cost=0.0, binary=False) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        size = int(np.prod(shape)) if shape else 1
        idx = np.arange(self.ncols, self.ncols + size).reshape(shape)
        self.ncols += size
        if binary:
            lb = np.maximum(lb, 0.0)
            ub = np.minimum(ub, 1.0)
        self._lb.append(np.broadcast_to(np.asarray(lb, float), shape).ravel().copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, float), shape).ravel().copy())
        self._cost.append(np.broadcast_to(np.asarray(cost, float), shape).ravel().copy())
        self._int.append(np.full(size, 1 if binary else 0, dtype=np.uint8))
        return idx

    def add_rows(self, terms, lo=-INF, hi=INF) -> np.ndarray:
        idxs = [np.asarray(t[0]) for t in terms]
        shape = np.broadcast_shapes(*(i.shape for i in idxs), *(np.shape(t[1]) for t in terms),
                                    np.shape(lo), np.shape(hi))
        size = int(np.prod(shape)) if shape else 1
        rows = np.arange(self.nrows, self.nrows + size)
        for (idx, coef), ii in zip(terms, idxs):
            self._ri.append(rows)
            self._ci.append(np.broadcast_to(ii, shape).ravel())
            self._v.append(np.broadcast_to(np.asarray(coef, float), shape).ravel())
        self._rlo.append(np.broadcast_to(np.asarray(lo, float), shape).ravel())
        self._rhi.append(np.broadcast_to(np.asarray(hi, float), shape).ravel())
        self.nrows += size
        return rows.reshape(shape)

    def add_sparse_rows(self, blocks, lo=-INF, hi=INF) -> np.ndarray:
        """Rows ``sum_b S_b @ x[idx_b]`` for sparse ``S_b`` of a common row count."""
        k = blocks[0][0].shape[0]
        rows = np.arange(self.nrows, self.nrows + k)
        for S, idx in blocks:
            S = sp.coo_matrix(S)
            idx = np.asarray(idx).ravel()
            self._ri.append(rows[S.row])
            self._ci.append(idx[S.col])
            self._v.append(S.data.astype(float))
        self._rlo.append(np.broadcast_to(np.asarray(lo, float), (k,)).ravel())
        self._rhi.append(np.broadcast_to(np.asarray(hi, float), (k,)).ravel())
        self.nrows += k
        return rows

    def add_row(self, cols, coefs, lo=-INF, hi=INF) -> int:
        cols = np.asarray(cols, dtype=np.int64).ravel()
        r = self.nrows
        self._ri.append(np.full(cols.size, r))
        self._ci.append(cols)
        self._v.append(np.broadcast_to(np.asarray(coefs, float), cols.shape).ravel())
        self._rlo.append(np.array([lo], float))
        self._rhi.append(np.array([hi], float))
        self.nrows += 1
        return r

    def compile(self) -> "CompiledModel":
        cat = lambda parts, dt=float: np.concatenate(parts).astype(dt) if parts else np.zeros(0, dt)
        A = sp.csc_matrix(
            (cat(self._v), (cat(self._ri, np.int64), cat(self._ci, np.int64))),
            shape=(self.nrows, self.ncols),
        )
        A.sum_duplicates()
        return CompiledModel(
            cost=cat(self._cost), A=A, row_lo=cat(self._rlo), row_hi=cat(self._rhi),
            lb=cat(self._lb), ub=cat(self._ub), integrality=cat(self._int, np.uint8),
            offset=self.offset,
        )


@dataclass
class CompiledModel:
    cost: np.ndarray
    A: sp.csc_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    offset: float = 0.0
    _sessions: dict = field(default_factory=dict, repr=False)

    @property
    def is_mip(self) -> bool:
        return bool(self.integrality.any())

    def with_bounds(self, lb=None, ub=None, row_lo=None, row_hi=None) -> "CompiledModel":
        return CompiledModel(
            self.cost, self.A,
            self.row_lo if row_lo is None else row_lo,
            self.row_hi if row_hi is None else row_hi,
            self.lb if lb is None else lb,
            self.ub if ub is None else ub,
            self.integrality, self.offset,
        )


class Backend:
    name = "abstract"

    def solve(self, model: CompiledModel, config: SolverConfig = SolverConfig()) -> Solution:
        raise NotImplementedError

    def lp_session(self, template: CompiledModel) -> "LPSession":
        return LPSession(self, template)


class LPSession:
    """Repeated solves of one LP template with varying bounds."""

    def __init__(self, backend: Backend, template: CompiledModel):
        self.backend = backend
        self.template = template

    def solve(self, lb, ub, row_lo, row_hi) -> Solution:
        return self.backend.solve(self.template.with_bounds(lb, ub, row_lo, row_hi))


class ScipyBackend(Backend):
    name = "scipy"

    def solve(self, model, config=SolverConfig()):
        from scipy.optimize import Bounds, LinearConstraint, milp

        opts = {"disp": False, "presolve": True}
        if model.is_mip:
            opts["mip_rel_gap"] = config.milp_gap
        if config.time_limit:
            opts["time_limit"] = config.time_limit
        cons = [LinearConstraint(model.A, model.row_lo, model.row_hi)] if model.A.shape[0] else []
        t0 = time.perf_counter()
        res = milp(model.cost, integrality=model.integrality, bounds=Bounds(model.lb, model.ub),
                   constraints=cons, options=opts)
        ms = 1e3 * (time.perf_counter() - t0)
        if res.status == 0:
            status = "optimal"
        elif res.status == 1 and res.x is not None:
            status = "time_limit"
        elif res.status == 2:
            status = "infeasible"
        else:
            status = "error"
        obj = float(res.fun) + model.offset if res.x is not None else float("nan")
        gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
        bound = float(getattr(res, "mip_dual_bound", obj) or obj)
        return Solution(status, obj, res.x, gap, bound, ms)


class HighsBackend(Backend):
    name = "highs"

    def __init__(self):
        import highspy  # noqa: F401  (fail early when missing)

    @staticmethod
    def _new(config: SolverConfig | None = None):
        import highspy

        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        if config is not None:
            h.setOptionValue("mip_rel_gap", float(config.milp_gap))
            h.setOptionValue("mip_abs_gap", 0.0 if config.milp_gap == 0 else 1e-6)
            if config.time_limit:
                h.setOptionValue("time_limit", float(config.time_limit))
        return h

    @staticmethod
    def _pass(h, model: CompiledModel):
        import highspy

        lp = highspy.HighsLp()
        lp.num_col_ = int(model.A.shape[1])
        lp.num_row_ = int(model.A.shape[0])
        lp.col_cost_ = model.cost
        lp.col_lower_ = model.lb
        lp.col_upper_ = model.ub
        lp.row_lower_ = model.row_lo
        lp.row_upper_ = model.row_hi
        lp.offset_ = float(model.offset)
        A = model.A
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr.astype(np.int32)
        lp.a_matrix_.index_ = A.indices.astype(np.int32)
        lp.a_matrix_.value_ = A.data
        if model.is_mip:
            lp.integrality_ = [highspy.HighsVarType.kInteger if v else highspy.HighsVarType.kContinuous
                               for v in model.integrality]
        h.passModel(lp)

    @staticmethod
    def _result(h, model, t0) -> Solution:
        import highspy

        ms = 1e3 * (time.perf_counter() - t0)
        st = h.getModelStatus()
        info = h.getInfo()
        MS = highspy.HighsModelStatus
        has_x = info.primal_solution_status == 2
        if st == MS.kOptimal:
            status = "optimal"
        elif st in (MS.kTimeLimit, MS.kIterationLimit, MS.kSolutionLimit) and has_x:
            status = "time_limit"
        elif st in (MS.kInfeasible, MS.kUnboundedOrInfeasible):
            status = "infeasible"
        else:
            status = "error"
        x = np.array(h.getSolution().col_value) if has_x else None
        obj = float(info.objective_function_value) if has_x else float("nan")
        if model.is_mip:
            gap = float(info.mip_gap) if np.isfinite(info.mip_gap) else 0.0
            bound = float(info.mip_dual_bound)
        else:
            gap, bound = 0.0, obj
        return Solution(status, obj, x, gap, bound, ms)

    def solve(self, model, config=SolverConfig()):
        h = self._new(config)
        self._pass(h, model)
        t0 = time.perf_counter()
        h.run()
        return self._result(h, model, t0)

    def lp_session(self, template):
        return _HighsSession(self, template)


class _HighsSession(LPSession):
    def __init__(self, backend, template):
        super().__init__(backend, template)
        self.h = backend._new()
        backend._pass(self.h, template)
        self._cols = np.arange(template.A.shape[1], dtype=np.int32)
        self._rows = np.arange(template.A.shape[0], dtype=np.int32)

    def solve(self, lb, ub, row_lo, row_hi):
        h = self.h
        h.changeColsBounds(len(self._cols), self._cols, np.asarray(lb, float), np.asarray(ub, float))
        h.changeRowsBounds(len(self._rows), self._rows, np.asarray(row_lo, float), np.asarray(row_hi, float))
        # Cold start: a warm basis makes the returned value depend on which LP
        # this session solved before, so identical LPs could differ in the last
        # digits and flip exact ties downstream.
        h.clearSolver()
        t0 = time.perf_counter()
        h.run()
        return self.backend._result(h, self.template, t0)


_BACKENDS = {"scipy": ScipyBackend, "highs": HighsBackend}


def get_backend(name: str | None = None) -> Backend:
    name = name or os.environ.get("SCENRED_SOLVER")
    if name is None:
        try:
            return HighsBackend()
        except ImportError:
            return ScipyBackend()
    if name not in _BACKENDS:
        raise ConfigError(f"unknown solver backend {name!r}; choose from {sorted(_BACKENDS)}")
    return _BACKENDS[name]()


def require_optimal(sol: Solution, what: str, allow_time_limit: bool = False) -> Solution:
    if sol.status == "optimal":
        return sol
    if sol.status == "time_limit" and allow_time_limit:
        return sol
    if sol.status == "infeasible":
        raise Infeasible(f"{what}: infeasible")
    raise SolverFailure(f"{what}: solver status {sol.status}")
