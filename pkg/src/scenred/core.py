"""Domain types shared by every module.

Scenario ids are 1-based everywhere in the public API. Arrays are stored
0-based internally and frozen (``writeable=False``) after construction, so
instances can be shared between workers without copying.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptySubset,
    IndexOutOfRange,
    MatrixShapeMismatch,
    NegativeProbability,
    NonFiniteEntry,
    NonNormalized,
    ValidationError,
)

PROB_TOL = 1e-12
COST_KINDS = ("ID", "Mo", "Br", "Be", "Pr")


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    id: int
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finitely supported distribution ``sum_i p_i delta_{xi_i}``.

    ``values`` has shape ``(n, d)``; row ``k`` is the scenario with id ``k+1``.
    Construction validates; use :func:`validate_distribution` to get the
    diagnostic without building an object.
    """

    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        values = self.values if isinstance(self.values, np.ndarray) else _stack(self.values)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        probs = np.asarray(self.probabilities, dtype=float).reshape(-1)
        _check(values, probs)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "probabilities", _frozen(probs))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def ids(self) -> range:
        return range(1, self.n + 1)

    def scenario(self, sid: int) -> Scenario:
        _check_id(sid, self.n)
        return Scenario(sid, self.values[sid - 1])

    @property
    def scenarios(self) -> list[Scenario]:
        return [Scenario(k + 1, self.values[k]) for k in range(self.n)]

    def mean(self) -> np.ndarray:
        return self.probabilities @ self.values

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(np.ascontiguousarray(self.probabilities).tobytes())
        return h.hexdigest()[:16]

    def __len__(self):
        return self.n


def _check(values: np.ndarray, probs: np.ndarray) -> None:
    if values.ndim != 2:
        raise DimensionMismatch(f"scenario values must be 2-D, got shape {values.shape}")
    n, d = values.shape
    if n == 0:
        raise EmptyInput("distribution has no scenarios")
    if d < 1:
        raise DimensionMismatch("scenario dimension must be >= 1")
    if probs.shape != (n,):
        raise DimensionMismatch(f"{n} scenarios but {probs.shape[0]} probabilities")
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0][0]) + 1
        raise NonFiniteEntry(f"scenario {bad} has a non-finite entry")
    if not np.all(np.isfinite(probs)):
        raise NonFiniteEntry("non-finite probability")
    if np.any(probs < 0):
        bad = int(np.argmax(probs < 0)) + 1
        raise NegativeProbability(f"p[{bad}] = {probs[bad - 1]!r} < 0")
    total = float(np.sum(probs))
    if abs(total - 1.0) > PROB_TOL:
        raise NonNormalized(f"probabilities sum to {total!r}, not 1")


def validate_distribution(values, probabilities) -> None:
    """Raise the specific :class:`ValidationError` for the first violated invariant.

    ``values`` may be a list of vectors of unequal length; that is reported
    as :class:`DimensionMismatch` rather than a numpy error.
    """
    if isinstance(values, DiscreteDistribution):
        probabilities = values.probabilities
        values = values.values
    _check(_stack(values), np.asarray(probabilities, dtype=float).reshape(-1))


def _stack(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return vectors.astype(float).reshape(vectors.shape[0], -1) if vectors.ndim == 1 else vectors.astype(float)
    rows = [np.atleast_1d(np.asarray(v, dtype=float)) for v in vectors]
    if not rows:
        raise EmptyInput("no scenario vectors given")
    dims = {r.shape for r in rows}
    if len(dims) > 1:
        raise DimensionMismatch(f"scenario dimensions differ: {sorted(r.shape[0] for r in rows)}")
    return np.vstack(rows)


def equiprobable_from_vectors(vectors: Iterable[Sequence[float]]) -> DiscreteDistribution:
    values = _stack(list(vectors) if not isinstance(vectors, np.ndarray) else vectors)
    n = values.shape[0]
    return DiscreteDistribution(values, np.full(n, 1.0 / n))


def _check_id(sid: int, n: int) -> None:
    if not (1 <= int(sid) <= n):
        raise IndexOutOfRange(f"scenario id {sid} outside 1..{n}")


@dataclass(frozen=True)
class SupportSubset:
    """Ordered, duplicate-free selection of 1-based scenario ids.

    Order is the draw order of Forward Selection.
    """

    indices: tuple[int, ...]
    n: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise EmptySubset("support subset is empty")
        if len(set(idx)) != len(idx):
            raise ValidationError(f"duplicate ids in subset {idx}")
        for i in idx:
            _check_id(i, self.n)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, n: int) -> "SupportSubset":
        return cls(tuple(range(1, n + 1)), n)

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp) - 1

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, sid):
        return sid in self.indices


@dataclass
class SolveStats:
    """Solver-call accounting for one cost-matrix construction.

    ``shared`` is set when single-scenario solutions or the cross-evaluation
    matrix were reused from a cache; counts then reflect only the solves
    actually performed for this call.
    """

    milp_count: int = 0
    lp_count: int = 0
    milp_time_ms: float = 0.0
    lp_time_ms: float = 0.0
    per_problem_times: list | None = None
    shared: bool = False

    @property
    def counts(self) -> tuple[int, int]:
        return (self.milp_count, self.lp_count)

    @property
    def wall_time_ms(self) -> dict:
        return {"milp": self.milp_time_ms, "lp": self.lp_time_ms}

    def add_milp(self, ms: float) -> None:
        self.milp_count += 1
        self.milp_time_ms += ms
        if self.per_problem_times is not None:
            self.per_problem_times.append(("milp", ms))

    def add_lp(self, ms: float) -> None:
        self.lp_count += 1
        self.lp_time_ms += ms
        if self.per_problem_times is not None:
            self.per_problem_times.append(("lp", ms))

    def merge(self, other: "SolveStats") -> None:
        self.milp_count += other.milp_count
        self.lp_count += other.lp_count
        self.milp_time_ms += other.milp_time_ms
        self.lp_time_ms += other.lp_time_ms
        self.shared = self.shared or other.shared


@dataclass(frozen=True, eq=False)
class CostMatrix:
    entries: np.ndarray
    kind: str
    stats: SolveStats = field(default_factory=SolveStats)

    def __post_init__(self):
        C = np.asarray(self.entries, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise MatrixShapeMismatch(f"cost matrix must be square, got {C.shape}")
        if self.kind not in COST_KINDS and not self.kind.startswith("custom"):
            raise ValidationError(f"unknown cost kind {self.kind!r}")
        if not np.all(np.isfinite(C)):
            raise NonFiniteEntry("cost matrix has non-finite entries")
        object.__setattr__(self, "entries", _frozen(C))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, ij):
        """1-based ``C[i, j]``."""
        i, j = ij
        return float(self.entries[i - 1, j - 1])


@dataclass(frozen=True, eq=False)
class ReducedDistribution:
    """Distribution on a subset of the base support with redistributed masses.

    ``probabilities[k]`` belongs to ``subset.indices[k]``; ``assignment`` maps
    every unselected id to the selected id that absorbed its mass.
    """

    base: DiscreteDistribution
    subset: SupportSubset
    probabilities: np.ndarray
    assignment: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "probabilities", _frozen(self.probabilities))
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def m(self) -> int:
        return len(self.subset)

    def mass(self, sid: int) -> float:
        return float(self.probabilities[self.subset.indices.index(sid)])

    def clusters(self) -> dict[int, list[int]]:
        """Selected id -> unselected ids assigned to it (the sets I_j)."""
        out = {j: [] for j in self.subset}
        for i, j in sorted(self.assignment.items()):
            out[j].append(i)
        return out

    def to_distribution(self) -> DiscreteDistribution:
        vals = self.base.values[self.subset.zero_based()]
        return DiscreteDistribution(vals, self.probabilities)
