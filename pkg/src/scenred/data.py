"""File formats, seeded sampling and synthetic wind scenarios.

Network document (JSON, UTF-8)
------------------------------
Top level: ``format_version``, ``name``, ``base_mva``, ``cost_scale``,
``period_hours``, ``c_shed`` ($/MWh), optional ``c_slack`` and
``reference_bus``, and the sections ``buses``, ``lines``, ``generators``,
``demands``, ``wind_farms``. Powers are in MW, costs in $ ($/h, $/MWh);
:func:`instance_from_document` converts to per unit and objective units
(dollars times ``cost_scale``). Line susceptances are already per unit.

Scenario file (CSV, UTF-8)
--------------------------
Long format with header ``scenario_id,period,farm_id,value_pu``. Ids and
periods are 1-based. Floats are written with 17 significant digits.

Draws
-----
:func:`draw` uses SplitMix64 (Steele, Lea & Flood 2014) seeded with the draw
seed. A bounded integer in ``[0, k)`` is the first output ``r`` with
``r < 2**64 - (2**64 mod k)``, reduced ``mod k``. Sampling without replacement
is a partial Fisher-Yates shuffle of ``0..pool_size-1``: for ``i`` in
``0..n-1`` swap position ``i`` with ``i + bounded(pool_size - i)``. With
replacement, ``n`` independent ``bounded(pool_size)`` draws.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .core import DiscreteDistribution, equiprobable_from_vectors
from .errors import CapacityExceeded, InvalidDrawSpec, InvalidParams, MissingFile, SchemaViolation

FORMAT_VERSION = 1
RTS24_PATH = Path(__file__).parent / "data" / "rts24.json"
SCENARIO_HEADER = ("scenario_id", "period", "farm_id", "value_pu")
_MASK64 = (1 << 64) - 1


# -- canonical JSON -----------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise SchemaViolation(f"non-finite number {x!r} cannot be serialized")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def dumps_canonical(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted-insertion order preserved and 17-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        if _level > 0 and all(not isinstance(v, (dict, list, tuple)) for v in obj.values()):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps_canonical(v)}" for k, v in obj.items()) + "}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_canonical(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_canonical(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps_canonical(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(obj)


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- network documents --------------------------------------------------------

_GEN_FIELDS = ("id", "bus", "p_min_mw", "p_max_mw", "ramp_up_mw", "ramp_down_mw", "min_up", "min_down",
               "u0", "t_u0", "p0_mw", "c_su", "c_fix", "c_lin")


def read_network_document(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"network file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: invalid JSON ({e})") from e
    _check_document(doc, str(path))
    return doc


def write_network_document(doc: dict, path) -> None:
    _check_document(doc, str(path))
    write_atomic(path, dumps_canonical(doc) + "\n")


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    return d[key]


def _check_document(doc, where: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{where}: top level must be an object")
    for sec in ("buses", "lines", "generators", "demands", "wind_farms"):
        if not isinstance(_need(doc, sec, where), list):
            raise SchemaViolation(f"{where}: section {sec!r} must be a list")
    for key in ("base_mva", "c_shed"):
        _need(doc, key, where)
    buses = {int(_need(b, "id", f"{where}: buses[{k}]")) for k, b in enumerate(doc["buses"])}
    T = None
    for k, g in enumerate(doc["generators"]):
        loc = f"{where}: generators[{k}]"
        for f in _GEN_FIELDS:
            _need(g, f, loc)
        if int(g["bus"]) not in buses:
            raise SchemaViolation(f"{loc} ({g['id']}): bus {g['bus']} not in buses")
    for k, ln in enumerate(doc["lines"]):
        loc = f"{where}: lines[{k}]"
        for f in ("from", "to", "susceptance", "f_max_mw"):
            _need(ln, f, loc)
        for b in (ln["from"], ln["to"]):
            if int(b) not in buses:
                raise SchemaViolation(f"{loc}: bus {b} not in buses")
    for k, d in enumerate(doc["demands"]):
        loc = f"{where}: demands[{k}]"
        if int(_need(d, "bus", loc)) not in buses:
            raise SchemaViolation(f"{loc}: bus {d['bus']} not in buses")
        mw = _need(d, "mw", loc)
        if T is None:
            T = len(mw)
        elif len(mw) != T:
            raise SchemaViolation(f"{loc}: {len(mw)} periods, expected {T}")
    for k, w in enumerate(doc["wind_farms"]):
        loc = f"{where}: wind_farms[{k}]"
        for f in ("id", "bus", "capacity_mw"):
            _need(w, f, loc)
        if int(w["bus"]) not in buses:
            raise SchemaViolation(f"{loc} ({w['id']}): bus {w['bus']} not in buses")
    if T is None and "horizon" not in doc:
        raise SchemaViolation(f"{where}: no demands and no horizon given")


def instance_from_document(doc: dict, horizon: int | None = None, first_period: int = 1, **overrides):
    """Build a per-unit :class:`~scenred.suc.SucInstance` from a network document.

    ``horizon`` periods of the demand profile are used, starting at the
    1-based ``first_period``; initial generator states apply before it.
    ``overrides`` replace top-level document fields (``cost_scale``,
    ``c_shed``, ``objective_offset``, ...).
    """
    from .suc import Line, Network, SucInstance, WindFarm, _gen_from_mw

    doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    _check_document(doc, doc.get("name", "network"))
    base = float(doc["base_mva"])
    scale = float(doc.get("cost_scale", 1.0))
    hours = float(doc.get("period_hours", 1.0))
    buses = tuple(int(b["id"]) for b in doc["buses"])
    bi = {b: k for k, b in enumerate(buses)}
    T = len(doc["demands"][0]["mw"]) if doc["demands"] else int(doc["horizon"])
    s0 = int(first_period) - 1
    if not 0 <= s0 < T:
        raise SchemaViolation(f"first_period {first_period} outside 1..{T}")
    T -= s0
    if horizon is not None:
        if not 1 <= horizon <= T:
            raise SchemaViolation(f"horizon {horizon} outside 1..{T}")
        T = horizon
    D = np.zeros((len(buses), T))
    for d in doc["demands"]:
        D[bi[int(d["bus"])]] += np.asarray(d["mw"][s0:s0 + T], dtype=float) / base
    lines = tuple(Line(int(ln["from"]), int(ln["to"]), float(ln["susceptance"]), float(ln["f_max_mw"]) / base)
                  for ln in doc["lines"])
    net = Network(buses, lines, D, doc.get("reference_bus"))
    gens = tuple(
        _gen_from_mw(g["id"], g["bus"], g["p_min_mw"], g["p_max_mw"], g["ramp_up_mw"], g["min_up"],
                     g["min_down"], g["u0"], g["t_u0"], g["p0_mw"], g["c_su"], g["c_fix"], g["c_lin"],
                     base, scale, hours, ramp_down=g["ramp_down_mw"])
        for g in doc["generators"]
    )
    farms = tuple(WindFarm(str(w["id"]), int(w["bus"]), float(w["capacity_mw"]) / base) for w in doc["wind_farms"])
    c_shed = float(doc["c_shed"]) * base * scale * hours
    c_slack = doc.get("c_slack")
    c_slack = None if c_slack is None else float(c_slack) * base * scale * hours
    return SucInstance(net, gens, farms, c_shed=c_shed, c_slack=c_slack, base_mva=base,
                       objective_offset=float(doc.get("objective_offset", 0.0)),
                       name=str(doc.get("name", "suc")))


def load_network(path, horizon: int | None = None, first_period: int = 1, **overrides):
    return instance_from_document(read_network_document(path), horizon=horizon, first_period=first_period,
                                  **overrides)


def desk_document() -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": "desk",
        "base_mva": 100.0,
        "cost_scale": 0.001,
        "period_hours": 1.0,
        "c_shed": 1500.0,
        "reference_bus": 1,
        "buses": [{"id": 1}, {"id": 2}],
        "lines": [{"from": 1, "to": 2, "susceptance": 10.0, "f_max_mw": 100.0}],
        "generators": [
            {"id": "G1", "bus": 1, "p_min_mw": 20.0, "p_max_mw": 100.0, "ramp_up_mw": 100.0,
             "ramp_down_mw": 100.0, "min_up": 2, "min_down": 2, "u0": 0, "t_u0": 2, "p0_mw": 0.0,
             "c_su": 1000.0, "c_fix": 500.0, "c_lin": 20.0},
            {"id": "G2", "bus": 1, "p_min_mw": 10.0, "p_max_mw": 80.0, "ramp_up_mw": 80.0,
             "ramp_down_mw": 80.0, "min_up": 2, "min_down": 2, "u0": 1, "t_u0": 2, "p0_mw": 30.0,
             "c_su": 200.0, "c_fix": 100.0, "c_lin": 60.0},
        ],
        "demands": [{"bus": 2, "mw": [90.0, 120.0]}],
        "wind_farms": [{"id": "W1", "bus": 2, "capacity_mw": 100.0}],
    }


# -- scenario pools -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScenarioPool:
    """Pool of wind scenarios, ``entries[k]`` laid out farm-major (farm, period)."""

    entries: np.ndarray
    farm_ids: tuple
    horizon: int
    capacities: np.ndarray | None = None
    base_mva: float = 100.0

    def __post_init__(self):
        E = np.array(self.entries, dtype=float)
        if E.ndim != 2 or E.shape[0] < 1:
            raise SchemaViolation("pool must hold at least one scenario")
        if E.shape[1] != len(self.farm_ids) * self.horizon:
            raise SchemaViolation(f"pool width {E.shape[1]} != farms x horizon")
        if np.any(E < 0) or not np.all(np.isfinite(E)):
            raise SchemaViolation("pool entries must be finite and nonnegative")
        if self.capacities is not None:
            cap = np.repeat(np.asarray(self.capacities, dtype=float), self.horizon)
            over = np.argwhere(E > cap[None, :] + 1e-12)
            if over.size:
                k, c = over[0]
                raise CapacityExceeded(f"scenario {k + 1}, farm {self.farm_ids[c // self.horizon]}: "
                                       f"{E[k, c]!r} above capacity {cap[c]!r}")
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)
        object.__setattr__(self, "farm_ids", tuple(str(f) for f in self.farm_ids))

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def write_scenarios(pool: ScenarioPool, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCENARIO_HEADER)
    J, T = len(pool.farm_ids), pool.horizon
    for k in range(pool.size):
        row = pool.entries[k].reshape(J, T)
        for t in range(T):
            for j, fid in enumerate(pool.farm_ids):
                w.writerow((k + 1, t + 1, fid, _fmt_float(float(row[j, t]))))
    write_atomic(path, buf.getvalue())


def load_scenarios(path, capacities: dict | None = None, base_mva: float = 100.0) -> ScenarioPool:
    """Read a long-format scenario CSV.

    ``capacities`` maps farm id to per-unit capacity and enables the
    :class:`CapacityExceeded` check. Farm order follows first appearance.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"scenario file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCENARIO_HEADER:
            raise SchemaViolation(f"{path}: header must be {','.join(SCENARIO_HEADER)}")
        cells = {}
        farms: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise SchemaViolation(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                s, t, f, v = int(row[0]), int(row[1]), row[2].strip(), float(row[3])
            except ValueError as e:
                raise SchemaViolation(f"{path}:{lineno}: {e}") from e
            if s < 1 or t < 1:
                raise SchemaViolation(f"{path}:{lineno}: ids and periods are 1-based")
            if not math.isfinite(v) or v < 0:
                raise SchemaViolation(f"{path}:{lineno}: wind value {row[3]!r} must be finite and >= 0")
            if capacities is not None:
                if f not in capacities:
                    raise SchemaViolation(f"{path}:{lineno}: unknown farm {f!r}")
                if v > capacities[f] + 1e-12:
                    raise CapacityExceeded(f"{path}:{lineno}: {v!r} above capacity {capacities[f]!r} of farm {f}")
            if f not in farms:
                farms.append(f)
            if (s, t, f) in cells:
                raise SchemaViolation(f"{path}:{lineno}: duplicate entry ({s}, {t}, {f})")
            cells[(s, t, f)] = v
    if not cells:
        raise SchemaViolation(f"{path}: no scenario rows")
    S = max(k[0] for k in cells)
    T = max(k[1] for k in cells)
    J = len(farms)
    if len(cells) != S * T * J:
        raise SchemaViolation(f"{path}: incomplete table, {len(cells)} of {S * T * J} cells")
    E = np.empty((S, J, T))
    fi = {f: j for j, f in enumerate(farms)}
    for (s, t, f), v in cells.items():
        E[s - 1, fi[f], t - 1] = v
    caps = None if capacities is None else np.array([capacities[f] for f in farms])
    return ScenarioPool(E.reshape(S, J * T), tuple(farms), T, caps, base_mva)


# -- seeded draws ---------------------------------------------------------------

class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def bounded(self, k: int) -> int:
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            r = self.next()
            if r < limit:
                return r % k


@dataclass(frozen=True)
class DrawSpec:
    seed: int
    n: int
    replacement: bool = False


def draw_indices(pool_size: int, spec: DrawSpec) -> np.ndarray:
    """0-based pool rows selected by ``spec`` (see module docstring for the algorithm)."""
    if not isinstance(spec.n, (int, np.integer)) or spec.n < 1:
        raise InvalidDrawSpec(f"n must be a positive integer, got {spec.n!r}")
    if not spec.replacement and spec.n > pool_size:
        raise InvalidDrawSpec(f"cannot draw {spec.n} of {pool_size} without replacement")
    rng = SplitMix64(spec.seed)
    if spec.replacement:
        return np.array([rng.bounded(pool_size) for _ in range(spec.n)], dtype=np.intp)
    a = list(range(pool_size))
    for i in range(spec.n):
        j = i + rng.bounded(pool_size - i)
        a[i], a[j] = a[j], a[i]
    return np.array(a[:spec.n], dtype=np.intp)


def draw(pool: ScenarioPool, spec: DrawSpec) -> DiscreteDistribution:
    return equiprobable_from_vectors(pool.entries[draw_indices(pool.size, spec)])


# -- synthetic scenarios ----------------------------------------------------------

@dataclass(frozen=True)
class SynthParams:
    """Marginal capacity-factor mean/std per farm, AR(1) and spatial correlation.

    ``mean`` and ``std`` broadcast to ``(farms,)`` or ``(farms, T)``.
    """

    mean: object = 0.4
    std: object = 0.2
    rho: float = 0.8
    sigma: float = 0.5
    extra: dict = field(default_factory=dict)


def _per_farm(x, J: int, T: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    try:
        return np.broadcast_to(a[:, None] if a.ndim == 1 else a, (J, T))
    except ValueError as e:
        raise InvalidParams(f"{name} of shape {a.shape} does not fit {J} farms x {T} periods") from e


def synth_scenarios(capacities, T: int, count: int, seed: int, params: SynthParams = SynthParams(),
                    farm_ids=None, base_mva: float = 100.0) -> ScenarioPool:
    """Gaussian copula over AR(1) latents, pushed through Beta marginals.

    Latent ``Z[:, :, t] = rho * Z[:, :, t-1] + sqrt(1 - rho**2) * eps_t`` with
    ``eps_t ~ N(0, (1 - sigma) I + sigma 11')`` is standard normal in every
    entry; ``Phi(Z)`` is mapped through the Beta quantile with the requested
    mean and variance and scaled by farm capacity. Zero std gives the mean.
    """
    cap = np.asarray(capacities, dtype=float).ravel()
    J = cap.size
    if J < 1 or T < 1 or count < 1:
        raise InvalidParams("need at least one farm, one period and one scenario")
    if np.any(cap < 0):
        raise InvalidParams("capacities must be nonnegative")
    rho, sigma = float(params.rho), float(params.sigma)
    if not 0 <= rho < 1:
        raise InvalidParams(f"rho must lie in [0, 1), got {rho}")
    if not 0 <= sigma < 1:
        raise InvalidParams(f"sigma must lie in [0, 1), got {sigma}")
    mu, sd = _per_farm(params.mean, J, T, "mean"), _per_farm(params.std, J, T, "std")
    if np.any(mu <= 0) or np.any(mu >= 1):
        raise InvalidParams("mean capacity factor must lie in (0, 1)")
    var = sd ** 2
    if np.any(sd < 0) or np.any(var >= mu * (1 - mu)):
        raise InvalidParams("std must satisfy 0 <= std**2 < mean * (1 - mean)")
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky((1 - sigma) * np.eye(J) + sigma * np.ones((J, J)))
    Z = np.empty((count, J, T))
    Z[:, :, 0] = rng.standard_normal((count, J)) @ L.T
    s = math.sqrt(1 - rho * rho)
    for t in range(1, T):
        Z[:, :, t] = rho * Z[:, :, t - 1] + s * (rng.standard_normal((count, J)) @ L.T)
    U = stats.norm.cdf(Z)
    cf = np.empty_like(U)
    const = var == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(const, 1.0, mu * (1 - mu) / np.where(const, 1.0, var) - 1)
    a, b = mu * k, (1 - mu) * k
    cf[:] = np.where(const, mu, 0.0)[None]
    if np.any(~const):
        cf = np.where(const[None], mu[None], stats.beta.ppf(U, a[None], b[None]))
    vals = np.clip(cf, 0.0, 1.0) * cap[None, :, None]
    ids = tuple(farm_ids) if farm_ids is not None else tuple(f"W{j + 1}" for j in range(J))
    return ScenarioPool(vals.reshape(count, J * T), ids, T, cap, base_mva)
