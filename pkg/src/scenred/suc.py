"""Two-stage stochastic unit commitment with DC power flow.

First stage: on/off, start-up and shut-down binaries per generator and
period, with minimum up/down times and an initial-state lock. Second stage
(per wind scenario): dispatch, load shedding, nodal slack, wind spillage and
DC line flows. The nodal slack makes every second stage feasible for every
admissible commitment.

Units: powers in per unit of ``base_mva``; costs in objective units per
per-unit-period (file loaders do the conversion from MW and $).
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .core import DiscreteDistribution
from .errors import SchemaViolation, ValidationError
from .solver import INF, Model, SolverConfig, require_optimal
from .stochprog import FirstStageDecision, TwoStageProblem, TwoStageSolution


@dataclass(frozen=True)
class Generator:
    id: str
    bus: int
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    min_up: int
    min_down: int
    u0: int
    t_u0: int
    p0: float
    c_su: float
    c_fix: float
    c_lin: float

    def __post_init__(self):
        bad = []
        if not 0 <= self.p_min <= self.p_max:
            bad.append("0 <= p_min <= p_max")
        if self.ramp_up < 0 or self.ramp_down < 0:
            bad.append("ramp limits >= 0")
        if self.min_up < 1 or self.min_down < 1:
            bad.append("min_up, min_down >= 1")
        if self.t_u0 < 0:
            bad.append("t_u0 >= 0")
        if self.u0 not in (0, 1):
            bad.append("u0 in {0, 1}")
        if not 0 <= self.p0 <= self.p_max or (self.u0 == 0 and self.p0 != 0):
            bad.append("p0 in [0, p_max] and p0 = 0 when off")
        # ramps as written have no start-up/shut-down exceptions; these keep
        # every admissible commitment dispatchable
        if self.p_min > min(self.ramp_up, self.ramp_down) + 1e-12:
            bad.append("p_min <= min(ramp_up, ramp_down)")
        if self.p0 > 2 * self.ramp_down + 1e-12:
            bad.append("p0 <= 2 * ramp_down")
        if bad:
            raise ValidationError(f"generator {self.id}: violates " + "; ".join(bad))


def initial_lock_periods(g: Generator, T: int) -> int:
    """Periods the unit must stay in its initial state (clamped to ``0..T``)."""
    need = (g.min_up if g.u0 == 1 else g.min_down) - g.t_u0
    return max(0, min(T, need))


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance: float
    f_max: float


@dataclass(frozen=True, eq=False)
class Network:
    buses: tuple
    lines: tuple
    demand: np.ndarray  # (N, T) per unit, row order follows ``buses``
    ref_bus: int | None = None

    def __post_init__(self):
        buses = tuple(int(b) for b in self.buses)
        object.__setattr__(self, "buses", buses)
        object.__setattr__(self, "lines", tuple(self.lines))
        D = np.array(self.demand, dtype=float)
        D.setflags(write=False)
        object.__setattr__(self, "demand", D)
        if self.ref_bus is None:
            object.__setattr__(self, "ref_bus", min(buses))
        if len(set(buses)) != len(buses):
            raise SchemaViolation("duplicate bus ids")
        if D.ndim != 2 or D.shape[0] != len(buses):
            raise SchemaViolation(f"demand must have one row per bus, got shape {D.shape}")
        if np.any(D < 0) or not np.all(np.isfinite(D)):
            raise SchemaViolation("demand must be finite and nonnegative")
        known = set(buses)
        for k, ln in enumerate(self.lines):
            for b in (ln.from_bus, ln.to_bus):
                if b not in known:
                    raise SchemaViolation(f"line {k + 1} references unknown bus {b}")
            if not ln.susceptance > 0 or not ln.f_max > 0:
                raise SchemaViolation(f"line {k + 1}: susceptance and f_max must be positive")
        if self.ref_bus not in known:
            raise SchemaViolation(f"reference bus {self.ref_bus} unknown")
        if not self._connected():
            raise SchemaViolation("network is not connected")

    def _connected(self) -> bool:
        adj = {b: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        seen, stack = {self.buses[0]}, [self.buses[0]]
        while stack:
            for nb in adj[stack.pop()] - seen:
                seen.add(nb)
                stack.append(nb)
        return len(seen) == len(self.buses)

    @property
    def bus_index(self) -> dict[int, int]:
        return {b: k for k, b in enumerate(self.buses)}

    @property
    def horizon(self) -> int:
        return self.demand.shape[1]


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: int
    capacity: float


@dataclass(frozen=True, eq=False)
class SucInstance:
    network: Network
    generators: tuple
    wind_farms: tuple
    c_shed: float
    c_slack: float | None = None
    base_mva: float = 100.0
    objective_offset: float = 0.0
    name: str = "suc"
    _fp: str = field(default="", repr=False)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "wind_farms", tuple(self.wind_farms))
        if self.c_slack is None:
            object.__setattr__(self, "c_slack", self.c_shed)
        known = set(self.network.buses)
        for g in self.generators:
            if g.bus not in known:
                raise SchemaViolation(f"generator {g.id} references unknown bus {g.bus}")
        for w in self.wind_farms:
            if w.bus not in known:
                raise SchemaViolation(f"wind farm {w.id} references unknown bus {w.bus}")
            if not w.capacity >= 0:
                raise SchemaViolation(f"wind farm {w.id}: negative capacity")
        ids = [g.id for g in self.generators]
        if len(set(ids)) != len(ids):
            raise SchemaViolation("duplicate generator ids")
        object.__setattr__(self, "_fp", self._fingerprint())

    @property
    def horizon(self) -> int:
        return self.network.horizon

    @property
    def scenario_dim(self) -> int:
        return len(self.wind_farms) * self.horizon

    def wind(self, xi) -> np.ndarray:
        """Scenario vector -> ``(farms, T)`` array, farm-major layout."""
        W = np.asarray(xi, dtype=float).reshape(len(self.wind_farms), self.horizon)
        return W

    def capacities(self) -> np.ndarray:
        return np.array([w.capacity for w in self.wind_farms])

    def with_offset(self, offset: float) -> "SucInstance":
        return replace(self, objective_offset=float(offset), _fp="")

    def _fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.generators, self.wind_farms, self.network.lines, self.network.buses,
                       self.network.ref_bus, self.c_shed, self.c_slack, self.base_mva,
                       self.objective_offset)).encode())
        h.update(self.network.demand.tobytes())
        return h.hexdigest()[:16]

    def fingerprint(self) -> str:
        return self._fp


# -- model fragments --------------------------------------------------------

@dataclass
class FirstStageVars:
    u: np.ndarray
    y: np.ndarray
    z: np.ndarray


@dataclass
class SecondStageVars:
    p: np.ndarray
    shed: np.ndarray
    slack: np.ndarray
    spill: np.ndarray
    flow: np.ndarray
    theta: np.ndarray
    balance_rows: np.ndarray


def _gen_arrays(inst: SucInstance):
    gs = inst.generators
    get = lambda a: np.array([getattr(g, a) for g in gs], dtype=float)
    return {a: get(a) for a in ("p_min", "p_max", "ramp_up", "ramp_down", "p0", "c_su", "c_fix",
                                "c_lin", "u0")}


def build_first_stage(model: Model, inst: SucInstance) -> FirstStageVars:
    G, T = len(inst.generators), inst.horizon
    ga = _gen_arrays(inst)
    lb = np.zeros((G, T))
    ub = np.ones((G, T))
    for k, g in enumerate(inst.generators):
        t0 = initial_lock_periods(g, T)
        lb[k, :t0] = ub[k, :t0] = g.u0
    u = model.add_vars((G, T), lb=lb, ub=ub, cost=ga["c_fix"][:, None], binary=True)
    y = model.add_vars((G, T), cost=ga["c_su"][:, None], binary=True)
    z = model.add_vars((G, T), binary=True)
    model.offset += inst.objective_offset
    # state transitions
    if T > 1:
        model.add_rows([(y[:, 1:], 1), (z[:, 1:], -1), (u[:, 1:], -1), (u[:, :-1], 1)], lo=0, hi=0)
    model.add_rows([(y[:, 0], 1), (z[:, 0], -1), (u[:, 0], -1)], lo=-ga["u0"], hi=-ga["u0"])
    model.add_rows([(y, 1), (z, 1)], hi=1)
    # rolling min up / down windows, truncated at period 1
    for k, g in enumerate(inst.generators):
        t0 = initial_lock_periods(g, T)
        for t in range(t0, T):
            ups = y[k, max(0, t - g.min_up + 1):t + 1]
            model.add_row(np.r_[ups, u[k, t]], np.r_[np.ones(ups.size), -1.0], hi=0.0)
            dns = z[k, max(0, t - g.min_down + 1):t + 1]
            model.add_row(np.r_[dns, u[k, t]], np.r_[np.ones(dns.size), 1.0], hi=1.0)
    return FirstStageVars(u, y, z)


def _incidence(inst: SucInstance):
    net = inst.network
    bi = net.bus_index
    N, G, L, J = len(net.buses), len(inst.generators), len(net.lines), len(inst.wind_farms)
    Agen = sp.coo_matrix((np.ones(G), ([bi[g.bus] for g in inst.generators], np.arange(G))), shape=(N, G))
    Awind = sp.coo_matrix((np.ones(J), ([bi[w.bus] for w in inst.wind_farms], np.arange(J))), shape=(N, J))
    fr = [bi[ln.from_bus] for ln in net.lines]
    to = [bi[ln.to_bus] for ln in net.lines]
    # net injection into the bus: -f at the sending end, +f at the receiving end
    Aflow = sp.coo_matrix((np.r_[-np.ones(L), np.ones(L)], (np.r_[fr, to], np.r_[np.arange(L), np.arange(L)])),
                          shape=(N, L))
    return Agen.tocsr(), Awind.tocsr(), Aflow.tocsr(), np.array(fr), np.array(to)


def _p_bounds(inst: SucInstance, u: np.ndarray):
    ga = _gen_arrays(inst)
    lo = ga["p_min"][:, None] * u
    hi = ga["p_max"][:, None] * u
    lo[:, 0] = np.maximum(ga["p_min"], ga["p0"] - ga["ramp_down"]) * u[:, 0]
    hi[:, 0] = np.minimum(ga["p_max"], ga["p0"] + ga["ramp_up"]) * u[:, 0]
    return lo, hi


def build_second_stage(model: Model, inst: SucInstance, wind, weight: float = 1.0,
                       u=None, u_fixed=None) -> SecondStageVars:
    """Dispatch fragment for one scenario.

    Pass ``u`` (first-stage variable indices) to link to a commitment fragment,
    or ``u_fixed`` (0/1 values, default all on) for a pure LP in which the
    commitment enters only through dispatch bounds. ``wind`` is ``(farms, T)``.
    """
    net = inst.network
    G, T, N, L, J = len(inst.generators), inst.horizon, len(net.buses), len(net.lines), len(inst.wind_farms)
    ga = _gen_arrays(inst)
    W = np.asarray(wind, dtype=float).reshape(J, T)
    if u is not None:
        p = model.add_vars((G, T), lb=0.0, ub=ga["p_max"][:, None], cost=weight * ga["c_lin"][:, None])
        model.add_rows([(p, 1), (u, -ga["p_max"][:, None])], hi=0)
        model.add_rows([(p, 1), (u, -ga["p_min"][:, None])], lo=0)
        model.add_rows([(p[:, 0], 1), (u[:, 0], -(ga["p0"] - ga["ramp_down"]))], lo=0)
        model.add_rows([(p[:, 0], 1), (u[:, 0], -(ga["p0"] + ga["ramp_up"]))], hi=0)
    else:
        uf = np.ones((G, T)) if u_fixed is None else np.asarray(u_fixed, dtype=float)
        lo, hi = _p_bounds(inst, uf)
        p = model.add_vars((G, T), lb=lo, ub=hi, cost=weight * ga["c_lin"][:, None])
    shed = model.add_vars((N, T), lb=0.0, ub=net.demand, cost=weight * inst.c_shed)
    slack = model.add_vars((N, T), lb=0.0, cost=weight * inst.c_slack)
    spill = model.add_vars((J, T), lb=0.0, ub=W)
    fmax = np.array([ln.f_max for ln in net.lines])[:, None]
    flow = model.add_vars((L, T), lb=-fmax, ub=fmax)
    tlb = np.full((N, T), -INF)
    tub = np.full((N, T), INF)
    r = net.bus_index[net.ref_bus]
    tlb[r] = tub[r] = 0.0
    theta = model.add_vars((N, T), lb=tlb, ub=tub)
    if T > 1:
        model.add_rows([(p[:, 1:], 1), (p[:, :-1], -1)],
                       lo=-ga["ramp_down"][:, None], hi=ga["ramp_up"][:, None])
    Agen, Awind, Aflow, fr, to = _incidence(inst)
    B = np.array([ln.susceptance for ln in net.lines])[:, None]
    if L:
        model.add_rows([(flow, 1), (theta[fr], -B), (theta[to], B)], lo=0, hi=0)
    I_T = sp.identity(T, format="csr")
    I_NT = sp.identity(N * T, format="csr")
    blocks = [(sp.kron(Agen, I_T), p), (-I_NT, slack), (I_NT, shed)]
    if L:
        blocks.append((sp.kron(Aflow, I_T), flow))
    if J:
        blocks.append((-sp.kron(Awind, I_T), spill))
    rhs = (net.demand - Awind @ W).ravel()
    rows = model.add_sparse_rows(blocks, lo=rhs, hi=rhs)
    return SecondStageVars(p, shed, slack, spill, flow, theta, rows.reshape(N, T))


def build_extensive_form(inst: SucInstance, dist: DiscreteDistribution):
    model = Model()
    fs = build_first_stage(model, inst)
    ss = [build_second_stage(model, inst, inst.wind(dist.values[k]), float(dist.probabilities[k]), fs.u)
          for k in range(dist.n)]
    return model, fs, ss


# -- problem ----------------------------------------------------------------

class SucProblem(TwoStageProblem):
    def __init__(self, instance: SucInstance, backend=None, config: SolverConfig | None = None):
        super().__init__(backend, config)
        self.instance = instance
        self._template = None
        self._sessions = {}

    def fingerprint(self) -> str:
        return f"{self.instance.fingerprint()}:{self.backend.name}:{self.config.milp_gap}"

    def decode(self, x: np.ndarray, fs: FirstStageVars) -> FirstStageDecision:
        inst = self.instance
        ga = _gen_arrays(inst)
        vals = {k: np.rint(x[getattr(fs, k)]).astype(np.int8) for k in ("u", "y", "z")}
        for k, v in vals.items():
            if np.max(np.abs(x[getattr(fs, k)] - v)) > 1e-6:
                raise ValidationError(f"first-stage variable {k} not integral")
            v.setflags(write=False)
        f = float(np.sum(ga["c_su"][:, None] * vals["y"]) + np.sum(ga["c_fix"][:, None] * vals["u"]))
        return FirstStageDecision(vals, f + inst.objective_offset)

    def solve_extensive(self, dist: DiscreteDistribution) -> TwoStageSolution:
        if dist.dim != self.instance.scenario_dim:
            raise ValidationError(f"scenario dimension {dist.dim} != {self.instance.scenario_dim}")
        model, fs, _ = build_extensive_form(self.instance, dist)
        sol = self.backend.solve(model.compile(), self.config)
        sol = require_optimal(sol, "extensive form", allow_time_limit=True)
        return TwoStageSolution(self.decode(sol.x, fs), sol.objective, sol.certified, sol.gap, sol.time_ms)

    # fixed-commitment evaluation through one reusable LP template
    def _lp(self):
        if self._template is None:
            inst = self.instance
            m = Model()
            ss = build_second_stage(m, inst, np.zeros((len(inst.wind_farms), inst.horizon)),
                                    u_fixed=np.ones((len(inst.generators), inst.horizon)))
            self._template = (m.compile(), ss)
        return self._template

    def _session(self):
        import threading

        key = threading.get_ident()
        if key not in self._sessions:
            self._sessions[key] = self.backend.lp_session(self._lp()[0])
        return self._sessions[key]

    def second_stage(self, x: FirstStageDecision, xi):
        """Solve the dispatch LP for a fixed commitment; returns (G(x, xi), solution arrays)."""
        inst = self.instance
        tmpl, ss = self._lp()
        W = inst.wind(xi)
        if np.any(W < -1e-12) or np.any(W > inst.capacities()[:, None] + 1e-9):
            raise ValidationError("wind scenario outside [0, capacity]")
        lb, ub = tmpl.lb.copy(), tmpl.ub.copy()
        lo, hi = _p_bounds(inst, np.asarray(x.values["u"], dtype=float))
        lb[ss.p.ravel()] = lo.ravel()
        ub[ss.p.ravel()] = hi.ravel()
        ub[ss.spill.ravel()] = W.ravel()
        rlo, rhi = tmpl.row_lo.copy(), tmpl.row_hi.copy()
        _, Awind, _, _, _ = _incidence(inst)
        rhs = (inst.network.demand - Awind @ W).ravel()
        rlo[ss.balance_rows.ravel()] = rhs
        rhi[ss.balance_rows.ravel()] = rhs
        sol = require_optimal(self._session().solve(lb, ub, rlo, rhi), "second-stage LP")
        arrays = {k: sol.x[getattr(ss, k)] for k in ("p", "shed", "slack", "spill", "flow", "theta")}
        return sol.objective, arrays, sol.time_ms

    def evaluate_fixed(self, x: FirstStageDecision, xi) -> float:
        g, _, _ = self.second_stage(x, xi)
        return x.first_stage_cost + g


def commitment_candidates(inst: SucInstance):
    """Every u in {0,1}^(G x T) as an int8 array (for enumeration on tiny instances)."""
    G, T = len(inst.generators), inst.horizon
    for bits in itertools.product((0, 1), repeat=G * T):
        yield np.array(bits, dtype=np.int8).reshape(G, T)


# -- instances --------------------------------------------------------------

def _gen_from_mw(gid, bus, p_min, p_max, ramp, ut, dt, u0, t_u0, p0, c_su, c_fix, c_lin,
                 base, cost_scale, hours=1.0, ramp_down=None) -> Generator:
    ramp_down = ramp if ramp_down is None else ramp_down
    return Generator(
        id=str(gid), bus=int(bus), p_min=float(p_min) / base, p_max=float(p_max) / base,
        ramp_up=float(ramp) / base, ramp_down=float(ramp_down) / base, min_up=int(ut), min_down=int(dt),
        u0=int(u0), t_u0=int(t_u0), p0=float(p0) / base,
        c_su=c_su * cost_scale, c_fix=c_fix * cost_scale * hours, c_lin=c_lin * base * cost_scale * hours,
    )


def desk_instance(cost_seed: int | None = None, delta: float = 1e-3, **overrides) -> SucInstance:
    """Two-bus, two-generator, two-period instance small enough to enumerate.

    Both generators sit at bus 1; demand and one wind farm sit at bus 2 behind
    a 100 MW line. ``cost_seed`` applies the multiplicative cost jitter.
    """
    from . import data

    inst = data.instance_from_document(data.desk_document(), **overrides)
    if cost_seed is not None:
        inst = perturb_costs(inst, cost_seed, delta)
    return inst


def desk_variant(seed: int, horizon: int = 3, **overrides) -> SucInstance:
    """Seeded member of the desk family: same two-bus topology, random demand and costs.

    Generator 1 (bus 1, behind the line) has cheap energy and expensive
    start-up; generator 2 sits at the load bus and can cover peak demand
    alone at a higher energy cost. Cost ratios, the demand profile and the
    wind capacity are drawn from ``seed`` so the best commitment depends on
    the wind scenario.
    """
    from . import data

    rng = np.random.default_rng([seed, 0x5EED])
    doc = data.desk_document()
    g1, g2 = doc["generators"]
    g1.update(c_su=float(rng.uniform(200, 2000)), c_fix=float(rng.uniform(100, 800)),
              c_lin=float(rng.uniform(10, 30)))
    g2.update(bus=2, p_max_mw=150.0, ramp_up_mw=150.0, ramp_down_mw=150.0,
              c_su=float(rng.uniform(50, 400)), c_fix=float(rng.uniform(20, 200)),
              c_lin=float(rng.uniform(40, 90)), p0_mw=float(rng.uniform(10, 80)))
    doc["demands"] = [{"bus": 2, "mw": [float(v) for v in rng.uniform(60, 150, size=horizon)]}]
    doc["wind_farms"][0]["capacity_mw"] = float(rng.uniform(60, 140))
    doc["name"] = f"desk-{seed}"
    return data.instance_from_document(doc, **overrides)


def perturb_costs(inst: SucInstance, seed: int, delta: float = 1e-3) -> SucInstance:
    """Multiply every generator cost coefficient by an independent U[1-delta, 1+delta] factor."""
    rng = np.random.default_rng(seed)
    gens = []
    for g in inst.generators:
        f = rng.uniform(1 - delta, 1 + delta, size=3)
        gens.append(replace(g, c_su=g.c_su * f[0], c_fix=g.c_fix * f[1], c_lin=g.c_lin * f[2]))
    return replace(inst, generators=tuple(gens), _fp="")


def load_rts24(network_path=None, seed: int | None = 0, delta: float = 1e-3, horizon: int | None = None,
               first_period: int = 1, **overrides) -> SucInstance:
    """The 24-bus case study; packaged data unless ``network_path`` is given."""
    from . import data

    inst = data.load_network(network_path or data.RTS24_PATH, horizon=horizon, first_period=first_period,
                             **overrides)
    if seed is not None:
        inst = perturb_costs(inst, seed, delta)
    return inst
