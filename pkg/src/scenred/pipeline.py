"""End-to-end reduction runs: draw, cost matrix, selection, reduced solve, RAE.

Output files start with a ``# format_version=... config_hash=...`` line.
Everything except the ``wall_ms`` column is a deterministic function of the
config and the input data.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import costfn
from .config import FORMAT_VERSION, PipelineConfig
from .core import DiscreteDistribution
from .data import (DrawSpec, ScenarioPool, SynthParams, draw, dumps_canonical, load_scenarios, synth_scenarios,
                   write_atomic)
from .errors import ConfigError, ScenredError, SchemaViolation, SolverFailure
from .selection import forward_select
from .solver import SolverConfig, get_backend
from .stochprog import ZStarCache, rae
from .suc import SucInstance, SucProblem, desk_instance, desk_variant, load_rts24, perturb_costs
from .transport import discrete_distance

RESULT_FIELDS = ("seed", "method", "m", "rae_percent", "distance", "milp_count", "lp_count", "wall_ms")
STATS_FIELDS = ("method", "m", "count", "min", "q1", "median", "q3", "max")


def header_line(cfg: PipelineConfig) -> str:
    return f"# format_version={FORMAT_VERSION} config_hash={cfg.hash()}\n"


# -- setup ---------------------------------------------------------------------

def build_instance(cfg: PipelineConfig) -> SucInstance | None:
    pc = cfg.problem
    if pc is None:
        return None
    over = {"objective_offset": pc.objective_offset, "base_mva": pc.base_mva}
    if pc.network == "desk" and pc.variant is not None:
        inst = desk_variant(pc.variant, pc.horizon or 3, **over)
    elif pc.network == "desk":
        inst = desk_instance(horizon=pc.horizon, first_period=pc.first_period, **over)
    elif pc.network == "rts24":
        inst = load_rts24(seed=None, horizon=pc.horizon, first_period=pc.first_period, **over)
    else:
        from .data import load_network
        inst = load_network(cfg.resolve(pc.network), horizon=pc.horizon, first_period=pc.first_period, **over)
    if pc.cost_seed is not None:
        inst = perturb_costs(inst, pc.cost_seed, pc.perturbation_delta)
    return inst


def build_problem(cfg: PipelineConfig, inst: SucInstance | None) -> SucProblem | None:
    if inst is None:
        return None
    sc = SolverConfig(milp_gap=cfg.solver.milp_gap, time_limit=cfg.solver.time_limit_per_solve)
    return SucProblem(inst, backend=get_backend(cfg.solver.backend), config=sc)


def build_pool(cfg: PipelineConfig, inst: SucInstance | None) -> ScenarioPool:
    kind, spec = next(iter(cfg.scenarios.items()))
    if kind == "pool":
        caps = None if inst is None else {w.id: w.capacity for w in inst.wind_farms}
        pool = load_scenarios(cfg.resolve(spec), capacities=caps)
        if inst is not None and pool.entries.shape[1] != inst.scenario_dim:
            raise SchemaViolation(f"scenario width {pool.entries.shape[1]} != instance dimension {inst.scenario_dim}")
        return pool
    spec = dict(spec)
    try:
        size, seed = int(spec.pop("pool_size")), int(spec.pop("seed"))
    except KeyError as e:
        raise ConfigError(f"synthetic scenarios need {e}") from e
    if inst is None:
        farms, T = int(spec.pop("farms", 1)), int(spec.pop("horizon", 2))
        caps, ids = np.ones(farms), None
    else:
        caps, T, ids = inst.capacities(), inst.horizon, [w.id for w in inst.wind_farms]
    params = SynthParams(**{k: spec[k] for k in ("mean", "std", "rho", "sigma") if k in spec})
    return synth_scenarios(caps, T, size, seed, params, farm_ids=ids)


@dataclass
class Setup:
    cfg: PipelineConfig
    instance: SucInstance | None
    problem: SucProblem | None
    pool: ScenarioPool

    def sample(self, seed: int) -> DiscreteDistribution:
        return draw(self.pool, DrawSpec(seed, self.cfg.n, self.cfg.replacement))


def setup(cfg: PipelineConfig) -> Setup:
    inst = build_instance(cfg)
    return Setup(cfg, inst, build_problem(cfg, inst), build_pool(cfg, inst))


# -- reduce --------------------------------------------------------------------

def _matrices(S: Setup, P: DiscreteDistribution):
    shared = costfn.SharedSolves(S.problem, P, S.cfg.workers) if (
        S.problem is not None and S.cfg.share_cross_evaluation) else None
    for kind in S.cfg.methods:
        t0 = time.perf_counter()
        C = costfn.build_cost_matrix(kind, P, S.problem, S.cfg.workers, shared)
        yield kind, C, (time.perf_counter() - t0) * 1e3


def run_reduce(cfg: PipelineConfig, out_dir) -> dict:
    """Cost matrices, selections and reduced distributions for every (seed, method, m)."""
    S = setup(cfg)
    out = Path(out_dir)
    records = []
    for seed in cfg.seeds:
        P = S.sample(seed)
        for kind, C, _ in _matrices(S, P):
            if cfg.write_cost_matrix:
                buf = io.StringIO()
                buf.write(header_line(cfg))
                np.savetxt(buf, C.entries, delimiter=",", fmt="%.17g")
                write_atomic(out / f"cost_{kind}_seed{seed}.csv", buf.getvalue())
            for m in cfg.m:
                tr = forward_select(P, m, C)
                records.append({
                    "seed": seed, "method": kind, "m": m, "indices": list(tr.indices),
                    "probabilities": [float(q) for q in tr.final.probabilities],
                    "distance": discrete_distance(P, tr.subset, C),
                    "milp_count": C.stats.milp_count, "lp_count": C.stats.lp_count, "shared": C.stats.shared,
                })
    doc = {"format_version": FORMAT_VERSION, "config_hash": cfg.hash(), "n": cfg.n, "reductions": records}
    write_atomic(out / "reduction.json", dumps_canonical(doc) + "\n")
    return doc


# -- pipeline ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return "NaN" if math.isnan(x) else format(x, ".17g")
    return str(x)


def run_pipeline(cfg: PipelineConfig, out_dir, progress=None) -> list[dict]:
    """Write ``results.csv`` (plus ``failures.csv`` when any cell failed)."""
    S = setup(cfg)
    if S.problem is None:
        raise ConfigError("the pipeline evaluates decisions and needs a problem instance")
    cache = ZStarCache()
    rows, failures = [], []
    for seed in cfg.seeds:
        P = S.sample(seed)
        t0 = time.perf_counter()
        base = rae(S.problem, P, P, cache)
        rows.append({"seed": seed, "method": "SAA", "m": P.n, "rae_percent": base.rae_percent, "distance": 0.0,
                     "milp_count": 1, "lp_count": P.n, "wall_ms": (time.perf_counter() - t0) * 1e3})
        if not base.certified:
            failures.append({"seed": seed, "method": "SAA", "m": P.n, "error": "uncertified (time limit)"})
        try:
            mats = list(_matrices(S, P))
        except ScenredError as e:
            failures.append({"seed": seed, "method": "*", "m": "*", "error": f"{type(e).__name__}: {e}"})
            continue
        for kind, C, c_ms in mats:
            for m in cfg.m:
                t0 = time.perf_counter()
                tr = forward_select(P, m, C)
                try:
                    ev = rae(S.problem, P, tr.final, cache)
                    val = ev.rae_percent
                    if not ev.certified:
                        failures.append({"seed": seed, "method": kind, "m": m, "error": "uncertified (time limit)"})
                except (SolverFailure, ScenredError) as e:
                    val = float("nan")
                    failures.append({"seed": seed, "method": kind, "m": m, "error": f"{type(e).__name__}: {e}"})
                rows.append({"seed": seed, "method": kind, "m": m, "rae_percent": val,
                             "distance": discrete_distance(P, tr.subset, C),
                             "milp_count": C.stats.milp_count, "lp_count": C.stats.lp_count,
                             "wall_ms": c_ms + (time.perf_counter() - t0) * 1e3})
                if progress:
                    progress(rows[-1])
    write_results(rows, Path(out_dir) / "results.csv", cfg)
    if failures:
        buf = io.StringIO()
        buf.write(header_line(cfg))
        w = csv.DictWriter(buf, ("seed", "method", "m", "error"), lineterminator="\n")
        w.writeheader()
        w.writerows(failures)
        write_atomic(Path(out_dir) / "failures.csv", buf.getvalue())
    return rows


def write_results(rows, path, cfg: PipelineConfig) -> None:
    buf = io.StringIO()
    buf.write(header_line(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in RESULT_FIELDS])
    write_atomic(path, buf.getvalue())


# -- stats -------------------------------------------------------------------

def read_results(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        from .errors import MissingFile
        raise MissingFile(f"results file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != RESULT_FIELDS:
        raise SchemaViolation(f"{path}: header must be {','.join(RESULT_FIELDS)}")
    rows = []
    for k, r in enumerate(reader, start=2):
        try:
            rows.append({**r, "m": int(r["m"]), "rae_percent": float(r["rae_percent"])})
        except ValueError as e:
            raise SchemaViolation(f"{path}: data row {k}: {e}") from e
    if not rows:
        raise SchemaViolation(f"{path}: no result rows")
    return rows


def summarize(rows) -> list[dict]:
    """Five-number summary of ``rae_percent`` per (method, m); NaN cells are skipped."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        groups.setdefault((r["method"], r["m"]), []).append(r["rae_percent"])
    out = []
    for (method, m), vals in sorted(groups.items()):
        v = np.array([x for x in vals if not math.isnan(x)])
        if v.size == 0:
            q = [float("nan")] * 5
        else:
            q = [float(x) for x in np.quantile(v, [0, 0.25, 0.5, 0.75, 1.0], method="linear")]
        out.append({"method": method, "m": m, "count": int(v.size), "min": q[0], "q1": q[1], "median": q[2],
                    "q3": q[3], "max": q[4]})
    return out


def run_stats(results_path, out_path=None) -> str:
    rows = read_results(results_path)
    with open(results_path, encoding="utf-8") as fh:
        first = fh.readline()
    buf = io.StringIO()
    if first.startswith("#"):
        buf.write(first)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_FIELDS)
    for r in summarize(rows):
        w.writerow([_fmt(r[k]) for k in STATS_FIELDS])
    text = buf.getvalue()
    if out_path is not None:
        write_atomic(out_path, text)
    return text


def config_json(cfg: PipelineConfig) -> str:
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True)
