"""Pipeline configuration (``config.json``).

Example::

    {
      "format_version": 1,
      "problem": {"network": "desk", "horizon": null, "first_period": 1,
                  "cost_seed": null, "perturbation_delta": 0.001, "objective_offset": 0.0},
      "scenarios": {"synthetic": {"pool_size": 200, "seed": 11, "mean": 0.4, "std": 0.2,
                                  "rho": 0.8, "sigma": 0.5}},
      "n": 10, "replacement": false, "seeds": [1, 2, 3],
      "methods": ["ID", "Mo", "Br", "Be", "Pr"], "m": [1, 2, 5],
      "solver": {"backend": null, "milp_gap": 0.0, "time_limit_per_solve": null},
      "workers": 1, "share_cross_evaluation": true, "write_cost_matrix": false
    }

``network`` is ``"desk"``, ``"rts24"`` or a path to a network document;
with ``"desk"``, an integer ``variant`` selects a seeded member of the desk
family (:func:`scenred.suc.desk_variant`, three periods unless ``horizon``
says otherwise);
``scenarios`` is either ``{"pool": "<csv path>"}`` or ``{"synthetic": {...}}``.
Relative paths resolve against the directory holding the config file.
Omitting ``problem`` is allowed only when every method is ``ID``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .core import COST_KINDS
from .errors import ConfigError

FORMAT_VERSION = 1

_TOP_KEYS = {"format_version", "problem", "scenarios", "n", "replacement", "seeds", "methods", "m",
             "solver", "workers", "share_cross_evaluation", "write_cost_matrix", "verify"}


@dataclass(frozen=True)
class ProblemConfig:
    network: str = "desk"
    variant: int | None = None
    horizon: int | None = None
    first_period: int = 1
    cost_seed: int | None = None
    perturbation_delta: float = 1e-3
    objective_offset: float = 0.0
    base_mva: float | None = None


@dataclass(frozen=True)
class SolverSettings:
    backend: str | None = None
    milp_gap: float = 0.0
    time_limit_per_solve: float | None = None


@dataclass(frozen=True)
class VerifySettings:
    seed: int = 0
    transport_instances: int = 100
    selection_instances: int = 100
    theorem1_instances: int = 20
    theorem1_n: int = 10
    table1_n: int = 10
    fault: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    problem: ProblemConfig | None
    scenarios: dict
    n: int = 10
    replacement: bool = False
    seeds: tuple[int, ...] = (1,)
    methods: tuple[str, ...] = COST_KINDS
    m: tuple[int, ...] = (1,)
    solver: SolverSettings = field(default_factory=SolverSettings)
    workers: int = 1
    share_cross_evaluation: bool = True
    write_cost_matrix: bool = False
    verify: VerifySettings = field(default_factory=VerifySettings)
    base_dir: str = "."

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return {"format_version": FORMAT_VERSION, **d}

    def hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_overrides(self, workers=None, seed=None, gap=None, objective_offset=None) -> "PipelineConfig":
        cfg = self
        if workers is not None:
            if workers < 1:
                raise ConfigError("--workers must be at least 1")
            cfg = replace(cfg, workers=int(workers))
        if seed is not None:
            cfg = replace(cfg, seeds=(int(seed),))
        if gap is not None:
            if gap < 0:
                raise ConfigError("--gap must be nonnegative")
            cfg = replace(cfg, solver=replace(cfg.solver, milp_gap=float(gap)))
        if objective_offset is not None:
            if cfg.problem is None:
                raise ConfigError("--objective-offset needs a problem section")
            cfg = replace(cfg, problem=replace(cfg.problem, objective_offset=float(objective_offset)))
        return cfg


def _sub(cls, d, where: str):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    known = set(cls.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return cls(**d)


def parse_config(raw: dict, base_dir: str = ".") -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    if raw.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {raw.get('format_version')!r}")
    methods = tuple(raw.get("methods", COST_KINDS))
    bad = [k for k in methods if k not in COST_KINDS]
    if bad or not methods:
        raise ConfigError(f"methods must be a nonempty subset of {list(COST_KINDS)}, got {list(methods)}")
    problem = None if raw.get("problem") is None else _sub(ProblemConfig, raw["problem"], "problem")
    needs = [k for k in methods if k != "ID"]
    if problem is None and needs:
        raise ConfigError(f"methods {needs} need a problem instance; add a 'problem' section")
    scen = raw.get("scenarios")
    if not isinstance(scen, dict) or len(scen) != 1 or next(iter(scen)) not in ("pool", "synthetic"):
        raise ConfigError("scenarios must be {'pool': path} or {'synthetic': {...}}")
    n = raw.get("n", 10)
    ms = tuple(raw.get("m", (1,)))
    seeds = tuple(raw.get("seeds", (1,)))
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    if not ms or any(not isinstance(v, int) or not 1 <= v <= n for v in ms):
        raise ConfigError(f"every m must be an integer in 1..{n}, got {list(ms)}")
    if not seeds or any(not isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a nonempty list of integers")
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")
    solver = _sub(SolverSettings, raw.get("solver"), "solver")
    if solver.milp_gap < 0:
        raise ConfigError("milp_gap must be nonnegative")
    try:
        return PipelineConfig(problem=problem, scenarios=scen, n=n, replacement=bool(raw.get("replacement", False)),
                              seeds=seeds, methods=methods, m=ms, solver=solver, workers=workers,
                              share_cross_evaluation=bool(raw.get("share_cross_evaluation", True)),
                              write_cost_matrix=bool(raw.get("write_cost_matrix", False)),
                              verify=_sub(VerifySettings, raw.get("verify"), "verify"), base_dir=str(base_dir))
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return parse_config(raw, str(path.parent))
