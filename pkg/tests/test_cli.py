import csv
import json
import math
import subprocess
import sys

import pytest

from scenred import cli, pipeline
from scenred.errors import SolverFailure

DESK = {
    "problem": {"network": "desk", "variant": 4},
    "scenarios": {"synthetic": {"pool_size": 100, "seed": 3, "mean": 0.5, "std": 0.25, "rho": 0.5, "sigma": 0.0}},
    "n": 10, "seeds": [1, 2, 3], "methods": ["ID", "Mo", "Br", "Be", "Pr"], "m": [1, 2, 5],
    "solver": {"milp_gap": 0.0},
}


def write_cfg(tmp_path, **changes):
    cfg = {**DESK, **changes}
    cfg = {k: v for k, v in cfg.items() if v is not None}
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def body(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("desk")
    cfg = write_cfg(base)
    outs = []
    for k in range(2):
        out = base / f"out{k}"
        assert cli.run(["pipeline", "--config", cfg, "--out", str(out)]) == 0
        outs.append(out / "results.csv")
    return outs


def test_pipeline_row_count_and_header(desk_run):
    head, rows = body(desk_run[0])
    assert head.startswith("# format_version=1 config_hash=")
    assert list(rows[0]) == list(pipeline.RESULT_FIELDS)
    assert len(rows) == 3 * 5 * 3 + 3
    assert sum(r["method"] == "SAA" for r in rows) == 3


def test_pipeline_rerun_identical_except_wall_time(desk_run):
    a, b = (body(p) for p in desk_run)
    assert a[0] == b[0]
    strip = [[{k: v for k, v in r.items() if k != "wall_ms"} for r in rows] for _, rows in (a, b)]
    assert strip[0] == strip[1]


def test_pipeline_results_sane(desk_run):
    _, rows = body(desk_run[0])
    for r in rows:
        if r["method"] == "SAA":
            assert float(r["rae_percent"]) <= 1e-4
    for seed in ("1", "2", "3"):
        m1 = {r["method"]: float(r["rae_percent"]) for r in rows if r["seed"] == seed and r["m"] == "1"}
        for kind in ("ID", "Mo", "Br", "Be"):
            assert m1["Pr"] <= m1[kind] + 1e-6 * max(1.0, abs(m1[kind]))


def test_stats_on_pipeline_output(desk_run, tmp_path, capsys):
    assert cli.run(["stats", str(desk_run[0])]) == 0
    text = capsys.readouterr().out.splitlines()
    assert text[0].startswith("# format_version=1")
    assert text[1] == ",".join(pipeline.STATS_FIELDS)
    assert len(text) == 2 + 5 * 3 + 1


def results_file(tmp_path, values, seeds=None):
    p = tmp_path / "r.csv"
    lines = [",".join(pipeline.RESULT_FIELDS)]
    for k, v in enumerate(values):
        s = seeds[k] if seeds else k + 1
        lines.append(f"{s},Pr,1,{v},0,0,0,1")
    p.write_text("\n".join(lines) + "\n")
    return p


def test_stats_median_convention(tmp_path):
    (row,) = pipeline.summarize(pipeline.read_results(results_file(tmp_path, [1, 2, 3, 4])))
    assert (row["min"], row["q1"], row["median"], row["q3"], row["max"]) == (1, 1.75, 2.5, 3.25, 4)


def test_stats_single_seed(tmp_path):
    (row,) = pipeline.summarize(pipeline.read_results(results_file(tmp_path, [0.7])))
    assert row["count"] == 1
    assert len({row[k] for k in ("min", "q1", "median", "q3", "max")}) == 1


def test_stats_skips_failed_cells(tmp_path):
    (row,) = pipeline.summarize(pipeline.read_results(results_file(tmp_path, [1, "NaN", 3])))
    assert row["count"] == 2 and row["median"] == 2


def test_stats_empty_input_is_an_error(tmp_path, capsys):
    p = results_file(tmp_path, [])
    assert cli.run(["stats", str(p)]) == cli.EXIT_DATA
    out = tmp_path / "s.csv"
    assert cli.run(["stats", str(p), "--out", str(out)]) == cli.EXIT_DATA
    assert not out.exists()


def test_stats_missing_file(tmp_path):
    assert cli.run(["stats", str(tmp_path / "none.csv")]) == cli.EXIT_DATA


def test_reduce_id_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, problem=None, methods=["ID"], m=[1], seeds=[5])
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["reduce", "--config", cfg, "--out", str(a)]) == 0
    assert cli.run(["reduce", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "reduction.json").read_bytes() == (b / "reduction.json").read_bytes()
    doc = json.loads((a / "reduction.json").read_text())
    (rec,) = doc["reductions"]
    assert len(rec["indices"]) == 1 and rec["probabilities"] == [pytest.approx(1.0, abs=1e-12)]


def test_reduce_be_counts_and_cost_matrix(tmp_path):
    cfg = write_cfg(tmp_path, methods=["Be"], m=[1, 3], seeds=[2], write_cost_matrix=True,
                    share_cross_evaluation=False)
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "reduction.json").read_text())
    for rec in doc["reductions"]:
        assert (rec["milp_count"], rec["lp_count"]) == (10, 90)
    text = (tmp_path / "o" / "cost_Be_seed2.csv").read_text().splitlines()
    assert text[0].startswith("# format_version=1") and len(text) == 11


def test_seed_override(tmp_path):
    cfg = write_cfg(tmp_path, problem=None, methods=["ID"], m=[1, 2])
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path), "--seed-override", "42"]) == 0
    doc = json.loads((tmp_path / "reduction.json").read_text())
    assert {r["seed"] for r in doc["reductions"]} == {42}


def test_pr_without_problem_is_config_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, problem=None, methods=["Pr"])
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "problem" in capsys.readouterr().err


@pytest.mark.parametrize("change", [{"m": [11]}, {"methods": ["XX"]}, {"bogus": 1}, {"n": 0}])
def test_bad_configs(tmp_path, change):
    cfg = write_cfg(tmp_path, **change)
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_missing_config(tmp_path):
    assert cli.run(["reduce", "--config", str(tmp_path / "x.json"), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_missing_pool_is_data_error(tmp_path):
    cfg = write_cfg(tmp_path, scenarios={"pool": "missing.csv"})
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_DATA


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverFailure("backend gave up")
    monkeypatch.setattr(pipeline, "run_reduce", boom)
    cfg = write_cfg(tmp_path)
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_SOLVER


def test_negative_gap_rejected(tmp_path):
    cfg = write_cfg(tmp_path)
    assert cli.run(["reduce", "--config", cfg, "--out", str(tmp_path), "--gap", "-1"]) == cli.EXIT_CONFIG


def test_verify_default_passes(tmp_path, capsys):
    assert cli.run(["verify", "--out", str(tmp_path)]) == 0
    report = (tmp_path / "verify_report.txt").read_text()
    assert "all suites passed" in report
    for name in ("transport", "redistribution", "first_pick", "table1", "theorem1"):
        assert name in report
    assert "instances=" in report and "max_error=" in report


def test_verify_detects_injected_fault(tmp_path, capsys):
    code = cli.run(["verify", "--out", str(tmp_path), "--inject-fault", "perturb_diagonal"])
    assert code == cli.EXIT_VERIFY
    assert "theorem1" in capsys.readouterr().err
    assert "failed suites: theorem1" in (tmp_path / "verify_report.txt").read_text()


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, problem=None, methods=["Pr"])
    res = subprocess.run([sys.executable, "-m", "scenred.cli", "reduce", "--config", cfg, "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "config error" in res.stderr
