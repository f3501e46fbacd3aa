import json

import pytest

from mba import bench
from mba.bench import (COLUMNS, CSV_VERSION, RunConfig, aggregate, improvement_pct, load_configs,
                       read_csv, run_benchmark, run_method, write_csv)
from mba.exact import brute_force
from mba.instance import check_solution, generate_random, objective


def test_improvement_formula():
    assert improvement_pct(110, 100) == pytest.approx(10.0)
    assert improvement_pct(100, 100) == 0.0
    assert improvement_pct(5, 0) is None and improvement_pct(None, 3) is None


@pytest.mark.parametrize("bad", [
    dict(method="gp4"), dict(n=0), dict(d=-1.0), dict(time_limit_seconds=0),
])
def test_config_validation(bad):
    kw = dict(method="greedy", n=4, m=3, d=1.0, seeds=[0])
    kw.update(bad)
    with pytest.raises(ValueError):
        RunConfig(**kw)


def test_lookahead_from_method_name():
    assert RunConfig("gp2", 4, 3, 1.0, [0]).lookahead == 2
    assert RunConfig("cg3", 4, 3, 1.0, [0]).lookahead == 3
    assert RunConfig("exact", 4, 3, 1.0, [0]).lookahead is None


def test_greedy_improvement_is_zero():
    records = run_benchmark(RunConfig("greedy", 8, 4, 1.5, list(range(10))))
    assert all(r.improvement_pct == 0 for r in records)
    assert all(r.objective == r.greedy_objective for r in records)


def test_exact_small_against_brute_force():
    records = run_benchmark(RunConfig("exact", 4, 3, 1.0, list(range(50))))
    assert len(records) == 50
    for r in records:
        inst = generate_random(4, 3, 1.0, r.seed)
        best, _ = brute_force(inst)
        assert r.objective <= r.greedy_objective
        assert r.optimal and r.objective == best


@pytest.mark.parametrize("method", ["gp1", "gp2", "cg1"])
def test_methods_never_worse_than_greedy(method):
    for r in run_benchmark(RunConfig(method, 10, 4, 2.0, list(range(4)), time_limit_seconds=20)):
        assert r.objective <= r.greedy_objective
        assert r.improvement_pct >= 0


def test_run_method_returns_feasible_solutions():
    inst = generate_random(6, 4, 1.5, 5)
    for method in bench.METHODS:
        if method == "brute":
            inst_b = generate_random(4, 3, 1.5, 5)
            res = run_method(method, inst_b, 10)
            check_solution(inst_b, res["solution"])
            continue
        res = run_method(method, inst, 10)
        check_solution(inst, res["solution"])
        assert objective(inst, res["solution"]) == res["objective"]


def test_cg_record_carries_timing_and_columns():
    (r,) = run_benchmark(RunConfig("cg1", 10, 4, 2.0, [1], time_limit_seconds=20))
    assert r.cg_pre_s is not None and r.cg_master_s is not None
    assert r.columns_generated >= 10


def test_determinism_across_runs():
    cfg = RunConfig("gp1", 12, 5, 2.0, list(range(6)))
    a = [r.objective for r in run_benchmark(cfg)]
    b = [r.objective for r in run_benchmark(cfg)]
    assert a == b


def test_parallel_matches_serial():
    serial = run_benchmark(RunConfig("gp1", 10, 4, 2.0, [3, 1, 2]))
    parallel = run_benchmark(RunConfig("gp1", 10, 4, 2.0, [3, 1, 2], jobs=2))
    assert [r.seed for r in parallel] == [1, 2, 3]
    assert [r.objective for r in serial] == [r.objective for r in parallel]


def test_csv_schema_and_aggregate(tmp_path):
    path = tmp_path / "out.csv"
    records = run_benchmark(RunConfig("gp1", 8, 4, 1.5, list(range(5)), out=str(path)))
    first = path.read_text().splitlines()[0]
    assert first.startswith(f"# {CSV_VERSION}") and "100*(greedy_objective/objective - 1)" in first
    assert path.read_text().splitlines()[1] == ",".join(COLUMNS)
    rows, agg = read_csv(path)
    assert len(rows) == 5 and agg["method"] == "mean:gp1"
    for col in ("objective", "greedy_objective", "improvement_pct"):
        recomputed = sum(float(r[col]) for r in rows) / len(rows)
        assert float(agg[col]) == pytest.approx(recomputed, rel=1e-5)
    assert [int(r["objective"]) for r in rows] == [r.objective for r in records]


def test_error_is_recorded_and_run_continues(monkeypatch):
    real = bench.run_method

    def flaky(method, inst, time_limit, greedy_sol=None):
        if inst.metadata.get("seed") == 1:
            raise RuntimeError("boom")
        return real(method, inst, time_limit, greedy_sol)

    monkeypatch.setattr(bench, "run_method", flaky)
    records = run_benchmark(RunConfig("greedy", 5, 3, 1.0, [0, 1, 2]))
    assert [r.status.startswith("Error") for r in records] == [False, True, False]
    assert "boom" in records[1].status and records[1].objective is None
    agg = aggregate(records)
    assert agg["status"] == "0/3 optimal"


def test_unwritable_output_raises(tmp_path):
    cfg = RunConfig("greedy", 4, 3, 1.0, [0], out=str(tmp_path / "missing" / "x.csv"))
    with pytest.raises(OSError):
        run_benchmark(cfg)


def test_load_configs_expands_methods_and_seed_ranges(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"runs": [
        {"methods": ["greedy", "gp1"], "n": 5, "m": 3, "d": 1.0, "seeds": {"start": 2, "count": 3}},
        {"method": "exact", "n": 4, "m": 3, "d": 2.0, "seeds": [7], "time_limit_seconds": 9},
    ]}))
    cfgs = load_configs(path)
    assert [c.method for c in cfgs] == ["greedy", "gp1", "exact"]
    assert cfgs[0].seeds == [2, 3, 4] and cfgs[2].time_limit_seconds == 9


def test_write_csv_handles_empty_values(tmp_path):
    rec = bench.RunRecord(3, 2, 1.0, 0, "greedy", None, None, None, "Error: x", 0.0)
    path = tmp_path / "e.csv"
    write_csv([rec], path)
    rows, agg = read_csv(path)
    assert rows[0]["objective"] == "" and agg["objective"] == ""
