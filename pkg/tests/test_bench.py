import json
from decimal import Decimal

import numpy as np
import pytest

import tpanon as tp
from tpanon.bench import compare, lower_bound, run_bench, write_report
from tpanon.exact import solve_exact

from helpers import random_valid_policy, row_instance


def test_lower_bound_line4():
    db, log = tp.craft("line-4")
    assert lower_bound(db, log, 2) == 8  # tight: equals the optimum
    assert lower_bound(db, log, 2) == tp.total_cost(solve_exact(db, log, 2), db, log)
    # k = n: every request must be covered with everyone -> full bbox each
    assert lower_bound(db, log, 4) == 4 * 12


def test_lower_bound_empty_and_errors():
    db, log = tp.craft("line-4")
    assert lower_bound(db, tp.RequestLog([], [], [], []), 2) == 0
    with pytest.raises(tp.InputError):
        lower_bound(db, log, 1)
    with pytest.raises(tp.InputError):
        lower_bound(db, log, 9)
    with pytest.raises(tp.InputError):
        lower_bound(db, log, 2, method="magic")


def test_lower_bound_below_exact_and_random_policies():
    rng = np.random.default_rng(19)
    for trial in range(20):
        n = int(rng.integers(4, 10))
        world = tp.World(16, int(rng.integers(1, 4)))
        db, log = tp.generate(int(rng.integers(1 << 30)), n, world, request_rate=2.0)
        for k in range(2, n // 2 + 1):
            lb = lower_bound(db, log, k)
            assert lb <= tp.total_cost(solve_exact(db, log, k), db, log)
            for _ in range(10):
                assert lb <= tp.total_cost(random_valid_policy(db, k, rng), db, log)


def test_chebyshev_relaxation_never_exceeds_exact_method():
    rng = np.random.default_rng(29)
    for trial in range(25):
        n = int(rng.integers(4, 12))
        world = tp.World(16, int(rng.integers(1, 3)))
        db, log = tp.generate(int(rng.integers(1 << 30)), n, world, request_rate=2.0)
        for k in (2, 3):
            if k > n:
                continue
            che = lower_bound(db, log, k, method="chebyshev")
            exa = lower_bound(db, log, k, method="exact")
            assert che <= exa


def test_chebyshev_collinear_pin():
    # sender at x=0 with nearest other user at x=13: the relaxation claims
    # only d+1 = 14 cells, matching the true minimal covering rectangle
    db, log = row_instance([0, 13])
    assert lower_bound(db, log, 2, method="chebyshev") == 14 + 14
    assert lower_bound(db, log, 2, method="exact") == 14 + 14


def test_compare_rounding():
    assert compare(0, 0) == Decimal("1.000000")
    assert compare(8, 8) == Decimal("1.000000")
    assert compare(3, 4) == Decimal("1.333333")
    assert compare(2, 3) == Decimal("1.500000")
    # half-even at the sixth decimal
    assert compare(2000000, 2000001) == Decimal("1.000000")
    assert compare(2000000, 2000003) == Decimal("1.000002")
    with pytest.raises(tp.InputError):
        compare(0, 5)


def test_run_bench_structure(tmp_path):
    cfg = {"n": [6, 8], "l": 2, "k": 2, "seed": 3, "side": 16,
           "solvers": ["approx", "exact"], "repetitions": 1}
    rows = run_bench(cfg, out_dir=tmp_path)
    assert len(rows) == 4
    for row in rows:
        assert row["error"] is None
        assert row["audit_pass"] is True
        assert row["cost"] >= row["lb"]
        assert row["ratio_lb"] >= 1.0 and row["ratio_opt"] >= 1.0
        assert row["wall_ms"] >= 0
    # approx never beats exact
    by = {(r["n"], r["solver"]): r for r in rows}
    for n in (6, 8):
        assert by[(n, "approx")]["cost"] >= by[(n, "exact")]["cost"]
        assert by[(n, "exact")]["ratio_opt"] == 1.0

    jsonl = tmp_path / "report.jsonl"
    csv = tmp_path / "report.csv"
    assert jsonl.exists() and csv.exists()
    parsed = [json.loads(line) for line in jsonl.read_text().splitlines()]
    assert len(parsed) == 4 and parsed[0]["n"] == 6
    header = csv.read_text().splitlines()[0].split(",")
    assert {"n", "l", "k", "solver", "seed", "cost", "lb", "ratio_lb",
            "ratio_opt", "wall_ms", "audit_pass"} <= set(header)


def test_run_bench_exact_beyond_cap_continues(tmp_path):
    cfg = {"n": [30], "l": 1, "k": 2, "seed": 1, "side": 16,
           "solvers": ["exact", "approx"]}
    rows = run_bench(cfg, out_dir=tmp_path)
    exact_row = next(r for r in rows if r["solver"] == "exact")
    approx_row = next(r for r in rows if r["solver"] == "approx")
    assert exact_row["error"] is not None and "too large" in exact_row["error"]
    assert exact_row["cost"] is None
    assert approx_row["error"] is None and approx_row["audit_pass"] is True


def test_run_bench_config_errors(tmp_path):
    with pytest.raises(tp.InputError):
        run_bench({"n": 5, "l": 1, "k": 2})  # missing seed
    with pytest.raises(tp.InputError):
        run_bench({"n": 5, "l": 1, "k": 2, "seed": 0, "solvers": ["annealing"]})


def test_write_report_roundtrip(tmp_path):
    rows = [{"n": 5, "l": 1, "k": 2, "solver": "approx", "seed": 0, "cost": 10,
             "lb": 8, "ratio_lb": 1.25, "ratio_opt": None, "wall_ms": 1.0,
             "audit_pass": True, "peak_mem_mb": 100.0, "threads": 1, "error": None}]
    jsonl, csv = write_report(rows, tmp_path)
    assert json.loads(jsonl.read_text())["cost"] == 10
    assert csv.read_text().count("\n") == 2
