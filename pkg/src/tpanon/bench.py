"""Utility and scaling measurements: analytic lower bound, solver comparison,
and the benchmark harness."""

from __future__ import annotations

import json
import math
import os
import resource
import time
from decimal import ROUND_HALF_EVEN, Decimal
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import approx, exact
from .attacker import audit
from .geometry import total_cost
from .model import InputError, Policy, RequestLog, TrajectoryDB, World
from .datagen import generate
from .policy_engine import anonymize

# Exact per-request lower bounds enumerate C(n-1, k-1) subsets; beyond this
# budget the Chebyshev nearest-neighbor relaxation takes over.
_EXACT_LB_BUDGET = 20_000


def _exact_request_lb(points: np.ndarray, sender: int, k: int) -> int:
    """Minimal bbox area covering the sender's point and k-1 other points."""
    p = points[sender]
    others = np.delete(points, sender, axis=0)
    if k == 2:
        areas = (np.abs(others[:, 0] - p[0]) + 1) * (np.abs(others[:, 1] - p[1]) + 1)
        return int(areas.min())
    best = None
    idx = range(len(others))
    for combo in combinations(idx, k - 1):
        sub = others[list(combo)]
        lo = np.minimum(sub.min(axis=0), p)
        hi = np.maximum(sub.max(axis=0), p)
        area = int((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1))
        if best is None or area < best:
            best = area
    return best


def lower_bound(
    db: TrajectoryDB, log: RequestLog, k: int, method: str = "auto"
) -> int:
    """Analytic lower bound on total_cost of every valid policy: each
    request's region must cover its sender plus at least k-1 other users at
    the request's timestep.

    method "exact" computes the minimal covering rectangle per request;
    "chebyshev" uses area >= (Chebyshev distance to the (k-1)-th nearest
    other user) + 1, valid because a rectangle containing two cells at
    Chebyshev distance d has a side of length >= d+1. "auto" picks exact
    while the subset enumeration stays small.
    """
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if db.n < k:
        raise InputError(f"fewer than k users (n={db.n}, k={k})")
    if method not in ("auto", "exact", "chebyshev"):
        raise InputError(f"unknown lower-bound method {method!r}")
    if method == "auto":
        method = "exact" if math.comb(db.n - 1, k - 1) <= _EXACT_LB_BUDGET else "chebyshev"
    if len(log) == 0:
        return 0

    rows = log.user_rows(db)
    total = 0
    ts_list = log.ts
    if method == "exact":
        memo: dict[tuple[int, int], int] = {}
        for row, t in zip(rows.tolist(), ts_list.tolist()):
            key = (row, t)
            lb = memo.get(key)
            if lb is None:
                lb = _exact_request_lb(db.positions[:, t], row, k)
                memo[key] = lb
            total += lb
    else:
        for t in np.unique(ts_list):
            mask = ts_list == t
            pts = db.positions[:, t].astype(np.float64)
            tree = cKDTree(pts)
            senders = rows[mask]
            # query includes the sender itself at distance 0
            dists = tree.query(pts[senders], k=k, p=np.inf)[0]
            d = dists[:, k - 1] if k > 1 else dists
            total += int(np.rint(d).astype(np.int64).sum()) + int(mask.sum())
    return total


def compare(exact_cost: int, approx_cost: int) -> Decimal:
    """approx/exact cost ratio, rounded half-even to 6 places; (0, 0) is the
    empty-instance convention and compares as 1."""
    if exact_cost == 0:
        if approx_cost == 0:
            return Decimal("1.000000")
        raise InputError("zero exact cost with nonzero approximate cost")
    q = Decimal(approx_cost) / Decimal(exact_cost)
    return q.quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN)


def _peak_mem_mb() -> float:
    # ru_maxrss is KiB on Linux; best-effort, monotone over the process life.
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def run_bench(config: Mapping, out_dir: str | Path | None = None) -> list[dict]:
    """Run the configured instance/solver grid and emit one row per pair.

    Config keys: n (int or list), l, k, seed; optional side (default 1024),
    rate (1.0), speed (1), model, solver/solvers (default approx), cap,
    repetitions (1), lb_method, threads. Rows that fail (e.g. exact beyond
    its cap) carry an "error" field and the run continues.
    """
    try:
        sizes = [int(v) for v in _as_list(config["n"])]
        horizon = int(config["l"])
        k = int(config["k"])
        seed = int(config["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed bench config: {e}") from None
    side = int(config.get("side", 1024))
    rate = float(config.get("rate", 1.0))
    speed = int(config.get("speed", 1))
    model = str(config.get("model", "random_waypoint"))
    solvers = [str(s) for s in _as_list(config.get("solvers", config.get("solver", "approx")))]
    cap = int(config.get("cap", exact.DEFAULT_CAP))
    reps = int(config.get("repetitions", 1))
    lb_method = str(config.get("lb_method", "auto"))
    threads = int(config.get("threads", os.environ.get("TPANON_THREADS", os.cpu_count() or 1)))
    for s in solvers:
        if s not in ("approx", "exact"):
            raise InputError(f"unknown solver {s!r}")

    rows: list[dict] = []
    for n in sizes:
        for rep in range(reps):
            inst_seed = seed + rep
            world = World(side, horizon)
            db, log = generate(inst_seed, n, world, model=model, request_rate=rate, speed=speed)
            lb = lower_bound(db, log, k, method=lb_method) if n >= k else None
            costs: dict[str, int] = {}
            for solver in solvers:
                row = {
                    "n": n,
                    "l": horizon,
                    "k": k,
                    "solver": solver,
                    "seed": inst_seed,
                    "threads": threads,
                }
                try:
                    start = time.perf_counter()
                    if solver == "exact":
                        policy = exact.solve_exact(db, log, k, cap=cap)
                    else:
                        policy = approx.solve_approx(db, log, k)
                    wall_ms = (time.perf_counter() - start) * 1000.0
                    cost = total_cost(policy, db, log)
                    costs[solver] = cost
                    anon = anonymize(db, log, policy, seed=inst_seed)
                    report = audit(anon, db, policy, k)
                    row.update(
                        {
                            "cost": cost,
                            "lb": lb,
                            "ratio_lb": float(compare(lb, cost)) if lb else None,
                            "ratio_opt": None,
                            "wall_ms": round(wall_ms, 3),
                            "audit_pass": report.passed,
                            "peak_mem_mb": round(_peak_mem_mb(), 1),
                            "error": None,
                        }
                    )
                except InputError as e:
                    row.update(
                        {
                            "cost": None,
                            "lb": lb,
                            "ratio_lb": None,
                            "ratio_opt": None,
                            "wall_ms": None,
                            "audit_pass": None,
                            "peak_mem_mb": None,
                            "error": str(e),
                        }
                    )
                rows.append(row)
            if "exact" in costs:
                for row in rows:
                    if row["n"] == n and row["seed"] == inst_seed and row["cost"] is not None:
                        row["ratio_opt"] = float(compare(costs["exact"], row["cost"]))

    if out_dir is not None:
        write_report(rows, out_dir)
    return rows


_REPORT_COLUMNS = [
    "n", "l", "k", "solver", "seed", "cost", "lb", "ratio_lb", "ratio_opt",
    "wall_ms", "audit_pass", "peak_mem_mb", "threads", "error",
]


def write_report(rows: Sequence[Mapping], out_dir: str | Path) -> tuple[Path, Path]:
    """JSONL report plus a CSV mirror for plotting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jsonl = out / "report.jsonl"
    csv = out / "report.csv"
    with jsonl.open("w") as f:
        for row in rows:
            f.write(json.dumps({c: row.get(c) for c in _REPORT_COLUMNS}) + "\n")
    with csv.open("w") as f:
        f.write(",".join(_REPORT_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join("" if row.get(c) is None else str(row.get(c)) for c in _REPORT_COLUMNS) + "\n")
    return jsonl, csv
