"""Deterministic synthetic instances for tests and benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import (
    InputError,
    RequestLog,
    TrajectoryDB,
    World,
    save_manifest,
    save_requests,
    save_trajectories,
)

MOBILITY_MODELS = ("random_waypoint", "uniform")


def generate(
    seed: int,
    n: int,
    world: World,
    model: str = "random_waypoint",
    request_rate: float = 1.0,
    speed: int = 1,
) -> tuple[TrajectoryDB, RequestLog]:
    """Seeded synthetic instance.

    random_waypoint: each user starts at a uniform cell, moves toward a
    uniform waypoint by at most `speed` cells per timestep in each axis
    (Chebyshev steps), and redraws the waypoint on arrival. `uniform`
    resamples every position independently (worst-case spread). Requests are
    a per-user Poisson count with mean `request_rate`, at uniform timesteps.
    """
    if n < 1:
        raise InputError(f"need n >= 1 users, got {n}")
    if request_rate < 0:
        raise InputError(f"request_rate must be >= 0, got {request_rate}")
    if speed < 1:
        raise InputError(f"speed must be >= 1, got {speed}")
    rng = np.random.default_rng(seed)
    side, horizon = world.side, world.horizon

    if model == "random_waypoint":
        pos = rng.integers(0, side, (n, 2), dtype=np.int64)
        waypoint = rng.integers(0, side, (n, 2), dtype=np.int64)
        positions = np.empty((n, horizon, 2), dtype=np.int64)
        positions[:, 0] = pos
        for t in range(1, horizon):
            pos = pos + np.clip(waypoint - pos, -speed, speed)
            arrived = (pos == waypoint).all(axis=1)
            n_arrived = int(arrived.sum())
            if n_arrived:
                waypoint[arrived] = rng.integers(0, side, (n_arrived, 2), dtype=np.int64)
            positions[:, t] = pos
    elif model == "uniform":
        positions = rng.integers(0, side, (n, horizon, 2), dtype=np.int64)
    else:
        raise InputError(f"unknown mobility model {model!r}")

    width = max(1, len(str(n - 1)))
    user_ids = [f"u{i:0{width}d}" for i in range(n)]
    db = TrajectoryDB(world, user_ids, positions)

    counts = rng.poisson(request_rate, n)
    total = int(counts.sum())
    ts = rng.integers(0, horizon, total, dtype=np.int64)
    senders = np.repeat(np.arange(n), counts)
    rwidth = max(1, len(str(max(total - 1, 0))))
    log = RequestLog(
        [f"r{i:0{rwidth}d}" for i in range(total)],
        [user_ids[u] for u in senders],
        ts,
        [f"tag-{i:0{rwidth}d}" for i in range(total)],
    )
    return db, log


def _line4() -> tuple[TrajectoryDB, RequestLog]:
    world = World(side=16, horizon=1)
    xs = {"a": 0, "b": 1, "c": 10, "d": 11}
    pos = np.array([[[x, 0]] for x in xs.values()], dtype=np.int64)
    db = TrajectoryDB(world, list(xs), pos)
    log = RequestLog(
        [f"r{i}" for i in range(4)], list(xs), [0, 0, 0, 0], [f"tag-{u}" for u in xs]
    )
    return db, log


def _intersection_attack_4() -> tuple[TrajectoryDB, RequestLog]:
    # Per-step optimal groupings are {a,b},{c,d} at t0 and {a,c},{b,d} at t1;
    # intersecting them pins a's pseudonym to {a}.
    world = World(side=16, horizon=2)
    xs = {"a": (0, 0), "b": (1, 2), "c": (2, 1), "d": (3, 3)}
    pos = np.array([[[x0, 0], [x1, 0]] for x0, x1 in xs.values()], dtype=np.int64)
    db = TrajectoryDB(world, list(xs), pos)
    users = [u for u in xs for _ in (0, 1)]
    ts = [t for _ in xs for t in (0, 1)]
    log = RequestLog(
        [f"r{i}" for i in range(8)],
        users,
        ts,
        [f"tag-{u}{t}" for u, t in zip(users, ts)],
    )
    return db, log


SCENARIOS = {
    "line-4": _line4,
    "intersection-attack-4": _intersection_attack_4,
}


def craft(name: str) -> tuple[TrajectoryDB, RequestLog]:
    """Hand-built regression scenarios."""
    try:
        build = SCENARIOS[name]
    except KeyError:
        raise InputError(
            f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}"
        ) from None
    return build()


def write_instance(
    out_dir: str | Path, db: TrajectoryDB, log: RequestLog, **manifest_extra
) -> dict[str, Path]:
    """Write trajectory/request CSVs plus the manifest into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectories": out / "trajectories.csv",
        "requests": out / "requests.csv",
        "manifest": out / "manifest.json",
    }
    save_trajectories(db, paths["trajectories"])
    save_requests(log, paths["requests"])
    save_manifest(db.world, paths["manifest"], n_users=db.n, **manifest_extra)
    return paths
