"""Shared builders for compact test instances."""

from __future__ import annotations

import numpy as np

from tpanon import Policy, RequestLog, TrajectoryDB, World


def build_db(world: World, positions: dict[str, list[tuple[int, int]]]) -> TrajectoryDB:
    """positions: user_id -> [(x, y), ...] of length world.horizon."""
    users = list(positions)
    pos = np.array([positions[u] for u in users], dtype=np.int64).reshape(
        len(users), world.horizon, 2
    )
    return TrajectoryDB(world, users, pos)


def build_log(entries: list[tuple[str, int]]) -> RequestLog:
    """entries: (user_id, t) pairs; req_ids/payloads are synthesized."""
    return RequestLog(
        [f"r{i}" for i in range(len(entries))],
        [u for u, _ in entries],
        [t for _, t in entries],
        [f"tag{i}" for i in range(len(entries))],
    )


def one_request_each(db: TrajectoryDB, t: int = 0) -> RequestLog:
    return build_log([(u, t) for u in db.user_ids])


def row_instance(xs: list[int], side: int = 16) -> tuple[TrajectoryDB, RequestLog]:
    """n users on one grid row (y=0), horizon 1, one request each at t=0."""
    world = World(side, 1)
    db = build_db(world, {f"u{i}": [(x, 0)] for i, x in enumerate(xs)})
    return db, one_request_each(db)


def brute_force_cost(db: TrajectoryDB, log: RequestLog, k: int) -> int:
    """Independent minimum over all partitions into groups of size >= k,
    computed with plain-python cost evaluation (no solver code paths)."""
    from itertools import combinations

    users = list(db.user_ids)
    n = len(users)
    weights = {u: {} for u in users}
    for u, t in zip(log.user_ids, log.ts.tolist()):
        weights[u][t] = weights[u].get(t, 0) + 1

    def naive_cost(group: tuple[str, ...]) -> int:
        total = 0
        for t in range(db.world.horizon):
            pts = [db.position(u, t) for u in group]
            xs = [p.x for p in pts]
            ys = [p.y for p in pts]
            area = (max(xs) - min(xs) + 1) * (max(ys) - min(ys) + 1)
            total += area * sum(weights[u].get(t, 0) for u in group)
        return total

    best = None

    def rec(remaining: tuple[str, ...], acc: int) -> None:
        nonlocal best
        if not remaining:
            if best is None or acc < best:
                best = acc
            return
        first, rest = remaining[0], remaining[1:]
        # sizes up to n: deliberately unrestricted (validates the 2k-1 cap)
        for size in range(k, len(remaining) + 1):
            leftover = len(remaining) - size
            if 0 < leftover < k:
                continue
            for combo in combinations(rest, size - 1):
                chosen = set(combo)
                rec(
                    tuple(u for u in rest if u not in chosen),
                    acc + naive_cost((first,) + combo),
                )

    rec(tuple(users), 0)
    assert best is not None
    return best


def random_valid_policy(db: TrajectoryDB, k: int, rng: np.random.Generator) -> Policy:
    """Uniformly messy partition into groups of size >= k."""
    users = list(db.user_ids)
    rng.shuffle(users)
    groups = []
    i = 0
    n = len(users)
    while i < n:
        size = int(rng.integers(k, 2 * k + 2))
        if n - (i + size) < k:
            size = n - i
        groups.append(tuple(users[i : i + size]))
        i += size
    return Policy(k, groups)
