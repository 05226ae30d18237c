"""Exact optimal policy solver for small instances.

Search space: partitions into groups of size k..2k-1. Restricting to 2k-1 is
lossless because the per-request cost is split-monotone: any group of size
>= 2k can be split into two valid groups without increasing total cost, so
some optimum uses only groups below 2k. The solver is a subset-DP over
bitmasks with canonical tie-breaking, so it doubles as a deterministic oracle
for the approximation solver.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .model import InputError, Policy, RequestLog, TrajectoryDB

_INF = 1 << 62

DEFAULT_CAP = 15


def enumerate_partitions(users: Sequence[str], k: int) -> Iterator[tuple[tuple[str, ...], ...]]:
    """Yield every partition of `users` into groups of size k..2k-1, exactly
    once, in canonical form (members sorted, groups ordered by smallest
    member)."""
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    users = tuple(sorted(users))
    if len(users) < k:
        raise InputError(f"k exceeds user count ({k} > {len(users)})")

    def rec(remaining: tuple[str, ...]) -> Iterator[tuple[tuple[str, ...], ...]]:
        if not remaining:
            yield ()
            return
        first, rest = remaining[0], remaining[1:]
        for size in range(k, 2 * k):
            for combo in combinations(rest, size - 1):
                leftover = len(rest) - (size - 1)
                if 0 < leftover < k:
                    continue
                chosen = set(combo)
                rem2 = tuple(u for u in rest if u not in chosen)
                group = (first,) + combo
                for tail in rec(rem2):
                    yield (group,) + tail

    return rec(users)


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        b = mask & -mask
        out.append(b.bit_length() - 1)
        mask ^= b
    return out


class _CostTable:
    """Memoized multi-timestep cost of a member subset (bitmask)."""

    def __init__(self, db: TrajectoryDB, log: RequestLog):
        self.pos = db.positions  # (n, horizon, 2)
        horizon = db.world.horizon
        w = np.zeros((db.n, horizon), dtype=np.int64)
        if len(log):
            rows = log.user_rows(db)
            np.add.at(w, (rows, log.ts), 1)
        self.w = w
        self._memo: dict[int, int] = {}

    def cost(self, mask: int) -> int:
        c = self._memo.get(mask)
        if c is None:
            rows = _bits(mask)
            sub = self.pos[rows]
            lo = sub.min(axis=0)
            hi = sub.max(axis=0)
            areas = (hi[:, 0] - lo[:, 0] + 1) * (hi[:, 1] - lo[:, 1] + 1)
            c = int((areas * self.w[rows].sum(axis=0)).sum())
            self._memo[mask] = c
        return c


def solve_exact(
    db: TrajectoryDB, log: RequestLog, k: int, cap: int = DEFAULT_CAP
) -> Policy:
    """Minimum-total-cost policy over all partitions into groups of size >= k.

    Refuses instances with more than `cap` users. Ties are broken by canonical
    partition order (lexicographically smallest sequence of sorted groups).
    """
    n = db.n
    if n > cap:
        raise InputError(f"instance too large for exact solver (n={n} > cap={cap})")
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if n < k:
        raise InputError(f"k exceeds user count ({k} > {n})")
    log.validate(db)

    table = _CostTable(db, log)
    full = (1 << n) - 1
    dp = [_INF] * (full + 1)
    dp[0] = 0
    sizes = range(k, 2 * k)

    for s_mask in range(1, full + 1):
        bits = _bits(s_mask)
        if len(bits) < k:
            continue
        low, others = bits[0], bits[1:]
        best = _INF
        for size in sizes:
            if size > len(bits):
                break
            for combo in combinations(others, size - 1):
                g_mask = 1 << low
                for b in combo:
                    g_mask |= 1 << b
                rem = dp[s_mask ^ g_mask]
                if rem >= _INF:
                    continue
                v = rem + table.cost(g_mask)
                if v < best:
                    best = v
        dp[s_mask] = best
    assert dp[full] < _INF

    # Reconstruct the lexicographically smallest optimal partition: at each
    # step pick, among optimal groups containing the smallest remaining user,
    # the one with the smallest member tuple.
    groups: list[tuple[str, ...]] = []
    s_mask = full
    while s_mask:
        bits = _bits(s_mask)
        low, others = bits[0], bits[1:]
        chosen = None
        for size in sizes:
            if size > len(bits):
                break
            for combo in combinations(others, size - 1):
                g_mask = 1 << low
                for b in combo:
                    g_mask |= 1 << b
                rem = dp[s_mask ^ g_mask]
                if rem >= _INF:
                    continue
                if rem + table.cost(g_mask) == dp[s_mask]:
                    members = (low,) + combo
                    if chosen is None or members < chosen:
                        chosen = members
        assert chosen is not None
        groups.append(tuple(db.user_ids[i] for i in chosen))
        for b in chosen:
            s_mask ^= 1 << b
    return Policy(k, groups)
