"""PTIME approximation solver.

Single building block: an exact dynamic program over partitions into
consecutive runs of a fixed user ordering (run lengths k..2k-1). The
multi-timestep solver evaluates that DP under the full objective for a small
set of candidate orderings and keeps the cheapest result. Candidates are the
Hilbert order of each timestep and the lexicographic order of the
per-timestep Hilbert index tuples, plus the per-timestep Hilbert orders under
the grid symmetries (180-degree rotation and the two diagonal reflections),
which cheaply smooth over curve discontinuities.

Consecutive runs are not always enough even on a single row: with uniform
weights the optimum can pair the two extremes of a cluster-plus-outliers
pattern (x = [0, 5, 6, 6, 13], k=2: {0,13} + {5,6,6} costs 34; the best
consecutive split costs 36). An uncrossing exchange shows that with uniform
weights some optimum is *laminar* -- group index-intervals are nested or
disjoint, with outer groups taking a prefix and a suffix of their block --
so a second, nested-interval DP covers that regime. It costs O(n^2 k^2)
evaluations, so it only runs on small instances with uniform weights, where
it is both affordable and provably exact for a single timestep.

Everything is deterministic: argsorts are stable with user_id tie-breaking,
DP ties prefer the shortest last run, candidate ties prefer the earliest
ordering (timesteps first, then the concatenated order, then the symmetry
variants).
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .geometry import hilbert_indices
from .model import InputError, Policy, RequestLog, TrajectoryDB

_INF = 1 << 62

# (name, coordinate transform) pairs; identity first so the committed
# candidate list (per-timestep Hilbert, then concatenated) stays the primary
# tie-break order.
_SYMMETRIES = (
    ("rot180", lambda x, y, side: (side - 1 - x, side - 1 - y)),
    ("transpose", lambda x, y, side: (y, x)),
    ("antitranspose", lambda x, y, side: (side - 1 - y, side - 1 - x)),
)


def consecutive_dp(
    order: Sequence[str],
    k: int,
    group_cost_fn: Callable[[Sequence[str]], int],
) -> list[tuple[str, ...]]:
    """Minimum-cost partition of `order` into consecutive runs of length
    k..2k-1; O(n*k) evaluations of group_cost_fn."""
    n = len(order)
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if n < k:
        raise InputError(f"k exceeds user count ({k} > {n})")
    dp = [_INF] * (n + 1)
    dp[0] = 0
    choice = [0] * (n + 1)
    for i in range(k, n + 1):
        best, best_m = _INF, 0
        for m in range(k, 2 * k):
            j = i - m
            if j < 0:
                break
            if dp[j] >= _INF:
                continue
            v = dp[j] + group_cost_fn(order[j:i])
            if v < best:
                best, best_m = v, m
        dp[i] = best
        choice[i] = best_m
    assert dp[n] < _INF
    return _cut(order, choice, n)


def _cut(order: Sequence[str], choice: Sequence[int], n: int) -> list[tuple[str, ...]]:
    runs: list[tuple[str, ...]] = []
    i = n
    while i > 0:
        m = choice[i]
        runs.append(tuple(order[i - m : i]))
        i -= m
    runs.reverse()
    return runs


def _sliding_reduce(a: np.ndarray, m: int, maximum: bool) -> np.ndarray:
    """Windowed min/max over the last axis, window length m; O(size) via
    block prefix/suffix scans."""
    rows, n = a.shape
    nw = n - m + 1
    if m == 1:
        return a.copy()
    op = np.maximum if maximum else np.minimum
    fill = np.iinfo(np.int64).min if maximum else np.iinfo(np.int64).max
    nblocks = -(-n // m)
    padded = np.full((rows, nblocks * m), fill, dtype=np.int64)
    padded[:, :n] = a
    blocks = padded.reshape(rows, nblocks, m)
    prefix = op.accumulate(blocks, axis=2).reshape(rows, -1)
    suffix = op.accumulate(blocks[:, :, ::-1], axis=2)[:, :, ::-1].reshape(rows, -1)
    return op(suffix[:, :nw], prefix[:, m - 1 : m - 1 + nw])


def _window_costs(
    xs: np.ndarray, ys: np.ndarray, ws: np.ndarray, k: int
) -> Iterator[tuple[int, list[int]]]:
    """Total objective of every consecutive run of each length m in k..2k-1.

    Yields (m, costs) where costs[j] is the cost of the run [j, j+m). The
    length-k windows are computed by block scans; longer windows extend them
    one element at a time, so the whole sweep is O(n*k) per timestep.
    """
    horizon, n = xs.shape
    cum = np.zeros((horizon, n + 1), dtype=np.int64)
    np.cumsum(ws, axis=1, out=cum[:, 1:])
    m = k
    xmin = _sliding_reduce(xs, m, False)
    xmax = _sliding_reduce(xs, m, True)
    ymin = _sliding_reduce(ys, m, False)
    ymax = _sliding_reduce(ys, m, True)
    while True:
        area = (xmax - xmin + 1) * (ymax - ymin + 1)
        cnt = cum[:, m:] - cum[:, : n - m + 1]
        yield m, (area * cnt).sum(axis=0).tolist()
        m += 1
        if m > min(2 * k - 1, n):
            return
        xmin = np.minimum(xmin[:, : n - m + 1], xs[:, m - 1 :])
        xmax = np.maximum(xmax[:, : n - m + 1], xs[:, m - 1 :])
        ymin = np.minimum(ymin[:, : n - m + 1], ys[:, m - 1 :])
        ymax = np.maximum(ymax[:, : n - m + 1], ys[:, m - 1 :])


def _dp_arrays(
    xs: np.ndarray, ys: np.ndarray, ws: np.ndarray, k: int
) -> tuple[int, list[int]]:
    """Vectorized consecutive DP. xs/ys/ws have shape (horizon, n) in candidate
    order; ws holds per-user per-timestep request weights. Returns the optimal
    cost and the per-position run-length choices."""
    n = xs.shape[1]
    window_costs = dict(_window_costs(xs, ys, ws, k))
    dp = [_INF] * (n + 1)
    dp[0] = 0
    choice = [0] * (n + 1)
    lengths = sorted(window_costs)
    for i in range(k, n + 1):
        best, best_m = _INF, 0
        for m in lengths:
            j = i - m
            if j < 0:
                break
            prev = dp[j]
            if prev >= _INF:
                continue
            v = prev + window_costs[m][j]
            if v < best:
                best, best_m = v, m
        dp[i] = best
        choice[i] = best_m
    assert dp[n] < _INF
    return dp[n], choice


# The laminar DP is quadratic in n; beyond this many users only the
# consecutive candidates run.
DEFAULT_LAMINAR_CAP = 64


def _window_aggregates(arr: np.ndarray, maxlen: int, maximum: bool) -> list[np.ndarray]:
    """out[p][:, i] = min/max of arr[:, i:i+p] for p in 1..maxlen."""
    op = np.maximum if maximum else np.minimum
    out: list[np.ndarray] = [None, arr]  # type: ignore[list-item]
    cur = arr
    for p in range(2, maxlen + 1):
        cur = op(cur[:, : arr.shape[1] - p + 1], arr[:, p - 1 :])
        out.append(cur)
    return out


def _laminar_partition(
    xs: np.ndarray, ys: np.ndarray, ws: np.ndarray, k: int
) -> tuple[int, list[tuple[int, ...]]]:
    """Minimum-cost laminar partition of the given ordering.

    Groups occupy index-intervals that are nested or disjoint; an outer group
    takes a prefix and a suffix of its interval and the remainder nests
    inside. Consecutive runs are the depth-one special case, so this never
    does worse than consecutive_dp on the same ordering. For a single
    timestep with uniform weights it is exactly optimal (uncrossing).
    Returns (cost, groups as index tuples into the ordering).
    """
    horizon, n = xs.shape
    maxlen = min(2 * k - 1, n)
    wxmin = _window_aggregates(xs, maxlen, False)
    wxmax = _window_aggregates(xs, maxlen, True)
    wymin = _window_aggregates(ys, maxlen, False)
    wymax = _window_aggregates(ys, maxlen, True)
    cum = np.zeros((horizon, n + 1), dtype=np.int64)
    np.cumsum(ws, axis=1, out=cum[:, 1:])

    def outer_cost(i: int, p: int, j: int, s: int) -> int:
        a = j - s + 1
        xmin = np.minimum(wxmin[p][:, i], wxmin[s][:, a])
        xmax = np.maximum(wxmax[p][:, i], wxmax[s][:, a])
        ymin = np.minimum(wymin[p][:, i], wymin[s][:, a])
        ymax = np.maximum(wymax[p][:, i], wymax[s][:, a])
        wt = (cum[:, i + p] - cum[:, i]) + (cum[:, j + 1] - cum[:, a])
        return int(((xmax - xmin + 1) * (ymax - ymin + 1) * wt).sum())

    fmemo: dict[tuple[int, int], int] = {}
    gmemo: dict[tuple[int, int], int] = {}
    fpick: dict[tuple[int, int], int] = {}
    gpick: dict[tuple[int, int], tuple[int, int]] = {}

    def f(i: int, j: int) -> int:
        # partition positions i..j into disjoint laminar blocks
        if i > j:
            return 0
        v = fmemo.get((i, j))
        if v is not None:
            return v
        best, pick = _INF, -1
        if j - i + 1 >= k:
            for b in range(i + k - 1, j + 1):
                tail = f(b + 1, j)
                if tail >= _INF:
                    continue
                head = g(i, b)
                if head < _INF and head + tail < best:
                    best, pick = head + tail, b
        fmemo[(i, j)] = best
        fpick[(i, j)] = pick
        return best

    def g(i: int, j: int) -> int:
        # one outer group contains i and j (prefix p + suffix s), rest nested
        v = gmemo.get((i, j))
        if v is not None:
            return v
        blk = j - i + 1
        best, pick = _INF, (-1, -1)
        for size in range(k, min(2 * k - 1, blk) + 1):
            for p in range(1, size):
                s = size - p
                inner = (j - s) - (i + p) + 1
                if inner and inner < k:
                    continue
                rest = f(i + p, j - s)
                if rest >= _INF:
                    continue
                c = outer_cost(i, p, j, s) + rest
                if c < best:
                    best, pick = c, (p, s)
        gmemo[(i, j)] = best
        gpick[(i, j)] = pick
        return best

    total = f(0, n - 1)
    assert total < _INF
    groups: list[tuple[int, ...]] = []

    def rec_f(i: int, j: int) -> None:
        if i > j:
            return
        b = fpick[(i, j)]
        rec_g(i, b)
        rec_f(b + 1, j)

    def rec_g(i: int, j: int) -> None:
        p, s = gpick[(i, j)]
        groups.append(tuple(range(i, i + p)) + tuple(range(j - s + 1, j + 1)))
        rec_f(i + p, j - s)

    rec_f(0, n - 1)
    return total, groups


def _hilbert_keys(db: TrajectoryDB) -> list[np.ndarray]:
    order = db.world.order
    return [
        hilbert_indices(db.positions[:, t, 0], db.positions[:, t, 1], order)
        for t in range(db.world.horizon)
    ]


def candidate_orders(db: TrajectoryDB) -> list[tuple[str, np.ndarray]]:
    """Candidate user orderings, in tie-break priority order.

    All argsorts are stable, so equal Hilbert keys fall back to user_id order.
    """
    keys = _hilbert_keys(db)
    cands = [(f"hilbert-t{t}", np.argsort(key, kind="stable")) for t, key in enumerate(keys)]
    cands.append(("hilbert-lex", np.lexsort(tuple(reversed(keys)))))
    side, order = db.world.side, db.world.order
    for t in range(db.world.horizon):
        x = db.positions[:, t, 0]
        y = db.positions[:, t, 1]
        for name, transform in _SYMMETRIES:
            key = hilbert_indices(*transform(x, y, side), order)
            cands.append((f"hilbert-t{t}-{name}", np.argsort(key, kind="stable")))
    return cands


def _request_weights(db: TrajectoryDB, log: RequestLog, cover_weight: int) -> np.ndarray:
    w = np.zeros((db.n, db.world.horizon), dtype=np.int64)
    if len(log):
        np.add.at(w, (log.user_rows(db), log.ts), 1)
    if cover_weight:
        w[w.sum(axis=1) == 0] = cover_weight
    return w


def solve_single_step(db: TrajectoryDB, t: int, k: int) -> list[tuple[str, ...]]:
    """Optimal Hilbert-consecutive partition for a single timestep, weighting
    every user as one synthetic request at t (the trajectory-unaware
    baseline)."""
    db._check_t(t)
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if db.n < k:
        raise InputError(f"k exceeds user count ({k} > {db.n})")
    key = hilbert_indices(db.positions[:, t, 0], db.positions[:, t, 1], db.world.order)
    perm = np.argsort(key, kind="stable")
    xs = np.ascontiguousarray(db.positions[perm, t, 0][None, :])
    ys = np.ascontiguousarray(db.positions[perm, t, 1][None, :])
    ws = np.ones((1, db.n), dtype=np.int64)
    _, choice = _dp_arrays(xs, ys, ws, k)
    ordered = [db.user_ids[i] for i in perm]
    return _cut(ordered, choice, db.n)


def solve_per_step(db: TrajectoryDB, k: int) -> list[Policy]:
    """One single-step policy per timestep; the scheme the intersection attack
    defeats."""
    return [Policy(k, solve_single_step(db, t, k)) for t in range(db.world.horizon)]


def solve_approx(
    db: TrajectoryDB,
    log: RequestLog,
    k: int,
    cover_weight: int = 0,
    laminar_cap: int = DEFAULT_LAMINAR_CAP,
) -> Policy:
    """Best candidate policy evaluated against the full multi-timestep
    objective on the actual request log.

    Candidates are the consecutive-DP solutions of every candidate ordering,
    plus -- when n <= laminar_cap and every user carries the same weight
    vector, the regime where the nested-interval DP is affordable and its
    single-timestep optimality proof applies -- the laminar-DP solutions of
    the same orderings. Consecutive candidates keep priority on cost ties.
    """
    n = db.n
    if k < 2:
        raise InputError(f"k must be >= 2, got {k}")
    if n < k:
        raise InputError(f"k exceeds user count ({k} > {n})")
    log.validate(db)
    w = _request_weights(db, log, cover_weight)

    best_cost = None
    best_groups: list[tuple[str, ...]] | None = None
    run_laminar = n <= laminar_cap and bool((w == w[0]).all())
    for _, perm in candidate_orders(db):
        xs = np.ascontiguousarray(db.positions[perm, :, 0].T)
        ys = np.ascontiguousarray(db.positions[perm, :, 1].T)
        ws = np.ascontiguousarray(w[perm].T)
        cost, choice = _dp_arrays(xs, ys, ws, k)
        if best_cost is None or cost < best_cost:
            ordered = [db.user_ids[i] for i in perm]
            best_cost, best_groups = cost, _cut(ordered, choice, n)
        if run_laminar:
            lcost, idx_groups = _laminar_partition(xs, ys, ws, k)
            if lcost < best_cost:
                best_cost = lcost
                best_groups = [
                    tuple(db.user_ids[perm[m]] for m in grp) for grp in idx_groups
                ]
    assert best_groups is not None
    return Policy(k, best_groups)
