"""Spatial primitives: Hilbert-curve ordering, bounding regions, and the
utility-loss cost of a grouping.

Cost convention: every published record costs the cell count (area) of its
cloaking region, so the objective of a policy is the sum over requests of the
area of the sender's group bounding box at the request's timestep.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .model import CloakRegion, GridPoint, InputError, Policy, RequestLog, TrajectoryDB

# Hilbert convention: the order-1 curve visits (0,0), (0,1), (1,1), (1,0).


def hilbert_index(p: GridPoint, order: int) -> int:
    """Position of grid cell p on the Hilbert curve of the given order."""
    side = 1 << order
    if not (0 <= p.x < side and 0 <= p.y < side):
        raise InputError(f"point {p} out of bounds for side {side}")
    x, y, d = p.x, p.y, 0
    s = side >> 1
    while s > 0:
        rx = 1 if x & s else 0
        ry = 1 if y & s else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        s >>= 1
    return d


def hilbert_indices(xs: np.ndarray, ys: np.ndarray, order: int) -> np.ndarray:
    """Vectorized hilbert_index over coordinate arrays."""
    x = np.asarray(xs, dtype=np.int64).copy()
    y = np.asarray(ys, dtype=np.int64).copy()
    side = 1 << order
    if len(x) and (x.min() < 0 or x.max() >= side or y.min() < 0 or y.max() >= side):
        raise InputError(f"point out of bounds for side {side}")
    d = np.zeros_like(x)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = (ry == 0) & (rx == 1)
        xf = np.where(flip, s - 1 - x, x)
        yf = np.where(flip, s - 1 - y, y)
        swap = ry == 0
        x = np.where(swap, yf, xf)
        y = np.where(swap, xf, yf)
        s >>= 1
    return d


def bounding_region(points: Iterable[GridPoint]) -> CloakRegion:
    """Minimal axis-aligned rectangle containing all points."""
    pts = list(points)
    if not pts:
        raise InputError("bounding_region of empty point set")
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return CloakRegion(min(xs), min(ys), max(xs), max(ys))


def region_area(r: CloakRegion) -> int:
    return (r.x_max - r.x_min + 1) * (r.y_max - r.y_min + 1)


def group_cost(group: Iterable[str], db: TrajectoryDB, t: int) -> int:
    """Area of the bounding box of the group members' positions at t."""
    rows = [db.row(u) for u in group]
    if not rows:
        raise InputError("empty group")
    db._check_t(t)
    pos = db.positions[rows, t]
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    return int((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1))


def policy_group_index(policy: Policy, db: TrajectoryDB) -> np.ndarray:
    """Group index for each db row; raises if the policy misses a user."""
    return np.fromiter(
        (policy.group_index_of(u) for u in db.user_ids), dtype=np.int64, count=db.n
    )


def group_region_array(db: TrajectoryDB, gidx: np.ndarray, n_groups: int) -> np.ndarray:
    """Bounding boxes of every group at every timestep.

    Returns an int64 array of shape (n_groups, horizon, 4) with columns
    (x_min, y_min, x_max, y_max). Every group must be nonempty.
    """
    counts = np.bincount(gidx, minlength=n_groups)
    if (counts == 0).any():
        raise InputError("empty group in partition")
    order = np.argsort(gidx, kind="stable")
    offsets = np.zeros(n_groups, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    pos = db.positions[order]  # (n, horizon, 2)
    lo = np.minimum.reduceat(pos, offsets, axis=0)
    hi = np.maximum.reduceat(pos, offsets, axis=0)
    out = np.empty((n_groups, db.world.horizon, 4), dtype=np.int64)
    out[:, :, 0] = lo[:, :, 0]
    out[:, :, 1] = lo[:, :, 1]
    out[:, :, 2] = hi[:, :, 0]
    out[:, :, 3] = hi[:, :, 1]
    return out


def group_area_array(regions: np.ndarray) -> np.ndarray:
    """Cell counts for a (..., 4) array of regions."""
    return (regions[..., 2] - regions[..., 0] + 1) * (regions[..., 3] - regions[..., 1] + 1)


def total_cost(policy: Policy, db: TrajectoryDB, log: RequestLog) -> int:
    """Canonical objective: sum over requests of the sender group's region area
    at the request's timestep."""
    if len(log) == 0:
        return 0
    gidx = policy_group_index(policy, db)
    areas = group_area_array(group_region_array(db, gidx, len(policy.groups)))
    rows = log.user_rows(db)
    return int(areas[gidx[rows], log.ts].sum())
