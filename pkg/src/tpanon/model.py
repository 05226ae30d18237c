"""Core data model: worlds, trajectories, request logs, policies, published logs.

All types are immutable after construction and safe to share across workers.
Bulk data (positions, timesteps, regions) is array-backed so that instances
with hundreds of thousands of users stay cheap; the object-level accessors
(`Trajectory`, `GridPoint`, ...) are materialized on demand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
import pandas as pd


class InputError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class World:
    """A square grid of `side` x `side` cells observed over `horizon` timesteps."""

    side: int
    horizon: int

    def __post_init__(self) -> None:
        if self.side < 1 or (self.side & (self.side - 1)) != 0:
            raise InputError(f"side must be a power of two, got {self.side}")
        if self.horizon < 1:
            raise InputError(f"horizon must be >= 1, got {self.horizon}")

    @property
    def order(self) -> int:
        """m such that side == 2**m."""
        return self.side.bit_length() - 1

    @property
    def area(self) -> int:
        return self.side * self.side


@dataclass(frozen=True)
class GridPoint:
    x: int
    y: int


@dataclass(frozen=True)
class CloakRegion:
    """Axis-aligned rectangle of grid cells, inclusive bounds."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InputError(f"degenerate region {self}")

    def contains(self, p: GridPoint) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


@dataclass(frozen=True)
class Trajectory:
    user_id: str
    positions: tuple[GridPoint, ...]


@dataclass(frozen=True)
class Request:
    req_id: str
    user_id: str
    t: int
    payload_tag: str


class TrajectoryDB:
    """Complete per-user position sequences; the attacker's public knowledge.

    Positions are stored as an int64 array of shape (n, horizon, 2) with rows
    aligned to `user_ids`, which is kept sorted so all derived orderings are
    deterministic.
    """

    __slots__ = ("world", "user_ids", "positions", "_row_of")

    def __init__(self, world: World, user_ids: Sequence[str], positions: np.ndarray):
        positions = np.asarray(positions, dtype=np.int64)
        user_ids = [str(u) for u in user_ids]
        if len(user_ids) < 1:
            raise InputError("need at least one trajectory")
        if len(set(user_ids)) != len(user_ids):
            raise InputError("duplicate user_id in trajectory set")
        if positions.shape != (len(user_ids), world.horizon, 2):
            raise InputError(
                f"positions shape {positions.shape} does not match "
                f"{len(user_ids)} users x horizon {world.horizon}"
            )
        if positions.min() < 0 or positions.max() >= world.side:
            raise InputError("position out of bounds")
        order = np.argsort(np.asarray(user_ids))
        self.world = world
        self.user_ids: tuple[str, ...] = tuple(user_ids[i] for i in order)
        self.positions = positions[order]
        self.positions.setflags(write=False)
        self._row_of = {u: i for i, u in enumerate(self.user_ids)}

    @classmethod
    def from_trajectories(cls, world: World, trajectories: Sequence[Trajectory]) -> "TrajectoryDB":
        ids = [tr.user_id for tr in trajectories]
        pos = np.array(
            [[(p.x, p.y) for p in tr.positions] for tr in trajectories], dtype=np.int64
        ).reshape(len(trajectories), world.horizon, 2)
        return cls(world, ids, pos)

    @property
    def n(self) -> int:
        return len(self.user_ids)

    def row(self, user_id: str) -> int:
        try:
            return self._row_of[user_id]
        except KeyError:
            raise InputError(f"unknown user_id {user_id!r}") from None

    def position(self, user_id: str, t: int) -> GridPoint:
        self._check_t(t)
        x, y = self.positions[self.row(user_id), t]
        return GridPoint(int(x), int(y))

    def trajectory(self, user_id: str) -> Trajectory:
        r = self.row(user_id)
        return Trajectory(
            user_id, tuple(GridPoint(int(x), int(y)) for x, y in self.positions[r])
        )

    def snapshot(self, t: int) -> list[tuple[str, GridPoint]]:
        """Every user's position at timestep t, in ascending user_id order."""
        self._check_t(t)
        col = self.positions[:, t]
        return [(u, GridPoint(int(col[i, 0]), int(col[i, 1]))) for i, u in enumerate(self.user_ids)]

    def _check_t(self, t: int) -> None:
        if not 0 <= t < self.world.horizon:
            raise InputError(f"timestep {t} out of range [0, {self.world.horizon})")


class RequestLog:
    """Sequence of timestamped service requests, each attributed to a sender."""

    __slots__ = ("req_ids", "user_ids", "ts", "payload_tags")

    def __init__(
        self,
        req_ids: Sequence[str],
        user_ids: Sequence[str],
        ts: Sequence[int],
        payload_tags: Sequence[str],
    ):
        self.req_ids = tuple(str(r) for r in req_ids)
        self.user_ids = tuple(str(u) for u in user_ids)
        self.ts = np.asarray(ts, dtype=np.int64)
        self.ts.setflags(write=False)
        self.payload_tags = tuple(str(p) for p in payload_tags)
        if not (len(self.req_ids) == len(self.user_ids) == len(self.ts) == len(self.payload_tags)):
            raise InputError("request columns have mismatched lengths")
        if len(set(self.req_ids)) != len(self.req_ids):
            raise InputError("duplicate req_id")

    @classmethod
    def from_requests(cls, requests: Sequence[Request]) -> "RequestLog":
        return cls(
            [r.req_id for r in requests],
            [r.user_id for r in requests],
            [r.t for r in requests],
            [r.payload_tag for r in requests],
        )

    def __len__(self) -> int:
        return len(self.req_ids)

    def __iter__(self) -> Iterator[Request]:
        for i in range(len(self.req_ids)):
            yield Request(self.req_ids[i], self.user_ids[i], int(self.ts[i]), self.payload_tags[i])

    def user_rows(self, db: TrajectoryDB) -> np.ndarray:
        """Row index into db for each request's sender."""
        return np.fromiter((db.row(u) for u in self.user_ids), dtype=np.int64, count=len(self))

    def validate(self, db: TrajectoryDB) -> None:
        for u in set(self.user_ids):
            if u not in db._row_of:
                raise InputError(f"unknown sender {u!r}")
        if len(self) and (self.ts.min() < 0 or self.ts.max() >= db.world.horizon):
            raise InputError("request timestep out of range")


class Policy:
    """A public anonymization policy: a partition of all users into groups of
    size >= k, generalized by the bounding-box rule.

    Groups are canonicalized (members sorted, groups sorted by smallest member)
    so two policies with the same grouping compare equal.
    """

    __slots__ = ("k", "groups", "_group_of")

    def __init__(self, k: int, groups: Sequence[Sequence[str]]):
        if k < 2:
            raise InputError(f"k must be >= 2, got {k}")
        self.k = int(k)
        self.groups: tuple[tuple[str, ...], ...] = tuple(
            sorted((tuple(sorted(str(u) for u in g)) for g in groups), key=lambda g: g[0])
        )
        self._group_of: dict[str, int] = {}
        for gi, g in enumerate(self.groups):
            for u in g:
                if u in self._group_of:
                    raise InputError(f"user {u!r} duplicated across groups")
                self._group_of[u] = gi

    def group_index_of(self, user_id: str) -> int:
        try:
            return self._group_of[user_id]
        except KeyError:
            raise InputError(f"policy does not cover user {user_id!r}") from None

    def group_of(self, user_id: str) -> tuple[str, ...]:
        return self.groups[self.group_index_of(user_id)]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Policy) and self.k == other.k and self.groups == other.groups
        )

    def __repr__(self) -> str:
        return f"Policy(k={self.k}, groups={len(self.groups)})"

    def to_dict(self) -> dict:
        return {"k": self.k, "groups": [list(g) for g in self.groups], "generalization": "bbox"}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Policy":
        if d.get("generalization", "bbox") != "bbox":
            raise InputError(f"unsupported generalization {d.get('generalization')!r}")
        return cls(int(d["k"]), d["groups"])


@dataclass(frozen=True)
class AnonRecord:
    req_id: str
    pseudonym: str
    t: int
    region: CloakRegion
    payload_tag: str


class AnonymizedLog:
    """The published artifact: pseudonymous requests with cloaking regions."""

    __slots__ = ("world", "req_ids", "pseudonyms", "ts", "regions", "payload_tags")

    def __init__(
        self,
        world: World,
        req_ids: Sequence[str],
        pseudonyms: Sequence[str],
        ts: Sequence[int],
        regions: np.ndarray,
        payload_tags: Sequence[str],
    ):
        self.world = world
        self.req_ids = tuple(str(r) for r in req_ids)
        self.pseudonyms = tuple(str(p) for p in pseudonyms)
        self.ts = np.asarray(ts, dtype=np.int64)
        self.ts.setflags(write=False)
        self.regions = np.asarray(regions, dtype=np.int64).reshape(len(self.req_ids), 4)
        self.regions.setflags(write=False)
        self.payload_tags = tuple(str(p) for p in payload_tags)

    def __len__(self) -> int:
        return len(self.req_ids)

    def __iter__(self) -> Iterator[AnonRecord]:
        for i in range(len(self.req_ids)):
            x0, y0, x1, y1 = (int(v) for v in self.regions[i])
            yield AnonRecord(
                self.req_ids[i],
                self.pseudonyms[i],
                int(self.ts[i]),
                CloakRegion(x0, y0, x1, y1),
                self.payload_tags[i],
            )


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = ["user_id", "t", "x", "y"]
REQUEST_COLUMNS = ["req_id", "user_id", "t", "payload_tag"]
ANON_COLUMNS = ["req_id", "pseudonym", "t", "x_min", "y_min", "x_max", "y_max", "payload_tag"]


def load_trajectories(source: str | Path, side: int, horizon: int) -> TrajectoryDB:
    """Load the trajectory CSV (`user_id,t,x,y`) into a validated TrajectoryDB."""
    world = World(side, horizon)
    df = pd.read_csv(source, dtype={"user_id": str})
    if list(df.columns) != TRAJECTORY_COLUMNS:
        raise InputError(f"malformed trajectory file: expected columns {TRAJECTORY_COLUMNS}")
    for col in ("t", "x", "y"):
        if not np.issubdtype(df[col].dtype, np.integer):
            raise InputError(f"malformed trajectory file: non-integer column {col!r}")
    if ((df["t"] < 0) | (df["t"] >= horizon)).any():
        raise InputError("timestep out of range")
    if ((df[["x", "y"]] < 0) | (df[["x", "y"]] >= side)).any().any():
        raise InputError("coordinate out of bounds")
    if df.duplicated(subset=["user_id", "t"]).any():
        dup = df[df.duplicated(subset=["user_id", "t"])].iloc[0]
        raise InputError(f"duplicate (user, t) row: ({dup['user_id']}, {dup['t']})")
    counts = df.groupby("user_id").size()
    bad = counts[counts != horizon]
    if len(bad):
        raise InputError(f"incomplete trajectory for user {bad.index[0]!r}")

    df = df.sort_values(["user_id", "t"], kind="stable")
    users = df["user_id"].unique()
    pos = df[["x", "y"]].to_numpy(dtype=np.int64).reshape(len(users), horizon, 2)
    return TrajectoryDB(world, users, pos)


def save_trajectories(db: TrajectoryDB, dest: str | Path) -> None:
    n, horizon = db.n, db.world.horizon
    df = pd.DataFrame(
        {
            "user_id": np.repeat(np.asarray(db.user_ids, dtype=object), horizon),
            "t": np.tile(np.arange(horizon), n),
            "x": db.positions[:, :, 0].reshape(-1),
            "y": db.positions[:, :, 1].reshape(-1),
        }
    )
    df.to_csv(dest, index=False)


def load_requests(source: str | Path, db: TrajectoryDB) -> RequestLog:
    """Load the request CSV (`req_id,user_id,t,payload_tag`) against a loaded db."""
    df = pd.read_csv(source, dtype={"req_id": str, "user_id": str, "payload_tag": str})
    if list(df.columns) != REQUEST_COLUMNS:
        raise InputError(f"malformed request file: expected columns {REQUEST_COLUMNS}")
    if len(df) and not np.issubdtype(df["t"].dtype, np.integer):
        raise InputError("malformed request file: non-integer timestep")
    log = RequestLog(
        df["req_id"].tolist(),
        df["user_id"].tolist(),
        df["t"].to_numpy(dtype=np.int64) if len(df) else [],
        df["payload_tag"].fillna("").tolist(),
    )
    log.validate(db)
    return log


def save_requests(log: RequestLog, dest: str | Path) -> None:
    pd.DataFrame(
        {
            "req_id": log.req_ids,
            "user_id": log.user_ids,
            "t": log.ts,
            "payload_tag": log.payload_tags,
        }
    ).to_csv(dest, index=False)


def save_anonymized(anon: AnonymizedLog, dest: str | Path) -> None:
    pd.DataFrame(
        {
            "req_id": anon.req_ids,
            "pseudonym": anon.pseudonyms,
            "t": anon.ts,
            "x_min": anon.regions[:, 0],
            "y_min": anon.regions[:, 1],
            "x_max": anon.regions[:, 2],
            "y_max": anon.regions[:, 3],
            "payload_tag": anon.payload_tags,
        }
    ).to_csv(dest, index=False)


def load_anonymized(source: str | Path, world: World) -> AnonymizedLog:
    df = pd.read_csv(source, dtype={"req_id": str, "pseudonym": str, "payload_tag": str})
    if list(df.columns) != ANON_COLUMNS:
        raise InputError(f"malformed anonymized file: expected columns {ANON_COLUMNS}")
    regions = (
        df[["x_min", "y_min", "x_max", "y_max"]].to_numpy(dtype=np.int64)
        if len(df)
        else np.zeros((0, 4), dtype=np.int64)
    )
    return AnonymizedLog(
        world,
        df["req_id"].tolist(),
        df["pseudonym"].tolist(),
        df["t"].to_numpy(dtype=np.int64) if len(df) else [],
        regions,
        df["payload_tag"].fillna("").tolist(),
    )


def save_policy(policy: Policy, dest: str | Path) -> None:
    Path(dest).write_text(json.dumps(policy.to_dict(), indent=1) + "\n")


def load_policy(source: str | Path):
    """Load a policy JSON file.

    Returns a Policy for the fixed-partition schema ({"k", "groups", ...}) or a
    list of per-timestep Policy objects for the time-varying schema
    ({"k", "policies": [groups_t0, groups_t1, ...], ...}).
    """
    d = json.loads(Path(source).read_text())
    if "policies" in d:
        return [Policy(int(d["k"]), groups) for groups in d["policies"]]
    return Policy.from_dict(d)


def save_time_varying_policy(policies: Sequence[Policy], dest: str | Path) -> None:
    if not policies:
        raise InputError("need at least one per-timestep policy")
    d = {
        "k": policies[0].k,
        "policies": [[list(g) for g in p.groups] for p in policies],
        "generalization": "bbox",
    }
    Path(dest).write_text(json.dumps(d, indent=1) + "\n")


def save_manifest(world: World, dest: str | Path, **extra) -> None:
    d = {"side": world.side, "horizon": world.horizon}
    d.update(extra)
    Path(dest).write_text(json.dumps(d, indent=1) + "\n")


def load_manifest(source: str | Path) -> dict:
    d = json.loads(Path(source).read_text())
    if "side" not in d or "horizon" not in d:
        raise InputError("manifest must declare side and horizon")
    return d
