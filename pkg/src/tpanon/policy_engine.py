"""Applies a policy to a request log, producing the published anonymized log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import group_region_array, policy_group_index
from .model import AnonymizedLog, InputError, Policy, RequestLog, TrajectoryDB


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = field(default=())


def policy_wellformed(policy: Policy, db: TrajectoryDB) -> ValidationResult:
    """Check that the groups exactly partition db's users with sizes >= k.

    Duplicates inside a policy cannot occur (Policy rejects them at
    construction), so the checks left are coverage, strays, and group sizes.
    """
    violations = []
    covered = set(policy._group_of)
    users = set(db.user_ids)
    for u in sorted(users - covered):
        violations.append(f"user {u!r} missing from policy")
    for u in sorted(covered - users):
        violations.append(f"user {u!r} not in trajectory db")
    for g in policy.groups:
        if len(g) < policy.k:
            violations.append(f"group {g} size {len(g)} < k={policy.k}")
    return ValidationResult(not violations, tuple(violations))


def pseudonym_map(user_ids: Sequence[str], seed: int) -> dict[str, str]:
    """Per-user pseudonyms: a seeded shuffle of a numeric range assigned in
    user_id order. Depends only on (seed, user set), never on positions or
    group structure."""
    users = sorted(user_ids)
    perm = np.random.default_rng(seed).permutation(len(users))
    width = max(1, len(str(len(users) - 1)))
    return {u: f"p{perm[i]:0{width}d}" for i, u in enumerate(users)}


def anonymize(db: TrajectoryDB, log: RequestLog, policy: Policy, seed: int) -> AnonymizedLog:
    """Publish the log under a fixed-partition policy.

    Each request becomes (req_id, pseudonym(sender), t, bbox of the sender's
    group at t, payload_tag); record order equals input request order.
    """
    check = policy_wellformed(policy, db)
    if not check.ok:
        raise InputError("ill-formed policy: " + "; ".join(check.violations))
    log.validate(db)
    pmap = pseudonym_map(db.user_ids, seed)
    gidx = policy_group_index(policy, db)
    regions = group_region_array(db, gidx, len(policy.groups))
    rows = log.user_rows(db)
    out_regions = (
        regions[gidx[rows], log.ts]
        if len(log)
        else np.zeros((0, 4), dtype=np.int64)
    )
    return AnonymizedLog(
        db.world,
        log.req_ids,
        [pmap[u] for u in log.user_ids],
        log.ts,
        out_regions,
        log.payload_tags,
    )


def anonymize_time_varying(
    db: TrajectoryDB, log: RequestLog, policies: Sequence[Policy], seed: int
) -> AnonymizedLog:
    """Publish the log under one policy per timestep (the trajectory-unaware
    baseline); request at timestep t is cloaked with policies[t]."""
    if len(policies) != db.world.horizon:
        raise InputError(f"need one policy per timestep ({db.world.horizon})")
    for p in policies:
        check = policy_wellformed(p, db)
        if not check.ok:
            raise InputError("ill-formed policy: " + "; ".join(check.violations))
    log.validate(db)
    pmap = pseudonym_map(db.user_ids, seed)
    rows = log.user_rows(db)
    out_regions = np.zeros((len(log), 4), dtype=np.int64)
    for t, policy in enumerate(policies):
        mask = log.ts == t
        if not mask.any():
            continue
        gidx = policy_group_index(policy, db)
        regions = group_region_array(db, gidx, len(policy.groups))
        out_regions[mask] = regions[gidx[rows[mask]], t]
    return AnonymizedLog(
        db.world,
        log.req_ids,
        [pmap[u] for u in log.user_ids],
        log.ts,
        out_regions,
        log.payload_tags,
    )
