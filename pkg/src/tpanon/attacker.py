"""Simulated TP-aware attacker.

The attacker knows every user's full trajectory (the public TrajectoryDB) and
the anonymization policy, and sees only the published log. A user v is a
candidate for a pseudonym if v's counterfactual published output under the
known policy is indistinguishable from every observed record of that
pseudonym; the anonymity set is the intersection of the per-record candidate
sets. If two distinct groups publish identical regions, their union counts
(which only helps privacy).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .geometry import group_region_array, policy_group_index
from .model import AnonymizedLog, InputError, Policy, TrajectoryDB


@dataclass(frozen=True)
class AuditReport:
    k: int
    per_pseudonym: Mapping[str, frozenset[str]]

    @property
    def min_anonymity(self) -> int | None:
        if not self.per_pseudonym:
            return None
        return min(len(s) for s in self.per_pseudonym.values())

    @property
    def violations(self) -> list[str]:
        return sorted(p for p, s in self.per_pseudonym.items() if len(s) < self.k)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "min_anonymity": self.min_anonymity,
            "violations": self.violations,
            "per_pseudonym_sizes": {p: len(s) for p, s in sorted(self.per_pseudonym.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def _group_member_rows(gidx: np.ndarray, n_groups: int) -> list[frozenset[int]]:
    members: list[list[int]] = [[] for _ in range(n_groups)]
    for row, g in enumerate(gidx.tolist()):
        members[g].append(row)
    return [frozenset(m) for m in members]


def _region_lookup_fixed(
    db: TrajectoryDB, policy: Policy, timesteps: Sequence[int]
) -> dict[int, dict[tuple, frozenset[int]]]:
    """Per timestep: published region -> union of member rows of all groups
    publishing that region."""
    gidx = policy_group_index(policy, db)
    regions = group_region_array(db, gidx, len(policy.groups))
    members = _group_member_rows(gidx, len(policy.groups))
    lookup: dict[int, dict[tuple, frozenset[int]]] = {}
    for t in timesteps:
        by_region: dict[tuple, list[int]] = defaultdict(list)
        for g, reg in enumerate(regions[:, t].tolist()):
            by_region[tuple(reg)].append(g)
        lookup[t] = {
            reg: frozenset().union(*(members[g] for g in gs)) for reg, gs in by_region.items()
        }
    return lookup


def _region_lookup_per_step(
    db: TrajectoryDB, policies: Sequence[Policy], timesteps: Sequence[int]
) -> dict[int, dict[tuple, frozenset[int]]]:
    lookup: dict[int, dict[tuple, frozenset[int]]] = {}
    for t in timesteps:
        policy = policies[t]
        gidx = policy_group_index(policy, db)
        regions = group_region_array(db, gidx, len(policy.groups))
        members = _group_member_rows(gidx, len(policy.groups))
        by_region: dict[tuple, list[int]] = defaultdict(list)
        for g, reg in enumerate(regions[:, t].tolist()):
            by_region[tuple(reg)].append(g)
        lookup[t] = {
            reg: frozenset().union(*(members[g] for g in gs)) for reg, gs in by_region.items()
        }
    return lookup


def _records_by_pseudonym(anon: AnonymizedLog, db: TrajectoryDB) -> dict[str, list[int]]:
    if len(anon) and (anon.ts.min() < 0 or anon.ts.max() >= db.world.horizon):
        raise InputError("anonymized record timestep outside horizon")
    recs: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(anon.pseudonyms):
        recs[p].append(i)
    return recs


def _intersect_candidates(
    anon: AnonymizedLog,
    db: TrajectoryDB,
    recs: Mapping[str, list[int]],
    lookup: Mapping[int, Mapping[tuple, frozenset[int]]],
) -> dict[str, frozenset[str]]:
    ts = anon.ts.tolist()
    regs = [tuple(r) for r in anon.regions.tolist()]
    out: dict[str, frozenset[str]] = {}
    users = db.user_ids
    for pseud, idxs in recs.items():
        cand: frozenset[int] | None = None
        for i in idxs:
            s = lookup[ts[i]].get(regs[i], frozenset())
            cand = s if cand is None else cand & s
            if not cand:
                break
        assert cand is not None
        out[pseud] = frozenset(users[r] for r in cand)
    return out


def candidate_set(
    anon: AnonymizedLog, pseudonym: str, db: TrajectoryDB, policy: Policy
) -> frozenset[str]:
    """Anonymity set of one pseudonym under a fixed-partition policy."""
    recs = _records_by_pseudonym(anon, db)
    if pseudonym not in recs:
        raise InputError(f"unknown pseudonym {pseudonym!r}")
    idxs = recs[pseudonym]
    needed = sorted({int(anon.ts[i]) for i in idxs})
    lookup = _region_lookup_fixed(db, policy, needed)
    return _intersect_candidates(anon, db, {pseudonym: idxs}, lookup)[pseudonym]


def audit(anon: AnonymizedLog, db: TrajectoryDB, policy: Policy, k: int) -> AuditReport:
    """Compute every pseudonym's anonymity set; passes iff min >= k."""
    recs = _records_by_pseudonym(anon, db)
    needed = sorted({int(t) for t in anon.ts}) if len(anon) else []
    lookup = _region_lookup_fixed(db, policy, needed)
    return AuditReport(k, _intersect_candidates(anon, db, recs, lookup))


def audit_time_varying(
    anon: AnonymizedLog, db: TrajectoryDB, policies: Sequence[Policy], k: int
) -> AuditReport:
    """Like audit, but the inversion at timestep t uses policies[t].

    This is the attack surface of trajectory-unaware per-step anonymization:
    intersecting candidate sets across timesteps can shrink anonymity below k.
    """
    if len(policies) != db.world.horizon:
        raise InputError(f"need one policy per timestep ({db.world.horizon})")
    recs = _records_by_pseudonym(anon, db)
    needed = sorted({int(t) for t in anon.ts}) if len(anon) else []
    lookup = _region_lookup_per_step(db, policies, needed)
    return AuditReport(k, _intersect_candidates(anon, db, recs, lookup))
