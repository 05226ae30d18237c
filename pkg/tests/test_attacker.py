import numpy as np
import pytest

import tpanon as tp

from helpers import build_db, build_log, one_request_each, random_valid_policy


def oracle_candidates(anon, db, policy_at_t, pseudonym):
    """Counterfactual re-anonymization oracle: v is a candidate iff publishing
    v's group region at every observed record's timestep reproduces exactly
    the observed records. Plain-python, independent of the attacker module."""
    idxs = [i for i, p in enumerate(anon.pseudonyms) if p == pseudonym]
    cands = set()
    for v in db.user_ids:
        ok = True
        for i in idxs:
            t = int(anon.ts[i])
            g = policy_at_t(t).group_of(v)
            region = tp.bounding_region([db.position(u, t) for u in g])
            if [region.x_min, region.y_min, region.x_max, region.y_max] != anon.regions[i].tolist():
                ok = False
                break
        if ok:
            cands.add(v)
    return frozenset(cands)


def test_line4_audit():
    db, log = tp.craft("line-4")
    policy = tp.Policy(2, [("a", "b"), ("c", "d")])
    anon = tp.anonymize(db, log, policy, seed=0)
    report = tp.audit(anon, db, policy, 2)
    assert report.passed and report.min_anonymity == 2
    assert all(len(s) == 2 for s in report.per_pseudonym.values())
    d = report.to_dict()
    assert d["k"] == 2 and d["min_anonymity"] == 2 and d["violations"] == []
    assert set(d["per_pseudonym_sizes"].values()) == {2}


def test_candidate_set_contains_group():
    # every member of the sender's group is output-indistinguishable
    rng = np.random.default_rng(4)
    for trial in range(15):
        world = tp.World(16, int(rng.integers(1, 4)))
        db, log = tp.generate(int(rng.integers(1 << 30)), 9, world, request_rate=2.0)
        if len(log) == 0:
            continue
        policy = random_valid_policy(db, 2, rng)
        anon = tp.anonymize(db, log, policy, seed=1)
        pmap = dict(zip(log.user_ids, anon.pseudonyms))
        for user, pseud in pmap.items():
            cand = tp.candidate_set(anon, pseud, db, policy)
            assert set(policy.group_of(user)) <= set(cand)


def test_candidate_set_matches_bruteforce_oracle():
    rng = np.random.default_rng(8)
    for trial in range(25):
        world = tp.World(16, int(rng.integers(1, 4)))
        n = int(rng.integers(4, 9))
        db, log = tp.generate(int(rng.integers(1 << 30)), n, world, request_rate=2.0)
        if len(log) == 0:
            continue
        policy = random_valid_policy(db, 2, rng)
        anon = tp.anonymize(db, log, policy, seed=2)
        report = tp.audit(anon, db, policy, 2)
        for pseud, cand in report.per_pseudonym.items():
            assert cand == oracle_candidates(anon, db, lambda t: policy, pseud)


def test_intersection_attack_crafted():
    db, log = tp.craft("intersection-attack-4")
    per_step = tp.solve_per_step(db, 2)
    # the two per-timestep optima regroup users differently
    assert per_step[0].groups == (("a", "b"), ("c", "d"))
    assert per_step[1].groups == (("a", "c"), ("b", "d"))
    anon = tp.anonymize_time_varying(db, log, per_step, seed=0)
    report = tp.audit_time_varying(anon, db, per_step, 2)
    assert report.min_anonymity == 1
    assert not report.passed
    pmap = dict(zip(log.user_ids, anon.pseudonyms))
    # intersecting {a,b} (t0) with {a,c} (t1) pins a exactly
    assert report.per_pseudonym[pmap["a"]] == frozenset({"a"})
    # the brute-force oracle agrees on every pseudonym
    for pseud, cand in report.per_pseudonym.items():
        assert cand == oracle_candidates(anon, db, lambda t: per_step[t], pseud)

    # the trajectory-aware fixed policy resists the same attacker
    fixed = tp.solve_approx(db, log, 2)
    anon_fixed = tp.anonymize(db, log, fixed, seed=0)
    assert tp.audit(anon_fixed, db, fixed, 2).passed


def test_identical_regions_merge_candidates():
    # two groups with the same bbox are indistinguishable: candidates union
    world = tp.World(4, 1)
    db = build_db(world, {"a": [(0, 0)], "b": [(1, 1)], "c": [(0, 1)], "d": [(1, 0)]})
    policy = tp.Policy(2, [("a", "b"), ("c", "d")])
    log = one_request_each(db)
    anon = tp.anonymize(db, log, policy, seed=0)
    report = tp.audit(anon, db, policy, 2)
    assert all(s == frozenset({"a", "b", "c", "d"}) for s in report.per_pseudonym.values())
    assert report.min_anonymity == 4


def test_more_records_only_shrink_candidates():
    rng = np.random.default_rng(13)
    for trial in range(10):
        world = tp.World(16, 3)
        db, log = tp.generate(int(rng.integers(1 << 30)), 8, world, request_rate=3.0)
        if len(log) < 2:
            continue
        policy = random_valid_policy(db, 2, rng)
        anon = tp.anonymize(db, log, policy, seed=0)
        full = tp.audit(anon, db, policy, 2).per_pseudonym
        half = tp.AnonymizedLog(
            world,
            anon.req_ids[: len(anon) // 2],
            anon.pseudonyms[: len(anon) // 2],
            anon.ts[: len(anon) // 2],
            anon.regions[: len(anon) // 2],
            anon.payload_tags[: len(anon) // 2],
        )
        partial = tp.audit(half, db, policy, 2).per_pseudonym
        for pseud, cand in full.items():
            if pseud in partial:
                assert cand <= partial[pseud]


def test_audit_empty_and_errors():
    db, log = tp.craft("line-4")
    policy = tp.Policy(2, [("a", "b"), ("c", "d")])
    empty = tp.AnonymizedLog(db.world, [], [], [], np.zeros((0, 4)), [])
    report = tp.audit(empty, db, policy, 2)
    assert report.min_anonymity is None and report.passed

    anon = tp.anonymize(db, log, policy, seed=0)
    with pytest.raises(tp.InputError):
        tp.candidate_set(anon, "not-a-pseudonym", db, policy)
    bad = tp.AnonymizedLog(db.world, ["r0"], ["p0"], [5], np.zeros((1, 4)), ["x"])
    with pytest.raises(tp.InputError):
        tp.audit(bad, db, policy, 2)
    with pytest.raises(tp.InputError):
        tp.audit_time_varying(anon, db, [policy, policy], 2)
