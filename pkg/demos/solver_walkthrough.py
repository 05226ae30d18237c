"""End-to-end pipeline on a synthetic town: generate, solve, publish, audit.

Run: python3 demos/solver_walkthrough.py
"""

import tpanon as tp

world = tp.World(side=64, horizon=4)
db, log = tp.generate(seed=42, n=60, world=world, request_rate=1.5)
print(f"{db.n} users, horizon {world.horizon}, {len(log)} requests")

k = 5
policy = tp.solve_approx(db, log, k)
cost = tp.total_cost(policy, db, log)
lb = tp.lower_bound(db, log, k)
print(f"k={k}: {len(policy.groups)} groups, total cost {cost} cells "
      f"(analytic lower bound {lb}, ratio {tp.compare(lb, cost)})")

anon = tp.anonymize(db, log, policy, seed=42)
first = next(iter(anon))
print(f"sample published record: {first}")

report = tp.audit(anon, db, policy, k)
print(f"audit: min anonymity {report.min_anonymity}, passed={report.passed}")

# the exact solver doubles as an oracle on small instances
small_db, small_log = tp.generate(seed=7, n=10, world=tp.World(16, 2), request_rate=2.0)
exact = tp.solve_exact(small_db, small_log, 2)
approx = tp.solve_approx(small_db, small_log, 2)
print(f"small instance: exact cost {tp.total_cost(exact, small_db, small_log)}, "
      f"approx cost {tp.total_cost(approx, small_db, small_log)}")
