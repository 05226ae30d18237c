"""Offline LBS log anonymization with TP-aware sender k-anonymity.

Pipeline: load (or generate) trajectories and a request log, solve for a
grouping policy (exact oracle or PTIME approximation), publish the cloaked
log, and audit it against the trajectory- and policy-aware attacker.
"""

from .model import (
    AnonRecord,
    AnonymizedLog,
    CloakRegion,
    GridPoint,
    InputError,
    Policy,
    Request,
    RequestLog,
    Trajectory,
    TrajectoryDB,
    World,
)
from .geometry import bounding_region, group_cost, hilbert_index, region_area, total_cost
from .policy_engine import ValidationResult, anonymize, anonymize_time_varying, policy_wellformed
from .attacker import AuditReport, audit, audit_time_varying, candidate_set
from .exact import enumerate_partitions, solve_exact
from .approx import consecutive_dp, solve_approx, solve_per_step, solve_single_step
from .datagen import craft, generate
from .bench import compare, lower_bound, run_bench

__all__ = [
    "AnonRecord",
    "AnonymizedLog",
    "AuditReport",
    "CloakRegion",
    "GridPoint",
    "InputError",
    "Policy",
    "Request",
    "RequestLog",
    "Trajectory",
    "TrajectoryDB",
    "ValidationResult",
    "World",
    "anonymize",
    "anonymize_time_varying",
    "audit",
    "audit_time_varying",
    "bounding_region",
    "candidate_set",
    "compare",
    "consecutive_dp",
    "craft",
    "enumerate_partitions",
    "generate",
    "group_cost",
    "hilbert_index",
    "lower_bound",
    "region_area",
    "run_bench",
    "solve_approx",
    "solve_exact",
    "solve_per_step",
    "solve_single_step",
    "total_cost",
]
