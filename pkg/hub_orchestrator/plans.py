import math
from typing import Dict, List, Optional, Sequence

from hub_orchestrator.errors import EmptyScenario
from hub_orchestrator.flow import optimal_split
from hub_orchestrator.types import (
    Allocation,
    Budgets,
    BudgetUsage,
    OrchestrationPlan,
    UserProfile,
)
from hub_orchestrator.util import FEASIBILITY_SLACK, PLAN_TOL_REL, within_budget

# Upper bound on one-ulp compute bumps needed to land on the zero-storage row
MAX_COMPUTE_BUMPS = 8


def _snap_backhaul(backhaul_bps: float, access: float, zeta: float) -> float:
    lowest = zeta * access
    backhaul = min(max(backhaul_bps, lowest), access)

    if math.isclose(backhaul, access, rel_tol=FEASIBILITY_SLACK):
        return access

    if math.isclose(backhaul, lowest, rel_tol=FEASIBILITY_SLACK):
        return lowest

    return backhaul


def _settle_user(bandwidth_hz: float, backhaul_bps: float, user: UserProfile):
    """
    Compute allocation that makes access minus backhaul exactly match the
    compressed compute throughput, nudged upwards until no storage remains.
    """
    access = bandwidth_hz * user.spectral_efficiency
    zeta = user.output_ratio
    backhaul = _snap_backhaul(backhaul_bps, access, zeta)
    compute = max(
        user.intensity_cycles_per_bit * (access - backhaul) / (1 - zeta), 0.0
    )
    outcome = optimal_split(bandwidth_hz, backhaul, compute, user)

    for _ in range(MAX_COMPUTE_BUMPS):
        if outcome.storage_bits == 0 or compute == 0:
            break
        compute = math.nextafter(compute, math.inf)
        outcome = optimal_split(bandwidth_hz, backhaul, compute, user)

    return (
        Allocation(
            bandwidth_hz=bandwidth_hz,
            backhaul_bps=backhaul,
            compute_cps=compute,
            split=outcome.split,
        ),
        outcome,
    )


def assemble_plan(
    latency_s: float,
    users: Sequence[UserProfile],
    bandwidths_hz: Sequence[float],
    backhauls_bps: Sequence[float],
    budgets: Budgets,
    solver: str,
    diagnostics: Optional[Dict[str, float]] = None,
) -> OrchestrationPlan:
    """
    Turn per-user bandwidth and backhaul into a full plan: compute follows from
    the zero-storage frontier and the split from the scheduling table.
    """
    if not users:
        raise EmptyScenario("No users to plan for")

    allocations: List[Allocation] = []
    latencies: List[float] = []
    storages: List[float] = []

    for user, bandwidth, backhaul in zip(users, bandwidths_hz, backhauls_bps):
        allocation, outcome = _settle_user(bandwidth, backhaul, user)
        allocations.append(allocation)
        latencies.append(outcome.latency_s)
        storages.append(outcome.storage_bits)

    usage = BudgetUsage(
        bandwidth_hz=math.fsum(a.bandwidth_hz for a in allocations),
        backhaul_bps=math.fsum(a.backhaul_bps for a in allocations),
        compute_cps=math.fsum(a.compute_cps for a in allocations),
        storage_bits=math.fsum(storages),
    )

    return OrchestrationPlan(
        latency_s=latency_s,
        allocations=allocations,
        per_user_latency_s=latencies,
        per_user_storage_bits=storages,
        budget_usage=usage,
        solver=solver,
        storage_feasible=within_budget(
            usage.storage_bits, budgets.storage_total_bits, PLAN_TOL_REL
        ),
        diagnostics=dict(diagnostics or {}),
    )


def plan_violations(
    plan: OrchestrationPlan,
    users: Sequence[UserProfile],
    budgets: Budgets,
    tol_rel: float = PLAN_TOL_REL,
) -> List[str]:
    """
    Human-readable list of the plan invariants that do not hold; empty for a
    valid plan.
    """
    violations = []

    if len(plan.allocations) != len(users):
        violations.append(
            f"{len(plan.allocations)} allocations for {len(users)} users"
        )

    usage = plan.budget_usage
    for name, used, total in (
        ("bandwidth", usage.bandwidth_hz, budgets.bandwidth_total_hz),
        ("backhaul", usage.backhaul_bps, budgets.backhaul_total_bps),
        ("compute", usage.compute_cps, budgets.compute_total_cps),
    ):
        if not within_budget(used, total, tol_rel):
            violations.append(f"{name} usage {used:.9g} exceeds budget {total:.9g}")

    if not plan.storage_feasible:
        violations.append(
            f"storage usage {usage.storage_bits:.9g} exceeds budget {budgets.storage_total_bits:.9g}"
        )

    for index, (user, alloc, latency) in enumerate(
        zip(users, plan.allocations, plan.per_user_latency_s)
    ):
        if latency > plan.latency_s * (1 + tol_rel):
            violations.append(
                f"user {index} latency {latency:.9g}s exceeds plan latency {plan.latency_s:.9g}s"
            )

        access = alloc.bandwidth_hz * user.spectral_efficiency
        if alloc.backhaul_bps > access * (1 + tol_rel):
            violations.append(
                f"user {index} backhaul {alloc.backhaul_bps:.9g} above access rate {access:.9g}"
            )
        if access > alloc.backhaul_bps / user.output_ratio * (1 + tol_rel):
            violations.append(
                f"user {index} access rate {access:.9g} above backhaul/zeta {alloc.backhaul_bps / user.output_ratio:.9g}"
            )

    return violations
