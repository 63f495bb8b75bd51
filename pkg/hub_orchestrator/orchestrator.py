import math
from dataclasses import replace
from typing import List, Sequence

from loguru import logger

from hub_orchestrator.errors import (
    EmptyScenario,
    Infeasible,
    InvalidInput,
    InvalidLatency,
    SolverFailure,
)
from hub_orchestrator.plans import assemble_plan
from hub_orchestrator.provisioning import latency_floor
from hub_orchestrator.types import (
    Budgets,
    FeasibilityResult,
    OrchestrationPlan,
    UserProfile,
)
from hub_orchestrator.util import (
    BISECTION_MAX_ITERATIONS,
    BRACKET_MAX_DOUBLINGS,
    DEFAULT_TOL_REL,
    FEASIBILITY_SLACK,
)

INFEASIBLE = FeasibilityResult(feasible=False)


def _compute_cost(user: UserProfile) -> float:
    # Cycles/s saved per bit/s of raw traffic moved from compute to backhaul
    return user.intensity_cycles_per_bit / (1 - user.output_ratio)


def feasible_at(
    latency_s: float, users: Sequence[UserProfile], budgets: Budgets
) -> FeasibilityResult:
    """
    Can every user finish within `latency_s`?

    Bandwidth is set to exactly what the deadline needs. Backhaul starts at
    the fully compressed volume and is raised greedily, most compute-hungry
    users first, until the remaining compute demand fits the budget.
    """
    if not latency_s > 0 or math.isinf(latency_s):
        raise InvalidLatency(f"Invalid latency: {latency_s}")

    if not users:
        raise EmptyScenario("No users to check")

    bandwidth = math.fsum(
        user.data_bits / (latency_s * user.spectral_efficiency) for user in users
    )
    if bandwidth > budgets.bandwidth_total_hz * (1 + FEASIBILITY_SLACK):
        return INFEASIBLE

    upper = [user.data_bits / latency_s for user in users]
    backhaul = [user.output_ratio * top for user, top in zip(users, upper)]
    rate_left = budgets.backhaul_total_bps - math.fsum(backhaul)
    if rate_left < -FEASIBILITY_SLACK * budgets.backhaul_total_bps:
        return INFEASIBLE
    rate_left = max(rate_left, 0.0)

    costs = [_compute_cost(user) for user in users]
    full_demand = math.fsum(
        cost * (top - low) for cost, top, low in zip(costs, upper, backhaul)
    )
    deficit = full_demand - budgets.compute_total_cps
    slack = FEASIBILITY_SLACK * max(budgets.compute_total_cps, full_demand)

    # Ties in cost go to the lower user index
    for index in sorted(range(len(users)), key=lambda i: (-costs[i], i)):
        if deficit <= 0 or rate_left <= 0:
            break

        cost = costs[index]
        headroom = upper[index] - backhaul[index]
        step = min(headroom, deficit / cost, rate_left)
        # Remainders within the slack count as saturated
        if step >= headroom or cost * (headroom - step) <= slack:
            backhaul[index] = upper[index]
        else:
            backhaul[index] += step

        rate_left -= step
        deficit -= cost * step

    demand = math.fsum(
        cost * (top - rate) for cost, top, rate in zip(costs, upper, backhaul)
    )

    if demand > budgets.compute_total_cps + slack:
        return INFEASIBLE

    return FeasibilityResult(feasible=True, witness=backhaul)


def solve(
    users: Sequence[UserProfile], budgets: Budgets, tol_rel: float = DEFAULT_TOL_REL
) -> OrchestrationPlan:
    """
    Minimize the worst per-user latency by bisection on a common deadline.

    The lower end is the unlimited-compute floor; the upper end starts from the
    no-compute relay latency and doubles until feasible. The returned plan is
    the certified-feasible end of the final bracket.
    """
    if not users:
        raise EmptyScenario("No users to orchestrate")

    if not 0 < tol_rel < 1:
        raise InvalidInput(f"Invalid relative tolerance: {tol_rel}")

    if budgets.bandwidth_total_hz <= 0 or budgets.backhaul_total_bps <= 0:
        raise Infeasible(
            f"No finite latency with B_total={budgets.bandwidth_total_hz}, R_total={budgets.backhaul_total_bps}"
        )

    low = latency_floor(users, budgets.bandwidth_total_hz, budgets.backhaul_total_bps)
    result = feasible_at(low, users, budgets)
    iterations = 0
    doublings = 0

    if result.feasible:
        latency = low
    else:
        high = max(
            math.fsum(user.data_bits / user.spectral_efficiency for user in users)
            / budgets.bandwidth_total_hz,
            math.fsum(user.data_bits for user in users) / budgets.backhaul_total_bps,
        )
        result = feasible_at(high, users, budgets)

        while not result.feasible:
            doublings += 1
            if doublings > BRACKET_MAX_DOUBLINGS:
                raise SolverFailure(f"No feasible latency found up to {high:.6g}s")
            high *= 2
            result = feasible_at(high, users, budgets)

        while (high - low) / low >= tol_rel:
            iterations += 1
            if iterations > BISECTION_MAX_ITERATIONS:
                raise SolverFailure(
                    f"Bisection did not converge: bracket [{low:.9g}, {high:.9g}]s"
                )

            middle = 0.5 * (low + high)
            attempt = feasible_at(middle, users, budgets)
            if attempt.feasible:
                high, result = middle, attempt
            else:
                low = middle

        latency = high

    logger.debug(
        "Bisection settled on {:.9g}s after {} iterations and {} doublings",
        latency,
        iterations,
        doublings,
    )

    assert result.witness is not None
    return assemble_plan(
        latency_s=latency,
        users=users,
        bandwidths_hz=[
            user.data_bits / (latency * user.spectral_efficiency) for user in users
        ],
        backhauls_bps=result.witness,
        budgets=budgets,
        solver="bisection",
        diagnostics={
            "bisection_iterations": float(iterations),
            "bracket_doublings": float(doublings),
        },
    )


def latency_curve(
    users: Sequence[UserProfile],
    budgets: Budgets,
    compute_values_cps: Sequence[float],
    tol_rel: float = DEFAULT_TOL_REL,
) -> List[float]:
    """
    Optimal latency for each total compute capacity in `compute_values_cps`
    """
    return [
        solve(users, replace(budgets, compute_total_cps=compute), tol_rel).latency_s
        for compute in compute_values_cps
    ]
