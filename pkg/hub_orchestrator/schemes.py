import math
from dataclasses import replace
from typing import Callable, Dict, List, Sequence, Tuple

import cvxpy as cp
import numpy as np
from loguru import logger

from hub_orchestrator.errors import SolverFailure, UnknownScheme
from hub_orchestrator.flow import optimal_split, sequential_latency, sequential_split
from hub_orchestrator.orchestrator import solve
from hub_orchestrator.types import (
    Allocation,
    Budgets,
    BudgetUsage,
    OrchestrationPlan,
    ResultRow,
    Scenario,
    Scheme,
    UserProfile,
)
from hub_orchestrator.util import DEFAULT_TOL_REL

# Alternations between the convex resource program and the per-user split
SEQUENTIAL_ROUNDS = 5


def _usage(allocations: Sequence[Allocation], storages: Sequence[float]) -> BudgetUsage:
    return BudgetUsage(
        bandwidth_hz=math.fsum(a.bandwidth_hz for a in allocations),
        backhaul_bps=math.fsum(a.backhaul_bps for a in allocations),
        compute_cps=math.fsum(a.compute_cps for a in allocations),
        storage_bits=math.fsum(storages),
    )


def _from_plan(scheme: Scheme, seed: int, plan: OrchestrationPlan) -> ResultRow:
    return ResultRow(
        scheme_name=scheme,
        seed=seed,
        latency_s=plan.latency_s,
        per_user_latency_s=list(plan.per_user_latency_s),
        per_user_storage_bits=list(plan.per_user_storage_bits),
        budget_usage=plan.budget_usage,
    )


def _equal_shares(
    users: Sequence[UserProfile], budgets: Budgets
) -> Tuple[float, float, float]:
    count = len(users)
    return (
        budgets.bandwidth_total_hz / count,
        budgets.backhaul_total_bps / count,
        budgets.compute_total_cps / count,
    )


def _proposed(scenario: Scenario, seed: int, tol_rel: float) -> ResultRow:
    plan = solve(scenario.users, scenario.budgets, tol_rel)
    return _from_plan("proposed", seed, plan)


def _no_mec(scenario: Scenario, seed: int, tol_rel: float) -> ResultRow:
    """
    Pure two-hop relay: without compute the optimal split is 0 and every user
    is bounded by min(B r, R).
    """
    budgets = replace(scenario.budgets, compute_total_cps=0.0)
    return _from_plan("no_mec", seed, solve(scenario.users, budgets, tol_rel))


def _proposed_equal(scenario: Scenario, seed: int, tol_rel: float) -> ResultRow:
    bandwidth, backhaul, compute = _equal_shares(scenario.users, scenario.budgets)
    allocations, latencies, storages = [], [], []

    for user in scenario.users:
        outcome = optimal_split(bandwidth, backhaul, compute, user)
        allocations.append(Allocation(bandwidth, backhaul, compute, outcome.split))
        latencies.append(outcome.latency_s)
        storages.append(outcome.storage_bits)

    return ResultRow(
        scheme_name="proposed_equal",
        seed=seed,
        latency_s=max(latencies),
        per_user_latency_s=latencies,
        per_user_storage_bits=storages,
        budget_usage=_usage(allocations, storages),
    )


def _sequential_row(
    scheme: Scheme,
    seed: int,
    users: Sequence[UserProfile],
    allocations: Sequence[Allocation],
) -> ResultRow:
    latencies = [
        sequential_latency(alloc, user) for alloc, user in zip(allocations, users)
    ]
    # Store-and-forward keeps the whole upload on board before processing
    storages = [user.data_bits for user in users]

    return ResultRow(
        scheme_name=scheme,
        seed=seed,
        latency_s=max(latencies),
        per_user_latency_s=latencies,
        per_user_storage_bits=storages,
        budget_usage=_usage(allocations, storages),
    )


def _sequential_equal(scenario: Scenario, seed: int, tol_rel: float) -> ResultRow:
    bandwidth, backhaul, compute = _equal_shares(scenario.users, scenario.budgets)
    allocations = [
        Allocation(
            bandwidth,
            backhaul,
            compute,
            sequential_split(bandwidth, backhaul, compute, user)[0],
        )
        for user in scenario.users
    ]

    return _sequential_row("sequential_equal", seed, scenario.users, allocations)


def _normalized(shares: np.ndarray) -> np.ndarray:
    shares = np.clip(shares, 0.0, None)
    return shares / max(1.0, float(shares.sum()))


def _sequential_resources(
    users: Sequence[UserProfile], budgets: Budgets, splits: Sequence[float]
) -> List[Allocation]:
    """
    Min-max sequential latency over resource shares for fixed splits.

    Each stage contributes work/share, a convex term, so the program is
    solved directly; shares are normalized by the budgets to keep the
    coefficients in seconds.
    """
    count = len(users)
    bandwidth = cp.Variable(count, nonneg=True)
    backhaul = cp.Variable(count, nonneg=True)
    compute = cp.Variable(count, nonneg=True)
    worst = cp.Variable()

    constraints = [cp.sum(bandwidth) <= 1, cp.sum(backhaul) <= 1, cp.sum(compute) <= 1]
    for index, (user, split) in enumerate(zip(users, splits)):
        data = user.data_bits
        receiving = data / user.spectral_efficiency / budgets.bandwidth_total_hz
        forwarding = (
            (user.output_ratio * split + 1 - split) * data / budgets.backhaul_total_bps
        )
        stage = receiving * cp.inv_pos(bandwidth[index]) + forwarding * cp.inv_pos(
            backhaul[index]
        )

        if split > 0:
            computing = (
                split * data * user.intensity_cycles_per_bit / budgets.compute_total_cps
            )
            stage = stage + computing * cp.inv_pos(compute[index])

        constraints.append(stage <= worst)

    problem = cp.Problem(cp.Minimize(worst), constraints)
    problem.solve()

    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverFailure(
            f"Sequential resource program ended with status {problem.status}"
        )

    if problem.status == cp.OPTIMAL_INACCURATE:
        logger.warning("Sequential resource program solved inaccurately")

    shares = [
        _normalized(np.asarray(variable.value, dtype=float))
        for variable in (bandwidth, backhaul, compute)
    ]

    return [
        Allocation(
            bandwidth_hz=float(shares[0][index]) * budgets.bandwidth_total_hz,
            backhaul_bps=float(shares[1][index]) * budgets.backhaul_total_bps,
            compute_cps=float(shares[2][index]) * budgets.compute_total_cps,
            split=split,
        )
        for index, split in enumerate(splits)
    ]


def _sequential_opt(scenario: Scenario, seed: int, tol_rel: float) -> ResultRow:
    """
    Receive, compute and forward one after another, with resources and
    splits optimized alternately.
    """
    users, budgets = scenario.users, scenario.budgets
    bandwidth, backhaul, compute = _equal_shares(users, budgets)
    splits = [sequential_split(bandwidth, backhaul, compute, user)[0] for user in users]

    if budgets.compute_total_cps <= 0:
        splits = [0.0] * len(users)

    best = None
    for round_index in range(SEQUENTIAL_ROUNDS):
        allocations = _sequential_resources(users, budgets, splits)
        row = _sequential_row("sequential_opt", seed, users, allocations)
        if best is None or row.latency_s < best.latency_s:
            best = row

        updated = [
            sequential_split(a.bandwidth_hz, a.backhaul_bps, a.compute_cps, user)[0]
            for a, user in zip(allocations, users)
        ]
        logger.debug(
            "Sequential round {}: latency {:.9g}s, splits {}",
            round_index,
            row.latency_s,
            updated,
        )
        if updated == splits:
            break
        splits = updated

    assert best is not None
    return best


SCHEMES: Dict[Scheme, Callable[[Scenario, int, float], ResultRow]] = {
    "proposed": _proposed,
    "no_mec": _no_mec,
    "sequential_opt": _sequential_opt,
    "proposed_equal": _proposed_equal,
    "sequential_equal": _sequential_equal,
}


def run_scheme(
    scenario: Scenario, scheme: str, seed: int = 0, tol_rel: float = DEFAULT_TOL_REL
) -> ResultRow:
    runner = SCHEMES.get(scheme)  # type: ignore

    if runner is None:
        raise UnknownScheme(f"Unknown scheme: {scheme}")

    row = runner(scenario, seed, tol_rel)
    logger.info("{} finished with latency {:.9g}s", scheme, row.latency_s)

    return row
