import math
from typing import Sequence

from loguru import logger

from hub_orchestrator.errors import (
    ComputeBelowThreshold,
    EmptyScenario,
    Infeasible,
    InvalidLatency,
)
from hub_orchestrator.plans import assemble_plan
from hub_orchestrator.types import (
    Budgets,
    OrchestrationPlan,
    ProvisioningAdvice,
    UserProfile,
)

SUFFICIENT_NOTE = (
    "sufficient, not minimal: a smaller compute capacity may already reach "
    "the same latency"
)


def _check(
    users: Sequence[UserProfile], bandwidth_total_hz: float, backhaul_total_bps: float
):
    if not users:
        raise EmptyScenario("No users to provision for")

    if bandwidth_total_hz <= 0 or backhaul_total_bps <= 0:
        raise Infeasible(
            f"Uploads never finish with B_total={bandwidth_total_hz}, R_total={backhaul_total_bps}"
        )


def _access_demand(users: Sequence[UserProfile]) -> float:
    return math.fsum(user.data_bits / user.spectral_efficiency for user in users)


def _output_volume(users: Sequence[UserProfile]) -> float:
    return math.fsum(user.output_ratio * user.data_bits for user in users)


def f_total_limit(
    users: Sequence[UserProfile], bandwidth_total_hz: float, backhaul_total_bps: float
) -> float:
    """
    Compute capacity beyond which more processing no longer lowers latency
    """
    _check(users, bandwidth_total_hz, backhaul_total_bps)
    workload = math.fsum(
        user.intensity_cycles_per_bit * user.data_bits for user in users
    )

    return workload * min(
        bandwidth_total_hz / _access_demand(users),
        backhaul_total_bps / _output_volume(users),
    )


def latency_floor(
    users: Sequence[UserProfile], bandwidth_total_hz: float, backhaul_total_bps: float
) -> float:
    """
    Latency reachable with unlimited compute: either the access link or the
    fully compressed backhaul is the bottleneck.
    """
    _check(users, bandwidth_total_hz, backhaul_total_bps)

    return max(
        _access_demand(users) / bandwidth_total_hz,
        _output_volume(users) / backhaul_total_bps,
    )


def closed_form_plan(
    users: Sequence[UserProfile], budgets: Budgets
) -> OrchestrationPlan:
    """
    Optimal plan when compute is plentiful: bandwidth proportional to D/r and
    backhaul proportional to the compressed volume, both scaled by the binding
    budget.
    """
    limit = f_total_limit(users, budgets.bandwidth_total_hz, budgets.backhaul_total_bps)

    if budgets.compute_total_cps < limit:
        raise ComputeBelowThreshold(
            f"Compute budget {budgets.compute_total_cps:.6g} cycles/s is below the sufficient {limit:.6g} cycles/s"
        )

    floor = latency_floor(users, budgets.bandwidth_total_hz, budgets.backhaul_total_bps)
    scale = min(
        budgets.bandwidth_total_hz / _access_demand(users),
        budgets.backhaul_total_bps / _output_volume(users),
    )

    return assemble_plan(
        latency_s=floor,
        users=users,
        bandwidths_hz=[
            user.data_bits / user.spectral_efficiency * scale for user in users
        ],
        backhauls_bps=[user.output_ratio * user.data_bits * scale for user in users],
        budgets=budgets,
        solver="closed_form",
        diagnostics={"f_total_limit_cps": limit},
    )


def recommend_compute(
    threshold_s: float,
    users: Sequence[UserProfile],
    bandwidth_total_hz: float,
    backhaul_total_bps: float,
) -> ProvisioningAdvice:
    if threshold_s <= 0:
        raise InvalidLatency(f"Invalid latency threshold: {threshold_s}")

    floor = latency_floor(users, bandwidth_total_hz, backhaul_total_bps)

    if threshold_s < floor:
        logger.info(
            "Threshold {}s is below the latency floor {}s at any compute",
            threshold_s,
            floor,
        )
        return ProvisioningAdvice(
            verdict="ImpossibleAtAnyCompute",
            threshold_s=threshold_s,
            latency_floor_s=floor,
            note=f"latency cannot drop below {floor:.9g}s with these link budgets",
        )

    return ProvisioningAdvice(
        verdict="Sufficient",
        threshold_s=threshold_s,
        latency_floor_s=floor,
        recommended_compute_cps=f_total_limit(
            users, bandwidth_total_hz, backhaul_total_bps
        ),
        achieved_latency_s=floor,
        note=SUFFICIENT_NOTE,
    )
