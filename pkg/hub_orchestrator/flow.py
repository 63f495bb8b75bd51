import math
from typing import Tuple

import numpy as np

from hub_orchestrator.errors import InvalidInput, NoAccessLink
from hub_orchestrator.types import Allocation, LatencyBranch, SplitOutcome, UserProfile
from hub_orchestrator.util import safe_div


def _access_rate(bandwidth_hz: float, user: UserProfile) -> float:
    if bandwidth_hz <= 0:
        raise NoAccessLink(f"No access bandwidth allocated to {user}")

    return bandwidth_hz * user.spectral_efficiency


def _compute_bound(
    data: float, split: float, compute_cps: float, user: UserProfile, access: float
) -> float:
    if compute_cps > 0:
        return split * data * user.intensity_cycles_per_bit / compute_cps

    # Nothing routed to a missing processor finishes with the access link
    return math.inf if split > 0 else data / access


def _clamp(split: float) -> float:
    # Rounding can push a table split a few ulps outside [0, 1]
    return min(max(split, 0.0), 1.0)


def latency_branch(alloc: Allocation, user: UserProfile) -> LatencyBranch:
    """
    Which guard family of the piecewise latency/storage expressions applies.

    Guards are evaluated in a fixed order with exact comparisons, so every input
    lands in exactly one family.
    """
    access = _access_rate(alloc.bandwidth_hz, user)
    compute = alloc.compute_cps / user.intensity_cycles_per_bit
    eta = alloc.split
    zeta = user.output_ratio
    backhaul = alloc.backhaul_bps
    volume = zeta * eta + 1 - eta

    if eta * access >= compute:
        if zeta * compute + (1 - eta) * access >= backhaul:
            if compute >= eta * backhaul / volume:
                return "backhaul_bound_compute_backlog"
            return "compute_bound_upload_backlog"
        return "compute_bound"

    if volume * access >= backhaul:
        return "backhaul_bound"

    return "access_bound"


def upload_latency(alloc: Allocation, user: UserProfile) -> float:
    branch = latency_branch(alloc, user)
    access = alloc.bandwidth_hz * user.spectral_efficiency
    data = user.data_bits
    eta = alloc.split

    if branch in ("backhaul_bound_compute_backlog", "backhaul_bound"):
        return safe_div(data * (user.output_ratio * eta + 1 - eta), alloc.backhaul_bps)

    if branch in ("compute_bound_upload_backlog", "compute_bound"):
        return _compute_bound(data, eta, alloc.compute_cps, user, access)

    return data / access


def required_storage(alloc: Allocation, user: UserProfile) -> float:
    branch = latency_branch(alloc, user)
    access = alloc.bandwidth_hz * user.spectral_efficiency
    compute = alloc.compute_cps / user.intensity_cycles_per_bit
    backhaul = alloc.backhaul_bps
    zeta = user.output_ratio
    eta = alloc.split
    horizon = user.data_bits / access

    if branch in ("backhaul_bound_compute_backlog", "compute_bound_upload_backlog"):
        storage = horizon * (access - backhaul - (1 - zeta) * compute)
    elif branch == "compute_bound":
        storage = horizon * (eta * access - compute)
    elif branch == "backhaul_bound":
        storage = horizon * ((zeta * eta + 1 - eta) * access - backhaul)
    else:
        storage = 0.0

    return max(storage, 0.0)


def optimal_split(
    bandwidth_hz: float, backhaul_bps: float, compute_cps: float, user: UserProfile
) -> SplitOutcome:
    """
    Data split that minimizes latency and storage at once for fixed resources.

    Where a whole interval of splits is optimal the canonical representative
    of the scheduling table is returned.
    """
    if backhaul_bps < 0 or compute_cps < 0:
        raise InvalidInput(f"Negative rate: R={backhaul_bps}, F={compute_cps}")

    access = _access_rate(bandwidth_hz, user)
    data = user.data_bits
    rho = user.intensity_cycles_per_bit
    zeta = user.output_ratio
    compute = compute_cps / rho
    horizon = data / access

    if access < backhaul_bps:
        return SplitOutcome(split=0.0, latency_s=horizon, storage_bits=0.0, regime=1)

    pipeline = compute_cps * (1 - zeta) + rho * backhaul_bps

    if access < backhaul_bps / zeta:
        if compute < (access - backhaul_bps) / (1 - zeta):
            return SplitOutcome(
                split=_clamp(compute_cps / pipeline),
                latency_s=data * rho / pipeline,
                storage_bits=max(
                    horizon * (access - backhaul_bps - (1 - zeta) * compute), 0.0
                ),
                regime=2,
            )

        return SplitOutcome(
            split=_clamp((access - backhaul_bps) / ((1 - zeta) * access)),
            latency_s=horizon,
            storage_bits=0.0,
            regime=3,
        )

    if compute < backhaul_bps / zeta:
        return SplitOutcome(
            split=_clamp(compute_cps / pipeline),
            latency_s=data * rho / pipeline,
            storage_bits=max(
                horizon * (access - backhaul_bps - (1 - zeta) * compute), 0.0
            ),
            regime=4,
        )

    latency = safe_div(zeta * data, backhaul_bps)

    if compute < access:
        return SplitOutcome(
            split=1.0,
            latency_s=latency,
            storage_bits=max(
                horizon * (access - backhaul_bps - (1 - zeta) * compute), 0.0
            ),
            regime=5,
        )

    return SplitOutcome(
        split=1.0,
        latency_s=latency,
        storage_bits=max(horizon * (zeta * access - backhaul_bps), 0.0),
        regime=6,
    )


def zero_storage_equivalent(
    bandwidth_hz: float, backhaul_bps: float, compute_cps: float, user: UserProfile
) -> Allocation:
    """
    Shrink a resource triple onto the zero-storage frontier.

    The result uses no more of any resource, reaches the same split-optimal
    latency and needs no storage: access rate lies between R and R/zeta and
    compute exactly matches the excess of access over backhaul.
    """
    outcome = optimal_split(bandwidth_hz, backhaul_bps, compute_cps, user)
    r = user.spectral_efficiency
    rho = user.intensity_cycles_per_bit
    zeta = user.output_ratio

    if outcome.regime == 1:
        bandwidth, backhaul, compute = bandwidth_hz, bandwidth_hz * r, 0.0
    elif outcome.regime in (2, 4):
        bandwidth = (backhaul_bps + (1 - zeta) * compute_cps / rho) / r
        backhaul, compute = backhaul_bps, compute_cps
    elif outcome.regime == 3:
        bandwidth, backhaul = bandwidth_hz, backhaul_bps
        compute = rho * (bandwidth_hz * r - backhaul_bps) / (1 - zeta)
    else:
        bandwidth = backhaul_bps / (zeta * r)
        backhaul = backhaul_bps
        compute = rho * backhaul_bps / zeta

    split = optimal_split(bandwidth, backhaul, compute, user).split

    return Allocation(
        bandwidth_hz=bandwidth, backhaul_bps=backhaul, compute_cps=compute, split=split
    )


def sequential_latency(alloc: Allocation, user: UserProfile) -> float:
    """
    Latency when receiving, computing and forwarding run one after another
    """
    access = _access_rate(alloc.bandwidth_hz, user)
    data = user.data_bits
    eta = alloc.split
    computing = (
        0.0
        if eta == 0
        else safe_div(eta * data * user.intensity_cycles_per_bit, alloc.compute_cps)
    )
    forwarding = safe_div(
        (user.output_ratio * eta + 1 - eta) * data, alloc.backhaul_bps
    )

    return data / access + computing + forwarding


def sequential_split(
    bandwidth_hz: float, backhaul_bps: float, compute_cps: float, user: UserProfile
) -> Tuple[float, float]:
    """
    Best split for the sequential model and its latency.

    The sequential latency is affine in the split, so an endpoint is optimal;
    ties keep everything raw.
    """
    candidates = [
        (
            sequential_latency(
                Allocation(bandwidth_hz, backhaul_bps, compute_cps, split), user
            ),
            split,
        )
        for split in (0.0, 1.0)
    ]
    latency, split = min(candidates, key=lambda candidate: candidate[0])

    return split, latency


def latency_grid(
    access: np.ndarray,
    backhaul: np.ndarray,
    compute_rate: np.ndarray,
    split: np.ndarray,
    user: UserProfile,
) -> np.ndarray:
    """
    Vectorised piecewise latency over broadcastable arrays of access rate,
    backhaul rate, compute throughput (bits/s) and split
    """
    data = user.data_bits
    zeta = user.output_ratio

    with np.errstate(divide="ignore", invalid="ignore"):
        volume = zeta * split + 1 - split
        grows_compute = split * access >= compute_rate
        grows_upload = zeta * compute_rate + (1 - split) * access >= backhaul
        compute_first = compute_rate >= split * backhaul / volume
        upload_bound = volume * access >= backhaul

        backhaul_limited = np.where(backhaul > 0, data * volume / backhaul, np.inf)
        compute_limited = np.where(
            compute_rate > 0,
            split * data / compute_rate,
            np.where(split > 0, np.inf, data / access),
        )
        access_limited = data / access

        latency = np.select(
            [
                grows_compute & grows_upload & compute_first,
                grows_compute & grows_upload,
                grows_compute,
                upload_bound,
            ],
            [backhaul_limited, compute_limited, compute_limited, backhaul_limited],
            default=access_limited,
        )

    return np.where(access > 0, latency, np.inf)


def split_latency_grid(
    access: np.ndarray,
    backhaul: np.ndarray,
    compute_rate: np.ndarray,
    user: UserProfile,
) -> np.ndarray:
    """
    Vectorised split-optimal latency (the latency column of the scheduling table)
    """
    data = user.data_bits
    zeta = user.output_ratio

    with np.errstate(divide="ignore", invalid="ignore"):
        pipeline = compute_rate * (1 - zeta) + backhaul
        pipeline_limited = np.where(pipeline > 0, data / pipeline, np.inf)
        access_limited = data / access
        backhaul_limited = np.where(backhaul > 0, zeta * data / backhaul, np.inf)

        below = access < backhaul
        middle = ~below & (access < backhaul / zeta)
        high = ~below & ~middle
        middle_starved = middle & (compute_rate < (access - backhaul) / (1 - zeta))
        high_starved = high & (compute_rate < backhaul / zeta)

        latency = np.select(
            [below, middle_starved, middle, high_starved],
            [access_limited, pipeline_limited, access_limited, pipeline_limited],
            default=backhaul_limited,
        )

    return np.where(access > 0, latency, np.inf)
