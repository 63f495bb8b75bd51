import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from loguru import logger

from hub_orchestrator.errors import (
    InvalidInput,
    NoAccessLink,
    NoBackhaul,
    NoCompute,
    StalledFlow,
)
from hub_orchestrator.flow import required_storage, upload_latency
from hub_orchestrator.types import (
    Allocation,
    ConformanceReport,
    FlowEvent,
    FlowTrace,
    UserProfile,
)
from hub_orchestrator.util import STORAGE_FLOOR_BITS, relative_error

# Breakpoints closer than this (relative) are one event
EVENT_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class _Rates:
    access: float
    into_compute: float
    compute_drain: float
    into_upload: float
    upload_drain: float

    @property
    def compute_net(self) -> float:
        return self.into_compute - self.compute_drain

    @property
    def upload_net(self) -> float:
        return self.into_upload - self.upload_drain

    def labels(self) -> Tuple[str, ...]:
        active = (
            ("access", self.access),
            ("compute", self.compute_drain),
            ("backhaul", self.upload_drain),
        )
        return tuple(label for label, rate in active if rate > 0)


def _segment_rates(
    alloc: Allocation,
    user: UserProfile,
    source_bits: float,
    compute_bits: float,
    upload_bits: float,
) -> _Rates:
    """
    Rates on the segment starting at the given state, resolved in flow order
    source -> compute -> upload. An empty queue passes its inflow through up to
    its drain capacity.
    """
    access = alloc.bandwidth_hz * user.spectral_efficiency if source_bits > 0 else 0.0
    compute_capacity = alloc.compute_cps / user.intensity_cycles_per_bit

    into_compute = alloc.split * access
    compute_drain = (
        compute_capacity
        if compute_bits > 0
        else min(compute_capacity, into_compute)
    )

    into_upload = (1 - alloc.split) * access + user.output_ratio * compute_drain
    upload_drain = (
        alloc.backhaul_bps
        if upload_bits > 0
        else min(alloc.backhaul_bps, into_upload)
    )

    return _Rates(access, into_compute, compute_drain, into_upload, upload_drain)


def _time_to_empty(level: float, net: float) -> float:
    if level > 0 and net < 0:
        return level / -net

    return math.inf


def simulate(alloc: Allocation, user: UserProfile) -> FlowTrace:
    """
    Exact event-driven run of the two coupled queues on the hub.

    Every segment has constant rates, so the next breakpoint (source exhausted
    or a queue running dry) is found by solving a linear equation.
    """
    if alloc.bandwidth_hz <= 0:
        raise NoAccessLink(f"No access bandwidth allocated to {user}")

    now = 0.0
    source, compute_queue, upload_queue = user.data_bits, 0.0, 0.0
    delivered = 0.0
    peak, peak_time = 0.0, 0.0
    events: List[FlowEvent] = []

    while True:
        rates = _segment_rates(alloc, user, source, compute_queue, upload_queue)
        pending = source > 0 or compute_queue > 0 or upload_queue > 0
        events.append(
            FlowEvent(
                now, compute_queue, upload_queue, rates.labels() if pending else ()
            )
        )

        if not pending:
            break

        candidates = [
            source / rates.access if source > 0 else math.inf,
            _time_to_empty(compute_queue, rates.compute_net),
            _time_to_empty(upload_queue, rates.upload_net),
        ]
        step = min(candidates)

        if math.isinf(step):
            if compute_queue > 0 and rates.compute_drain == 0:
                raise NoCompute(
                    f"{compute_queue:.6g} bits stuck in the compute queue of {user} at t={now:.6g}s"
                )
            if upload_queue > 0 and rates.upload_drain == 0:
                raise NoBackhaul(
                    f"{upload_queue:.6g} bits stuck in the upload queue of {user} at t={now:.6g}s"
                )
            raise StalledFlow(f"Flow of {user} makes no progress at t={now:.6g}s")

        reached = [
            candidate - step <= EVENT_MERGE_TOL * step for candidate in candidates
        ]

        now += step
        source = 0.0 if reached[0] else max(source - rates.access * step, 0.0)
        compute_queue = (
            0.0 if reached[1] else max(compute_queue + rates.compute_net * step, 0.0)
        )
        upload_queue = (
            0.0 if reached[2] else max(upload_queue + rates.upload_net * step, 0.0)
        )
        delivered += rates.upload_drain * step

        if compute_queue + upload_queue > peak:
            peak, peak_time = compute_queue + upload_queue, now

    logger.debug(
        "Fluid run of {} finished at {:.6g}s after {} events, peak storage {:.6g} bits",
        user,
        now,
        len(events),
        peak,
    )

    return FlowTrace(
        completion_s=now,
        peak_storage_bits=peak,
        events=tuple(events),
        delivered_bits=delivered,
        peak_time_s=peak_time,
    )


def conformance_check(
    alloc: Allocation,
    user: UserProfile,
    tol_rel: float,
    latency_model: Callable[[Allocation, UserProfile], float] = upload_latency,
    storage_model: Callable[[Allocation, UserProfile], float] = required_storage,
) -> ConformanceReport:
    """
    Compare a fluid run against the closed-form latency and storage.

    Storage errors are relative to the larger of the two values, but never
    to less than one bit, since zero storage is a legitimate answer. A run that stalls
    matches only a closed form that predicts an infinite latency.
    """
    if tol_rel <= 0:
        raise InvalidInput(f"Invalid tolerance: {tol_rel}")

    expected_latency = latency_model(alloc, user)

    try:
        trace = simulate(alloc, user)
    except StalledFlow:
        stalled = math.isinf(expected_latency)
        return ConformanceReport(
            latency_match=stalled,
            storage_match=stalled,
            deltas={"latency_s": math.inf, "latency_rel": 0.0 if stalled else math.inf},
        )

    expected_storage = storage_model(alloc, user)
    latency_rel = relative_error(trace.completion_s, expected_latency)
    storage_rel = relative_error(
        trace.peak_storage_bits, expected_storage, floor=STORAGE_FLOOR_BITS
    )
    deltas: Dict[str, float] = {
        "latency_s": trace.completion_s - expected_latency,
        "latency_rel": latency_rel,
        "storage_bits": trace.peak_storage_bits - expected_storage,
        "storage_rel": storage_rel,
    }

    return ConformanceReport(
        latency_match=latency_rel < tol_rel,
        storage_match=storage_rel < tol_rel,
        deltas=deltas,
    )
