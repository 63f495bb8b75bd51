import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hub_orchestrator.errors import InvalidInput, NoAccessLink, NoBackhaul, NoCompute
from hub_orchestrator.flow import upload_latency
from hub_orchestrator.fluid import conformance_check, simulate
from hub_orchestrator.types import Allocation, UserProfile


def make_user(data=1e6, rho=1000.0, zeta=0.1, r=1.0) -> UserProfile:
    return UserProfile(
        data_bits=data,
        intensity_cycles_per_bit=rho,
        output_ratio=zeta,
        spectral_efficiency=r,
    )


users = st.builds(
    make_user,
    data=st.floats(1e5, 1e8),
    rho=st.floats(100.0, 5000.0),
    zeta=st.floats(0.01, 0.99),
    r=st.floats(0.5, 20.0),
)
allocations = st.builds(
    Allocation,
    bandwidth_hz=st.floats(1e3, 1e7),
    backhaul_bps=st.floats(1.0, 1e8),
    compute_cps=st.floats(1e3, 1e12),
    split=st.floats(0.0, 1.0),
)


def test_pipeline_without_backlog():
    trace = simulate(Allocation(1e6, 2e6, 1e9, 0.5), make_user())

    assert len(trace.events) == 2
    assert trace.completion_s == pytest.approx(1.0, rel=1e-12)
    assert trace.peak_storage_bits == 0.0
    assert trace.events[0].active_rate_labels == ("access", "compute", "backhaul")
    assert trace.events[-1].active_rate_labels == ()


def test_backhaul_bottleneck_builds_upload_queue():
    trace = simulate(Allocation(1e6, 2e5, 0.0, 0.0), make_user())

    assert trace.completion_s == pytest.approx(5.0, rel=1e-12)
    assert trace.peak_storage_bits == pytest.approx(8e5, rel=1e-12)
    assert trace.peak_time_s == pytest.approx(1.0, rel=1e-12)
    assert trace.delivered_bits == pytest.approx(1e6, rel=1e-12)


def test_compute_bottleneck_builds_compute_queue():
    trace = simulate(Allocation(1e6, 1e5, 1e8, 1.0), make_user())

    assert trace.completion_s == pytest.approx(10.0, rel=1e-12)
    assert trace.peak_storage_bits == pytest.approx(9e5, rel=1e-12)
    assert trace.delivered_bits == pytest.approx(1e5, rel=1e-12)


def test_raw_forwarding_leaves_compute_queue_empty():
    trace = simulate(Allocation(1e6, 3e5, 1e9, 0.0), make_user())

    assert all(event.queue_compute_bits == 0 for event in trace.events)


@settings(max_examples=300)
@given(users, allocations)
def test_trace_invariants(user, alloc):
    trace = simulate(alloc, user)
    times = [event.time_s for event in trace.events]
    volume = user.output_ratio * alloc.split + 1 - alloc.split

    assert times == sorted(times)
    assert trace.completion_s == times[-1]
    assert trace.delivered_bits == pytest.approx(user.data_bits * volume, rel=1e-9)
    assert trace.peak_storage_bits == max(
        event.queue_compute_bits + event.queue_upload_bits for event in trace.events
    )
    assert all(
        event.queue_compute_bits >= 0 and event.queue_upload_bits >= 0
        for event in trace.events
    )


@settings(max_examples=300)
@given(users, allocations)
def test_storage_peaks_when_source_is_exhausted(user, alloc):
    trace = simulate(alloc, user)

    if trace.peak_storage_bits > 1e-6 * user.data_bits:
        horizon = user.data_bits / (alloc.bandwidth_hz * user.spectral_efficiency)
        assert trace.peak_time_s == pytest.approx(horizon, rel=1e-9)


@settings(max_examples=500)
@given(users, allocations)
def test_fluid_run_matches_closed_form(user, alloc):
    report = conformance_check(alloc, user, tol_rel=1e-9)

    assert report.latency_match, report.deltas
    assert report.storage_match, report.deltas


@pytest.mark.slow
def test_fluid_run_matches_closed_form_on_random_batch():
    rng = np.random.default_rng(2024)
    count = 100_000
    data = rng.uniform(1e5, 1e8, count)
    rho = rng.uniform(100.0, 5000.0, count)
    zeta = rng.uniform(0.01, 0.99, count)
    r = rng.uniform(0.5, 20.0, count)
    bandwidth = rng.uniform(1e3, 1e7, count)
    backhaul = rng.uniform(1.0, 1e8, count)
    compute = rng.uniform(0.0, 1e12, count)
    split = rng.uniform(0.0, 1.0, count)

    for index in range(count):
        user = make_user(data[index], rho[index], zeta[index], r[index])
        alloc = Allocation(
            bandwidth[index], backhaul[index], compute[index], split[index]
        )
        report = conformance_check(alloc, user, tol_rel=1e-9)
        assert report.latency_match and report.storage_match, (alloc, user)


def test_corrupted_closed_form_is_caught():
    user = make_user()
    alloc = Allocation(1e6, 2e5, 0.0, 0.0)

    def shifted(a, u):
        return upload_latency(a, u) + 1.0

    report = conformance_check(alloc, user, tol_rel=1e-9, latency_model=shifted)

    assert not report.latency_match
    assert report.storage_match
    assert report.deltas["latency_s"] == pytest.approx(-1.0)


def test_missing_backhaul_stalls():
    with pytest.raises(NoBackhaul):
        simulate(Allocation(1e6, 0.0, 1e9, 0.0), make_user())


def test_missing_compute_stalls():
    with pytest.raises(NoCompute):
        simulate(Allocation(1e6, 1e6, 0.0, 1.0), make_user())


def test_stalled_run_conforms_to_infinite_latency():
    report = conformance_check(Allocation(1e6, 1e6, 0.0, 1.0), make_user(), 1e-9)

    assert report.latency_match and report.storage_match


def test_zero_bandwidth_has_no_access_link():
    with pytest.raises(NoAccessLink):
        simulate(Allocation(0.0, 1e6, 1e9, 0.0), make_user())


def test_invalid_tolerance():
    with pytest.raises(InvalidInput):
        conformance_check(Allocation(1e6, 1e6, 1e9, 0.0), make_user(), 0.0)
