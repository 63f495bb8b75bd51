import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hub_orchestrator.errors import InvalidInput, NoAccessLink
from hub_orchestrator.flow import (
    latency_branch,
    latency_grid,
    optimal_split,
    required_storage,
    sequential_latency,
    sequential_split,
    split_latency_grid,
    upload_latency,
    zero_storage_equivalent,
)
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
bandwidths = st.floats(1e3, 1e7)
backhauls = st.floats(1.0, 1e8)
computes = st.one_of(st.just(0.0), st.floats(1e3, 1e12))


@pytest.mark.parametrize(
    "alloc, branch, latency, storage",
    [
        (Allocation(1e6, 2e6, 1e9, 0.5), "access_bound", 1.0, 0.0),
        (Allocation(1e6, 2e5, 0.0, 0.0), "backhaul_bound_compute_backlog", 5.0, 8e5),
        (Allocation(1e6, 1e5, 1e8, 1.0), "compute_bound", 10.0, 9e5),
        (Allocation(1e6, 5e4, 6e8, 1.0), "backhaul_bound_compute_backlog", 2.0, 4.1e5),
    ],
)
def test_piecewise_examples(alloc, branch, latency, storage):
    user = make_user()

    assert latency_branch(alloc, user) == branch
    assert upload_latency(alloc, user) == pytest.approx(latency, rel=1e-12)
    assert required_storage(alloc, user) == pytest.approx(storage, rel=1e-12)


def test_zero_bandwidth_has_no_access_link():
    with pytest.raises(NoAccessLink):
        upload_latency(Allocation(0.0, 1e6, 1e9, 0.5), make_user())

    with pytest.raises(NoAccessLink):
        optimal_split(0.0, 1e6, 1e9, make_user())


@pytest.mark.parametrize(
    "backhaul, compute, split, latency, storage, regime",
    [
        (2e6, 1e9, 0.0, 1.0, 0.0, 1),
        (5e5, 1e8, 0.169491525, 1.694915254, 4.1e5, 2),
        (5e5, 1e9, 5 / 9, 1.0, 0.0, 3),
        (5e4, 6e8, 1.0, 2.0, 4.1e5, 5),
        (5e4, 2e9, 1.0, 2.0, 5e4, 6),
    ],
)
def test_scheduling_table_rows(backhaul, compute, split, latency, storage, regime):
    outcome = optimal_split(1e6, backhaul, compute, make_user())

    assert outcome.regime == regime
    assert outcome.split == pytest.approx(split, rel=1e-8)
    assert outcome.latency_s == pytest.approx(latency, rel=1e-8)
    assert outcome.storage_bits == pytest.approx(storage, rel=1e-8, abs=1e-9)


def test_fourth_row_balances_compute_and_backhaul():
    # access 1e6 >= R/zeta = 5e5 and compute 1e5 bits/s < R/zeta
    outcome = optimal_split(1e6, 5e4, 1e8, make_user())

    assert outcome.regime == 4
    assert outcome.split == pytest.approx(1e8 / (0.9e8 + 5e7))
    assert outcome.latency_s == pytest.approx(1e9 / (0.9e8 + 5e7))


@settings(max_examples=500)
@given(users, bandwidths, st.floats(1e8, 1e13))
def test_split_at_compressed_backhaul_stays_in_range(user, bandwidth, compute):
    backhaul = user.output_ratio * bandwidth * user.spectral_efficiency
    outcome = optimal_split(bandwidth, backhaul, compute, user)

    assert 0.0 <= outcome.split <= 1.0
    assert Allocation(bandwidth, backhaul, compute, outcome.split).split == outcome.split


def test_negative_rates_are_invalid_input():
    with pytest.raises(InvalidInput):
        optimal_split(1e6, -1.0, 1e9, make_user())

    with pytest.raises(InvalidInput):
        optimal_split(1e6, 1e6, -1e9, make_user())


@settings(max_examples=500)
@given(users, bandwidths, backhauls, computes)
def test_table_split_is_optimal(user, bandwidth, backhaul, compute):
    outcome = optimal_split(bandwidth, backhaul, compute, user)
    chosen = Allocation(bandwidth, backhaul, compute, outcome.split)

    assert upload_latency(chosen, user) == pytest.approx(outcome.latency_s, rel=1e-9)

    for split in np.linspace(0.0, 1.0, 51):
        alloc = Allocation(bandwidth, backhaul, compute, float(split))
        assert outcome.latency_s <= upload_latency(alloc, user) * (1 + 1e-9)
        assert outcome.storage_bits <= (
            required_storage(alloc, user) + 1e-9 * user.data_bits
        )


@settings(max_examples=500)
@given(users, bandwidths, backhauls, computes)
def test_optimal_latency_respects_bounds(user, bandwidth, backhaul, compute):
    outcome = optimal_split(bandwidth, backhaul, compute, user)
    data, zeta = user.data_bits, user.output_ratio
    access = bandwidth * user.spectral_efficiency
    bounds = [
        data / access,
        zeta * data / backhaul,
        data / (compute / user.intensity_cycles_per_bit * (1 - zeta) + backhaul),
    ]

    assert outcome.latency_s >= max(bounds[:2]) * (1 - 1e-12)
    assert outcome.latency_s >= min(bounds) * (1 - 1e-12)
    assert outcome.storage_bits >= 0


@pytest.mark.parametrize("backhaul, compute", [(2e6, 1e9), (5e5, 1e9)])
def test_rows_without_storage(backhaul, compute):
    assert optimal_split(1e6, backhaul, compute, make_user()).storage_bits == 0.0


@settings(max_examples=300)
@given(users, bandwidths, backhauls, computes)
def test_latency_monotone_within_branch(user, bandwidth, backhaul, compute):
    splits = np.linspace(0.0, 1.0, 101)
    allocs = [Allocation(bandwidth, backhaul, compute, float(s)) for s in splits]
    branches = [latency_branch(alloc, user) for alloc in allocs]
    latencies = [upload_latency(alloc, user) for alloc in allocs]

    for index in range(len(splits) - 1):
        if branches[index] != branches[index + 1]:
            continue
        earlier, later = latencies[index], latencies[index + 1]
        if branches[index] == "compute_bound":
            assert later >= earlier * (1 - 1e-12)
        elif branches[index] == "backhaul_bound":
            assert later <= earlier * (1 + 1e-12)
        elif branches[index] == "access_bound":
            assert later == earlier


@settings(max_examples=500)
@given(users, bandwidths, backhauls, computes)
def test_zero_storage_equivalent(user, bandwidth, backhaul, compute):
    original = optimal_split(bandwidth, backhaul, compute, user)
    shrunk = zero_storage_equivalent(bandwidth, backhaul, compute, user)
    outcome = optimal_split(
        shrunk.bandwidth_hz, shrunk.backhaul_bps, shrunk.compute_cps, user
    )

    assert shrunk.bandwidth_hz <= bandwidth * (1 + 1e-9)
    assert shrunk.backhaul_bps <= backhaul * (1 + 1e-9)
    assert shrunk.compute_cps <= compute * (1 + 1e-9)
    assert outcome.latency_s == pytest.approx(original.latency_s, rel=1e-9)
    assert outcome.storage_bits <= 1e-8 * user.data_bits


def test_sequential_latency_adds_stages():
    user = make_user()
    alloc = Allocation(1e6, 1e5, 1e9, 1.0)

    # 1 s receiving, 1 s computing, 1 s forwarding the compressed result
    assert sequential_latency(alloc, user) == pytest.approx(3.0)
    assert sequential_split(1e6, 1e5, 1e9, user) == (1.0, pytest.approx(3.0))


def test_sequential_without_compute_forwards_raw_data():
    split, latency = sequential_split(1e6, 1e5, 0.0, make_user())

    assert split == 0.0
    assert latency == pytest.approx(11.0)


@settings(max_examples=200)
@given(users, bandwidths, backhauls, computes)
def test_sequential_never_beats_pipeline(user, bandwidth, backhaul, compute):
    _, latency = sequential_split(bandwidth, backhaul, compute, user)

    assert latency >= optimal_split(bandwidth, backhaul, compute, user).latency_s * (
        1 - 1e-12
    )


@settings(max_examples=200)
@given(users, bandwidths, backhauls, computes, st.floats(0.0, 1.0))
def test_grids_agree_with_scalar_model(user, bandwidth, backhaul, compute, split):
    access = np.array([bandwidth * user.spectral_efficiency])
    rate = np.array([compute / user.intensity_cycles_per_bit])
    alloc = Allocation(bandwidth, backhaul, compute, split)

    vector = latency_grid(access, np.array([backhaul]), rate, np.array(split), user)
    table = split_latency_grid(access, np.array([backhaul]), rate, user)

    assert vector[0] == pytest.approx(upload_latency(alloc, user), rel=1e-9)
    assert table[0] == pytest.approx(
        optimal_split(bandwidth, backhaul, compute, user).latency_s, rel=1e-9
    )


def test_grids_report_unreachable_points():
    user = make_user()
    zero = np.zeros(1)

    assert np.isinf(latency_grid(zero, np.ones(1), np.ones(1), np.zeros(1), user)[0])
    assert np.isinf(split_latency_grid(zero, np.ones(1), np.ones(1), user)[0])
