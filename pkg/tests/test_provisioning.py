import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hub_orchestrator.errors import (
    ComputeBelowThreshold,
    EmptyScenario,
    InvalidLatency,
)
from hub_orchestrator.orchestrator import solve
from hub_orchestrator.plans import plan_violations
from hub_orchestrator.provisioning import (
    SUFFICIENT_NOTE,
    closed_form_plan,
    f_total_limit,
    latency_floor,
    recommend_compute,
)
from hub_orchestrator.scenario import generate_scenario
from hub_orchestrator.types import Budgets, ScenarioConfig, UserProfile


def make_user(data=1e6, rho=1000.0, zeta=0.1, r=1.0) -> UserProfile:
    return UserProfile(
        data_bits=data,
        intensity_cycles_per_bit=rho,
        output_ratio=zeta,
        spectral_efficiency=r,
    )


user_lists = st.lists(
    st.builds(
        make_user,
        data=st.floats(1e5, 1e8),
        rho=st.floats(100.0, 5000.0),
        zeta=st.floats(0.01, 0.5),
        r=st.floats(0.5, 20.0),
    ),
    min_size=1,
    max_size=6,
)
link_budgets = st.tuples(st.floats(1e4, 1e7), st.floats(1e4, 1e7))


def test_reference_user_limits():
    users = [make_user()]

    assert f_total_limit(users, 1e6, 1e6) == pytest.approx(1e9)
    assert latency_floor(users, 1e6, 1e6) == pytest.approx(1.0)


def test_bandwidth_bound_limit_collapses():
    user = make_user(data=3e6, rho=1500.0, r=2.5)

    assert f_total_limit([user], 1e5, 1e9) == pytest.approx(1500.0 * 1e5 * 2.5)


@given(user_lists, link_budgets, st.floats(0.1, 100.0))
def test_limit_ignores_uniform_data_scaling(users, links, factor):
    scaled = [
        make_user(
            u.data_bits * factor,
            u.intensity_cycles_per_bit,
            u.output_ratio,
            u.spectral_efficiency,
        )
        for u in users
    ]

    assert f_total_limit(scaled, *links) == pytest.approx(
        f_total_limit(users, *links), rel=1e-9
    )


@given(user_lists, link_budgets)
def test_floor_is_homogeneous(users, links):
    bandwidth, backhaul = links

    assert latency_floor(users, 2 * bandwidth, 2 * backhaul) == pytest.approx(
        latency_floor(users, bandwidth, backhaul) / 2, rel=1e-12
    )


def test_no_users():
    with pytest.raises(EmptyScenario):
        f_total_limit([], 1e6, 1e6)

    with pytest.raises(EmptyScenario):
        latency_floor([], 1e6, 1e6)


def test_closed_form_reference_plan():
    plan = closed_form_plan([make_user()], Budgets(1e6, 1e6, 1e9))
    alloc = plan.allocations[0]

    assert plan.solver == "closed_form"
    assert plan.latency_s == pytest.approx(1.0)
    assert alloc.bandwidth_hz == pytest.approx(1e6)
    assert alloc.backhaul_bps == pytest.approx(1e5)
    assert alloc.compute_cps == pytest.approx(1e9)
    assert plan.per_user_storage_bits == [pytest.approx(0.0, abs=1e-6)]
    assert plan.diagnostics["f_total_limit_cps"] == pytest.approx(1e9)


def test_closed_form_needs_enough_compute():
    with pytest.raises(ComputeBelowThreshold):
        closed_form_plan([make_user()], Budgets(1e6, 1e6, 0.5e9))


def test_closed_form_treats_identical_users_alike():
    users = [make_user(data=2e6, rho=3000.0, zeta=0.05, r=3.0)] * 4
    limit = f_total_limit(users, 0.5e6, 0.5e6)
    plan = closed_form_plan(users, Budgets(0.5e6, 0.5e6, limit))

    assert len({alloc for alloc in plan.allocations}) == 1


@settings(max_examples=300, deadline=None)
@given(user_lists, link_budgets)
def test_closed_form_matches_solver(users, links):
    limit = f_total_limit(users, *links)
    budgets = Budgets(*links, compute_total_cps=2 * limit)
    plan = closed_form_plan(users, budgets)

    assert plan_violations(plan, users, budgets) == []
    assert plan.latency_s == pytest.approx(solve(users, budgets).latency_s, rel=1e-6)
    assert plan.latency_s == latency_floor(users, *links)


def check_plentiful_compute(users, links):
    budgets = Budgets(*links, compute_total_cps=2 * f_total_limit(users, *links))

    for plan in (closed_form_plan(users, budgets), solve(users, budgets)):
        assert plan_violations(plan, users, budgets) == []
        assert all(0.0 <= alloc.split <= 1.0 for alloc in plan.allocations)
        assert plan.latency_s == pytest.approx(latency_floor(users, *links), rel=1e-6)


def test_backhaul_bound_split_stays_in_range():
    users = [
        make_user(data=8.03e7, rho=4452.0, zeta=0.4539, r=18.13),
        make_user(data=9.85e6, rho=1944.0, zeta=0.2336, r=17.89),
        make_user(data=4.20e7, rho=1398.0, zeta=0.0197, r=6.13),
    ]

    check_plentiful_compute(users, (7.81e6, 2.115e5))


@pytest.mark.parametrize("seed", [59, 97, 153])
def test_reference_topologies_with_plentiful_compute(seed):
    scenario = generate_scenario(ScenarioConfig(), seed)
    budgets = scenario.budgets

    check_plentiful_compute(
        scenario.users, (budgets.bandwidth_total_hz, budgets.backhaul_total_bps)
    )


@pytest.mark.slow
def test_many_reference_topologies_with_plentiful_compute():
    config = ScenarioConfig(mc_samples=200)

    for seed in range(200):
        scenario = generate_scenario(config, seed)
        budgets = scenario.budgets
        check_plentiful_compute(
            scenario.users, (budgets.bandwidth_total_hz, budgets.backhaul_total_bps)
        )


@settings(max_examples=50, deadline=None)
@given(user_lists, link_budgets, st.floats(1.0, 100.0))
def test_latency_saturates_beyond_limit(users, links, factor):
    limit = f_total_limit(users, *links)
    floor = latency_floor(users, *links)
    plan = solve(users, Budgets(*links, compute_total_cps=limit * factor))

    assert plan.latency_s == pytest.approx(floor, rel=1e-6)


def test_limit_is_sufficient_not_necessary():
    # Backhaul can carry the raw stream, so less compute already reaches the floor
    users = [make_user()]
    limit = f_total_limit(users, 1e6, 1e6)
    plan = solve(users, Budgets(1e6, 1e6, 0.9 * limit))

    assert plan.latency_s == pytest.approx(latency_floor(users, 1e6, 1e6), rel=1e-12)


def test_recommendations():
    users = [make_user()]
    floor = latency_floor(users, 1e6, 1e6)

    impossible = recommend_compute(0.5 * floor, users, 1e6, 1e6)
    assert impossible.verdict == "ImpossibleAtAnyCompute"
    assert impossible.recommended_compute_cps is None

    sufficient = recommend_compute(2 * floor, users, 1e6, 1e6)
    assert sufficient.verdict == "Sufficient"
    assert sufficient.recommended_compute_cps == pytest.approx(1e9)
    assert sufficient.achieved_latency_s == floor
    assert sufficient.note == SUFFICIENT_NOTE

    assert recommend_compute(floor, users, 1e6, 1e6).verdict == "Sufficient"


@pytest.mark.parametrize("threshold", [0.0, -2.0])
def test_invalid_threshold(threshold):
    with pytest.raises(InvalidLatency):
        recommend_compute(threshold, [make_user()], 1e6, 1e6)


@settings(max_examples=50, deadline=None)
@given(user_lists, link_budgets, st.floats(1.0, 10.0))
def test_recommended_compute_meets_threshold(users, links, slack):
    threshold = latency_floor(users, *links) * slack
    advice = recommend_compute(threshold, users, *links)
    budgets = Budgets(*links, compute_total_cps=advice.recommended_compute_cps)
    plan = solve(users, budgets)

    assert plan.latency_s <= threshold * (1 + 1e-9)
