import math
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from hub_orchestrator.errors import EmptyScenario, Infeasible, InvalidInput, TooLarge
from hub_orchestrator.flow import (
    latency_grid,
    optimal_split,
    required_storage,
    split_latency_grid,
    upload_latency,
)
from hub_orchestrator.types import (
    Allocation,
    Budgets,
    BudgetUsage,
    OrchestrationPlan,
    UserProfile,
)
from hub_orchestrator.util import PLAN_TOL_REL, within_budget

MIN_GRID_POINTS = 50
DEFAULT_GRID_POINTS = 50
DEFAULT_SPLIT_POINTS = 129
REFINE_ROUNDS = 3
REFINE_POINTS = 17
ZOOM_ROUNDS = 4
MAX_ZOOM_ROUNDS = 64
# Cells kept on each side of the incumbent when zooming in
ZOOM_WINDOW = 2

Shares = Tuple[float, float, float]


def _rates(
    user: UserProfile, budgets: Budgets, shares: Sequence[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bandwidth, backhaul, compute = shares
    return (
        bandwidth * budgets.bandwidth_total_hz * user.spectral_efficiency,
        backhaul * budgets.backhaul_total_bps,
        compute * budgets.compute_total_cps / user.intensity_cycles_per_bit,
    )


def _user_shares(
    users: Sequence[UserProfile], first: Sequence[np.ndarray]
) -> List[Sequence[np.ndarray]]:
    if len(users) == 1:
        return [first]

    return [first, [1 - share for share in first]]


def _table_objective(
    users: Sequence[UserProfile], budgets: Budgets, first: Sequence[np.ndarray]
) -> np.ndarray:
    return np.maximum.reduce(
        [
            split_latency_grid(*_rates(user, budgets, shares), user)
            for user, shares in zip(users, _user_shares(users, first))
        ]
    )


def _split_search(
    user: UserProfile,
    budgets: Budgets,
    shares: Sequence[np.ndarray],
    splits: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    access, backhaul, compute = _rates(user, budgets, shares)
    best = np.full(np.broadcast(access, backhaul, compute).shape, np.inf)
    best_split = np.zeros_like(best)

    def consider(split):
        nonlocal best, best_split
        latency = latency_grid(access, backhaul, compute, split, user)
        better = latency < best
        best = np.where(better, latency, best)
        best_split = np.where(better, split, best_split)

    for split in splits:
        consider(split)

    # Local refinement around each point's incumbent split
    width = 1 / (len(splits) - 1)
    for _ in range(REFINE_ROUNDS):
        center = best_split.copy()
        for offset in np.linspace(-width, width, REFINE_POINTS):
            consider(np.clip(center + offset, 0.0, 1.0))
        width *= 2 / (REFINE_POINTS - 1)

    return best, best_split


def _grid(bounds: Sequence[Tuple[float, float]], points: int) -> List[np.ndarray]:
    axes = [np.linspace(low, high, points) for low, high in bounds]
    return list(np.meshgrid(*axes, indexing="ij"))


def _on_edge(
    bounds: Sequence[Tuple[float, float]], index: Tuple[int, ...], points: int
) -> bool:
    for (low, high), position in zip(bounds, index):
        if position == 0 and low > 0.0:
            return True
        if position == points - 1 and high < 1.0:
            return True

    return False


def _zoom(
    bounds: Sequence[Tuple[float, float]],
    index: Tuple[int, ...],
    points: int,
    shrink: bool,
) -> List[Tuple[float, float]]:
    """
    Window around the grid point at `index`: ZOOM_WINDOW cells on each side
    when shrinking, the current width re-centered otherwise
    """
    zoomed = []
    for (low, high), position in zip(bounds, index):
        step = (high - low) / (points - 1)
        center = low + position * step
        half = ZOOM_WINDOW * step if shrink else (high - low) / 2
        zoomed.append((max(center - half, 0.0), min(center + half, 1.0)))

    return zoomed


def _argmin(objective: np.ndarray) -> Tuple[int, ...]:
    index = np.unravel_index(np.argmin(objective), objective.shape)
    return tuple(int(i) for i in index)


def _at(grid: Sequence[np.ndarray], index: Tuple[int, ...]) -> Shares:
    return (float(grid[0][index]), float(grid[1][index]), float(grid[2][index]))


def _allocations(
    users: Sequence[UserProfile], budgets: Budgets, first: Shares
) -> List[Tuple[float, float, float]]:
    per_user = [first] if len(users) == 1 else [first, tuple(1 - s for s in first)]
    return [
        (
            share[0] * budgets.bandwidth_total_hz,
            share[1] * budgets.backhaul_total_bps,
            share[2] * budgets.compute_total_cps,
        )
        for share in per_user
    ]


def _plan(
    users: Sequence[UserProfile],
    budgets: Budgets,
    resources: Sequence[Tuple[float, float, float]],
    splits: Sequence[float],
    diagnostics,
) -> OrchestrationPlan:
    allocations = [
        Allocation(bandwidth, backhaul, compute, split)
        for (bandwidth, backhaul, compute), split in zip(resources, splits)
    ]
    latencies = [upload_latency(alloc, user) for alloc, user in zip(allocations, users)]
    storages = [
        required_storage(alloc, user) for alloc, user in zip(allocations, users)
    ]
    usage = BudgetUsage(
        bandwidth_hz=math.fsum(a.bandwidth_hz for a in allocations),
        backhaul_bps=math.fsum(a.backhaul_bps for a in allocations),
        compute_cps=math.fsum(a.compute_cps for a in allocations),
        storage_bits=math.fsum(storages),
    )

    return OrchestrationPlan(
        latency_s=max(latencies),
        allocations=allocations,
        per_user_latency_s=latencies,
        per_user_storage_bits=storages,
        budget_usage=usage,
        solver="brute_force",
        storage_feasible=within_budget(
            usage.storage_bits, budgets.storage_total_bits, PLAN_TOL_REL
        ),
        diagnostics=diagnostics,
    )


def brute_force_solve(
    users: Sequence[UserProfile],
    budgets: Budgets,
    grid_points: int = DEFAULT_GRID_POINTS,
    split_points: int = DEFAULT_SPLIT_POINTS,
) -> OrchestrationPlan:
    """
    Exhaustive search over the resource shares of at most two users.

    The first user's shares of bandwidth, backhaul and compute span a 3-D grid
    and the second user takes the rest. The split-optimal objective is refined
    by repeated zooming; the raw objective, with splits searched on a uniform
    grid instead of taken from the scheduling table, is searched on the coarse
    grid and on the final zoomed grid. The better of the two is returned.
    Storage budgets are not enforced.
    """
    if not users:
        raise EmptyScenario("No users to search")

    if len(users) > 2:
        raise TooLarge(f"Brute force handles at most 2 users, got {len(users)}")

    if grid_points < MIN_GRID_POINTS or split_points < 2:
        raise InvalidInput(
            f"Grid too coarse: {grid_points} share points, {split_points} split points"
        )

    if budgets.bandwidth_total_hz <= 0 or budgets.backhaul_total_bps <= 0:
        raise Infeasible(
            f"No finite latency with B_total={budgets.bandwidth_total_hz}, R_total={budgets.backhaul_total_bps}"
        )

    splits = np.linspace(0.0, 1.0, split_points)

    if len(users) == 1:
        bounds = [(1.0, 1.0)] * 3
        points = 1
    else:
        bounds = [(0.0, 1.0)] * 3
        points = grid_points

    grid = _grid(bounds, points)
    raw_candidates = [grid]
    table_latency, table_shares = math.inf, _at(grid, (0, 0, 0))
    shrinks = rounds = 0

    # Slide the window while the incumbent sits on its edge, shrink it otherwise
    while True:
        table = _table_objective(users, budgets, grid)
        index = _argmin(table)
        if table[index] < table_latency:
            table_latency, table_shares = float(table[index]), _at(grid, index)

        if points == 1 or shrinks >= ZOOM_ROUNDS or rounds >= MAX_ZOOM_ROUNDS:
            break

        shrink = not _on_edge(bounds, index, points)
        shrinks += shrink
        rounds += 1
        bounds = _zoom(bounds, index, points, shrink)
        grid = _grid(bounds, points)

    raw_candidates.append(grid)

    raw_best = math.inf
    raw_shares: Shares = table_shares
    raw_splits: List[float] = []

    for grid in raw_candidates:
        searched = [
            _split_search(user, budgets, shares, splits)
            for user, shares in zip(users, _user_shares(users, grid))
        ]
        objective = np.maximum.reduce([latency for latency, _ in searched])
        index = _argmin(objective)
        if objective[index] < raw_best:
            raw_best = float(objective[index])
            raw_shares = _at(grid, index)
            raw_splits = [float(best_split[index]) for _, best_split in searched]

    diagnostics = {
        "table_latency_s": table_latency,
        "eta_grid_latency_s": raw_best,
        "grid_points": float(grid_points),
    }
    logger.debug(
        "Brute force: table objective {:.9g}s, split-grid objective {:.9g}s",
        table_latency,
        raw_best,
    )

    if table_latency <= raw_best:
        resources = _allocations(users, budgets, table_shares)
        table_splits = [
            optimal_split(bandwidth, backhaul, compute, user).split
            for (bandwidth, backhaul, compute), user in zip(resources, users)
        ]
        return _plan(users, budgets, resources, table_splits, diagnostics)

    return _plan(
        users,
        budgets,
        _allocations(users, budgets, raw_shares),
        raw_splits,
        diagnostics,
    )
