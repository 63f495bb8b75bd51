import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np
import ujson as json
from loguru import logger

from hub_orchestrator.errors import InvalidInput, OutputError
from hub_orchestrator.flow import optimal_split, required_storage, upload_latency
from hub_orchestrator.orchestrator import solve
from hub_orchestrator.provisioning import f_total_limit, latency_floor
from hub_orchestrator.scenario import generate_scenario
from hub_orchestrator.schemes import run_scheme
from hub_orchestrator.types import (
    EXPERIMENTS,
    SCHEMES,
    Allocation,
    Experiment,
    ScenarioConfig,
    SweepRow,
)

CSV_COLUMNS = (
    "experiment",
    "seed",
    "scheme",
    "sweep_var_name",
    "sweep_var_value",
    "latency_s",
    "storage_bits",
    "extra",
)

DMAX_VALUES_BITS = tuple(float(v) for v in np.geomspace(1e5, 1e7, 8))
ETA_COMPUTE_VALUES_CPS = tuple(float(v) for v in np.geomspace(0.2e9, 20e9, 7))
ETA_SPLIT_POINTS = 101
FTOTAL_BANDWIDTHS_HZ = (0.3e6, 0.5e6, 1e6, 2e6)
FTOTAL_COMPUTE_VALUES_CPS = tuple(float(v) for v in np.geomspace(1e9, 1e11, 9))
BACKHAUL_VALUES_BPS = tuple(float(v) for v in np.geomspace(0.1e6, 5e6, 8))
BACKHAUL_BANDWIDTHS_HZ = (0.3e6, 0.5e6, 1e6, 2e6)

Cell = Tuple[Experiment, ScenarioConfig, int, float]


def format_float(value: float) -> str:
    return f"{value:.9g}"


def _dmax_cell(config: ScenarioConfig, seed: int, d_max: float) -> List[SweepRow]:
    scenario = generate_scenario(replace(config, d_max_bits=d_max), seed)
    rows = []

    for scheme in SCHEMES:
        result = run_scheme(scenario, scheme, seed)
        rows.append(
            SweepRow(
                experiment="fig3_dmax",
                seed=seed,
                scheme=scheme,
                sweep_var_name="d_max_bits",
                sweep_var_value=d_max,
                latency_s=result.latency_s,
                storage_bits=math.fsum(result.per_user_storage_bits),
                extra={},
            )
        )

    return rows


def _eta_cell(config: ScenarioConfig, seed: int, compute: float) -> List[SweepRow]:
    """
    Latency and storage of one user over a split grid at fixed resources,
    plus the split picked by the scheduling table
    """
    user = generate_scenario(replace(config, n_users=1), seed).users[0]
    budgets = config.budgets
    bandwidth, backhaul = budgets.bandwidth_total_hz, budgets.backhaul_total_bps
    outcome = optimal_split(bandwidth, backhaul, compute, user)
    grid = set(np.linspace(0.0, 1.0, ETA_SPLIT_POINTS).tolist())
    splits = sorted(grid | {outcome.split})

    rows = []
    for split in splits:
        alloc = Allocation(bandwidth, backhaul, compute, split)
        rows.append(
            SweepRow(
                experiment="fig4_eta_curves",
                seed=seed,
                scheme="eta_grid",
                sweep_var_name="compute_total_cps",
                sweep_var_value=compute,
                latency_s=upload_latency(alloc, user),
                storage_bits=required_storage(alloc, user),
                extra={"split": split},
            )
        )

    rows.append(
        SweepRow(
            experiment="fig4_eta_curves",
            seed=seed,
            scheme="optimal_split",
            sweep_var_name="compute_total_cps",
            sweep_var_value=compute,
            latency_s=outcome.latency_s,
            storage_bits=outcome.storage_bits,
            extra={"split": outcome.split, "regime": float(outcome.regime)},
        )
    )

    return rows


def _ftotal_cell(config: ScenarioConfig, seed: int, bandwidth: float) -> List[SweepRow]:
    scenario = generate_scenario(config, seed)
    budgets = replace(scenario.budgets, bandwidth_total_hz=bandwidth)
    extra = {"bandwidth_total_hz": bandwidth}
    rows = []

    for compute in FTOTAL_COMPUTE_VALUES_CPS:
        plan = solve(scenario.users, replace(budgets, compute_total_cps=compute))
        rows.append(
            SweepRow(
                experiment="fig5_ftotal",
                seed=seed,
                scheme="proposed",
                sweep_var_name="compute_total_cps",
                sweep_var_value=compute,
                latency_s=plan.latency_s,
                storage_bits=plan.budget_usage.storage_bits,
                extra=extra,
            )
        )

    limit = f_total_limit(scenario.users, bandwidth, budgets.backhaul_total_bps)
    plan = solve(scenario.users, replace(budgets, compute_total_cps=limit))
    rows.append(
        SweepRow(
            experiment="fig5_ftotal",
            seed=seed,
            scheme="f_total_limit",
            sweep_var_name="compute_total_cps",
            sweep_var_value=limit,
            latency_s=plan.latency_s,
            storage_bits=plan.budget_usage.storage_bits,
            extra={
                **extra,
                "latency_floor_s": latency_floor(
                    scenario.users, bandwidth, budgets.backhaul_total_bps
                ),
            },
        )
    )

    return rows


def _backhaul_cell(
    config: ScenarioConfig, seed: int, bandwidth: float
) -> List[SweepRow]:
    scenario = generate_scenario(config, seed)
    rows = []

    for backhaul in BACKHAUL_VALUES_BPS:
        budgets = replace(
            scenario.budgets, bandwidth_total_hz=bandwidth, backhaul_total_bps=backhaul
        )
        plan = solve(scenario.users, budgets)
        rows.append(
            SweepRow(
                experiment="fig6_backhaul",
                seed=seed,
                scheme="proposed",
                sweep_var_name="backhaul_total_bps",
                sweep_var_value=backhaul,
                latency_s=plan.latency_s,
                storage_bits=plan.budget_usage.storage_bits,
                extra={"bandwidth_total_hz": bandwidth},
            )
        )

    return rows


CELL_RUNNERS = {
    "fig3_dmax": _dmax_cell,
    "fig4_eta_curves": _eta_cell,
    "fig5_ftotal": _ftotal_cell,
    "fig6_backhaul": _backhaul_cell,
}


def _run_cell(cell: Cell) -> List[SweepRow]:
    experiment, config, seed, point = cell
    return CELL_RUNNERS[experiment](config, seed, point)


def _cells(
    experiment: Experiment, config: ScenarioConfig, n_topologies: int
) -> List[Cell]:
    seeds = [config.seed + offset for offset in range(n_topologies)]

    if experiment == "fig3_dmax":
        return [(experiment, config, s, d) for d in DMAX_VALUES_BITS for s in seeds]

    if experiment == "fig4_eta_curves":
        # A single user: only the master seed matters
        return [(experiment, config, config.seed, f) for f in ETA_COMPUTE_VALUES_CPS]

    if experiment == "fig5_ftotal":
        return [(experiment, config, s, b) for b in FTOTAL_BANDWIDTHS_HZ for s in seeds]

    return [(experiment, config, s, b) for b in BACKHAUL_BANDWIDTHS_HZ for s in seeds]


def _extra_key(extra: Dict[str, float]) -> str:
    return json.dumps(extra, sort_keys=True)


def _average(
    rows: Iterable[SweepRow], master_seed: int, n_topologies: int
) -> List[SweepRow]:
    """
    Collapse per-topology rows into one mean row per sweep point and scheme
    """
    groups: Dict[Tuple[str, str, float, str], List[SweepRow]] = {}
    for row in rows:
        key = (
            row.scheme,
            row.sweep_var_name,
            row.sweep_var_value,
            _extra_key(row.extra),
        )
        groups.setdefault(key, []).append(row)

    averaged = []
    for members in groups.values():
        latencies = [member.latency_s for member in members]
        first = members[0]
        averaged.append(
            first._replace(
                seed=master_seed,
                latency_s=math.fsum(latencies) / len(latencies),
                storage_bits=math.fsum(m.storage_bits for m in members) / len(members),
                extra={
                    **first.extra,
                    "topologies": float(n_topologies),
                    "latency_min_s": min(latencies),
                    "latency_max_s": max(latencies),
                },
            )
        )

    return averaged


def sort_key(row: SweepRow):
    return (
        row.experiment,
        row.scheme,
        row.sweep_var_name,
        row.sweep_var_value,
        row.seed,
        _extra_key(row.extra),
    )


def run_sweep(
    experiment: Experiment,
    config: ScenarioConfig,
    n_topologies: int,
    workers: int = 1,
) -> List[SweepRow]:
    if experiment not in EXPERIMENTS:
        raise InvalidInput(f"Unknown experiment: {experiment}")

    if n_topologies < 1:
        raise InvalidInput(f"Invalid topology count: {n_topologies}")

    cells = _cells(experiment, config, n_topologies)
    logger.info(
        "Running {} with {} cells on {} worker(s)", experiment, len(cells), workers
    )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(_run_cell, cells))
    else:
        batches = [_run_cell(cell) for cell in cells]

    rows = [row for batch in batches for row in batch]

    if experiment in ("fig3_dmax", "fig6_backhaul"):
        rows = _average(rows, config.seed, n_topologies)

    return sorted(rows, key=sort_key)


def write_csv(rows: Iterable[SweepRow], output_path: Path):
    try:
        with output_path.open("w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(
                    [
                        row.experiment,
                        row.seed,
                        row.scheme,
                        row.sweep_var_name,
                        format_float(row.sweep_var_value),
                        format_float(row.latency_s),
                        format_float(row.storage_bits),
                        _extra_key(row.extra),
                    ]
                )
    except OSError as error:
        raise OutputError(f"Cannot write {output_path}: {error}") from error


def sweep(
    experiment: Experiment,
    config: ScenarioConfig,
    n_topologies: int,
    output_path: Path,
    workers: int = 1,
) -> List[SweepRow]:
    """
    Run one experiment and write its rows as CSV. The rows depend only on the
    config (master seed included), never on worker scheduling.
    """
    rows = run_sweep(experiment, config, n_topologies, workers)
    write_csv(rows, output_path)
    logger.info("Wrote {} rows to {}", len(rows), output_path)

    return rows
