import functools
import os
import sys
from dataclasses import replace
from pathlib import Path

import click
from loguru import logger

from hub_orchestrator.errors import (
    HubError,
    Infeasible,
    InvalidInput,
    ScenarioError,
    SolverFailure,
)
from hub_orchestrator.experiments import sweep
from hub_orchestrator.fluid import simulate as simulate_flow
from hub_orchestrator.oracle import DEFAULT_GRID_POINTS, brute_force_solve
from hub_orchestrator.orchestrator import solve as solve_plan
from hub_orchestrator.parsing import dumps, load_scenario
from hub_orchestrator.provisioning import recommend_compute
from hub_orchestrator.schemes import run_scheme
from hub_orchestrator.types import EXPERIMENTS, SCHEMES, ScenarioConfig
from hub_orchestrator.util import DEFAULT_TOL_REL

EXIT_CODES = ((Infeasible, 2), (InvalidInput, 3), (SolverFailure, 1))


def exit_code(error: HubError) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code

    return 1


def reports_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except HubError as error:
            logger.error("{}: {}", type(error).__name__, error)
            click.echo(f"Error: {error}", err=True)
            sys.exit(exit_code(error))

    return wrapper


def emit(value):
    sys.stdout.write(dumps(value) + "\n")


scenario_argument = click.argument(
    "scenario", envvar="SCENARIO", type=click.Path(path_type=Path)
)
tolerance_option = click.option(
    "--tol-rel",
    help="Relative bisection tolerance",
    envvar="TOL_REL",
    type=float,
    default=DEFAULT_TOL_REL,
)


@click.group()
def cli():
    pass


@click.command()
@scenario_argument
@tolerance_option
@reports_errors
def solve(scenario, tol_rel):
    users, budgets = load_scenario(scenario)[0]
    emit(solve_plan(users, budgets, tol_rel))


@click.command()
@scenario_argument
@click.option(
    "--user",
    help="Index of the user to simulate",
    envvar="USER_INDEX",
    type=int,
    default=0,
)
@click.option("--trace", help="Include every breakpoint", is_flag=True, default=False)
@tolerance_option
@reports_errors
def simulate(scenario, user, trace, tol_rel):
    users, budgets = load_scenario(scenario)[0]

    if not 0 <= user < len(users):
        raise ScenarioError(f"No user {user} among {len(users)}")

    plan = solve_plan(users, budgets, tol_rel)
    flow = simulate_flow(plan.allocations[user], users[user])

    if not trace:
        flow = replace(flow, events=())

    emit(flow)


@click.command()
@scenario_argument
@click.option(
    "--threshold",
    help="Latency threshold in seconds",
    envvar="THRESHOLD",
    type=float,
    required=True,
)
@reports_errors
def provision(scenario, threshold):
    users, budgets = load_scenario(scenario)[0]
    emit(
        recommend_compute(
            threshold, users, budgets.bandwidth_total_hz, budgets.backhaul_total_bps
        )
    )


@click.command()
@click.argument("name", type=click.Choice(EXPERIMENTS))
@click.option(
    "--topologies",
    help="Topologies averaged per point",
    envvar="TOPOLOGIES",
    type=int,
    default=50,
)
@click.option("--seed", help="Master seed", envvar="SEED", type=int, default=0)
@click.option(
    "--out",
    help="CSV file to write",
    envvar="OUTFILE",
    type=click.Path(path_type=Path),
    default="./results.csv",
)
@click.option(
    "--workers", help="Worker processes", envvar="WORKERS", type=int, default=1
)
@click.option(
    "--scenario",
    help="Scenario file whose config replaces the defaults",
    envvar="SCENARIO",
    type=click.Path(path_type=Path),
    default=None,
)
@reports_errors
def experiment(name, topologies, seed, out, workers, scenario):
    config = load_scenario(scenario)[1] if scenario else ScenarioConfig()
    sweep(name, replace(config, seed=seed), topologies, out, workers)


@click.command()
@scenario_argument
@click.option(
    "--grid-points",
    help="Grid points per resource share",
    envvar="GRID_POINTS",
    type=int,
    default=DEFAULT_GRID_POINTS,
)
@reports_errors
def oracle(scenario, grid_points):
    users, budgets = load_scenario(scenario)[0]
    emit(brute_force_solve(users, budgets, grid_points))


@click.command()
@scenario_argument
@tolerance_option
@reports_errors
def compare(scenario, tol_rel):
    loaded, config = load_scenario(scenario)
    emit([run_scheme(loaded, scheme, config.seed, tol_rel) for scheme in SCHEMES])


cli.add_command(solve)
cli.add_command(simulate)
cli.add_command(provision)
cli.add_command(experiment)
cli.add_command(oracle)
cli.add_command(compare)
logger.remove()
logger.add(
    sys.stderr,
    serialize=(not os.environ.get("DEV_MODE")),
    level=os.environ.get("LOG_LEVEL", "INFO"),
)
