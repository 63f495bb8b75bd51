from hub_orchestrator.channel import (
    ergodic_spectral_efficiency,
    large_scale_gain,
    link_geometry,
    los_probability,
    mean_snr,
    rayleigh_spectral_efficiency,
)
from hub_orchestrator.experiments import run_sweep, sweep
from hub_orchestrator.flow import (
    latency_branch,
    optimal_split,
    required_storage,
    sequential_latency,
    sequential_split,
    upload_latency,
    zero_storage_equivalent,
)
from hub_orchestrator.fluid import conformance_check, simulate
from hub_orchestrator.oracle import brute_force_solve
from hub_orchestrator.orchestrator import feasible_at, latency_curve, solve
from hub_orchestrator.parsing import load_scenario
from hub_orchestrator.plans import plan_violations
from hub_orchestrator.provisioning import (
    closed_form_plan,
    f_total_limit,
    latency_floor,
    recommend_compute,
)
from hub_orchestrator.scenario import generate_scenario
from hub_orchestrator.schemes import run_scheme
