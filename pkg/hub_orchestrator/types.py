import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, NamedTuple, Optional, Tuple, TypedDict

from hub_orchestrator.errors import ScenarioError
from hub_orchestrator.util import (
    DEFAULT_A,
    DEFAULT_B,
    DEFAULT_BACKHAUL_TOTAL_BPS,
    DEFAULT_BANDWIDTH_TOTAL_HZ,
    DEFAULT_CARRIER_HZ,
    DEFAULT_COMPUTE_TOTAL_CPS,
    DEFAULT_D_MAX_BITS,
    DEFAULT_DISC_RADIUS_M,
    DEFAULT_ETA_LOS_DB,
    DEFAULT_ETA_NLOS_DB,
    DEFAULT_LIGHT_SPEED,
    DEFAULT_MC_SAMPLES,
    DEFAULT_N_USERS,
    DEFAULT_NOISE_POWER_DBM,
    DEFAULT_RHO_RANGE,
    DEFAULT_TX_POWER_W,
    DEFAULT_UAV_POSITION,
    DEFAULT_ZETA_RANGE,
    dbm_to_watts,
)

Scheme = Literal[
    "proposed", "no_mec", "sequential_opt", "proposed_equal", "sequential_equal"
]
SCHEMES: Tuple[Scheme, ...] = (
    "proposed",
    "no_mec",
    "sequential_opt",
    "proposed_equal",
    "sequential_equal",
)

Experiment = Literal["fig3_dmax", "fig4_eta_curves", "fig5_ftotal", "fig6_backhaul"]
EXPERIMENTS: Tuple[Experiment, ...] = (
    "fig3_dmax",
    "fig4_eta_curves",
    "fig5_ftotal",
    "fig6_backhaul",
)

Verdict = Literal["ImpossibleAtAnyCompute", "Sufficient"]

ChannelMethod = Literal["monte_carlo", "closed_form"]

# Guard families of the piecewise latency expression
LatencyBranch = Literal[
    "backhaul_bound_compute_backlog",
    "compute_bound_upload_backlog",
    "compute_bound",
    "backhaul_bound",
    "access_bound",
]


def _require(condition: bool, message: str):
    if not condition:
        raise ScenarioError(message)


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        _require(self.z >= 0, f"Position below ground: z={self.z}")


@dataclass(frozen=True)
class ChannelParams:
    eta_los: float = DEFAULT_ETA_LOS_DB
    eta_nlos: float = DEFAULT_ETA_NLOS_DB
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    carrier_hz: float = DEFAULT_CARRIER_HZ
    light_speed: float = DEFAULT_LIGHT_SPEED
    tx_power_w: float = DEFAULT_TX_POWER_W
    noise_power_w: float = dbm_to_watts(DEFAULT_NOISE_POWER_DBM)

    def __post_init__(self):
        _require(self.carrier_hz > 0, f"Invalid carrier: {self.carrier_hz}")
        _require(self.light_speed > 0, f"Invalid light speed: {self.light_speed}")
        _require(self.tx_power_w >= 0, f"Invalid transmit power: {self.tx_power_w}")
        _require(self.noise_power_w > 0, f"Invalid noise power: {self.noise_power_w}")
        _require(self.a > 0 and self.b > 0, f"Invalid sigmoid: a={self.a}, b={self.b}")


@dataclass(frozen=True)
class LinkGeometry:
    distance_m: float
    elevation_deg: float

    def __post_init__(self):
        _require(self.distance_m > 0, f"Invalid link distance: {self.distance_m}")
        _require(
            0 <= self.elevation_deg <= 90,
            f"Elevation out of range: {self.elevation_deg}",
        )


@dataclass(frozen=True)
class UserProfile:
    data_bits: float
    intensity_cycles_per_bit: float
    output_ratio: float
    spectral_efficiency: float
    position: Optional[Position3D] = None

    def __post_init__(self):
        _require(self.data_bits > 0, f"Invalid data size: {self.data_bits}")
        _require(
            self.intensity_cycles_per_bit > 0,
            f"Invalid compute intensity: {self.intensity_cycles_per_bit}",
        )
        _require(
            0 < self.output_ratio < 1, f"Output ratio not in (0, 1): {self.output_ratio}"
        )
        _require(
            self.spectral_efficiency > 0,
            f"Unreachable user (spectral efficiency {self.spectral_efficiency})",
        )

    def __str__(self) -> str:
        return f"UserProfile(D={self.data_bits:.3g}, rho={self.intensity_cycles_per_bit:.4g}, zeta={self.output_ratio:.3g}, r={self.spectral_efficiency:.4g})"


@dataclass(frozen=True)
class Allocation:
    bandwidth_hz: float
    backhaul_bps: float
    compute_cps: float
    split: float = 0.0

    def __post_init__(self):
        _require(
            self.bandwidth_hz >= 0 and self.backhaul_bps >= 0 and self.compute_cps >= 0,
            f"Negative rate in {self}",
        )
        _require(0 <= self.split <= 1, f"Split not in [0, 1]: {self.split}")


@dataclass(frozen=True)
class SplitOutcome:
    split: float
    latency_s: float
    storage_bits: float
    # Row of the optimal-scheduling table (1..6)
    regime: int


@dataclass(frozen=True)
class FlowEvent:
    time_s: float
    queue_compute_bits: float
    queue_upload_bits: float
    active_rate_labels: Tuple[str, ...]


@dataclass(frozen=True)
class FlowTrace:
    completion_s: float
    peak_storage_bits: float
    events: Tuple[FlowEvent, ...]
    delivered_bits: float
    peak_time_s: float


@dataclass(frozen=True)
class ConformanceReport:
    latency_match: bool
    storage_match: bool
    deltas: Dict[str, float]


@dataclass(frozen=True)
class Budgets:
    bandwidth_total_hz: float = DEFAULT_BANDWIDTH_TOTAL_HZ
    backhaul_total_bps: float = DEFAULT_BACKHAUL_TOTAL_BPS
    compute_total_cps: float = DEFAULT_COMPUTE_TOTAL_CPS
    storage_total_bits: float = math.inf

    def __post_init__(self):
        _require(
            min(
                self.bandwidth_total_hz,
                self.backhaul_total_bps,
                self.compute_total_cps,
                self.storage_total_bits,
            )
            >= 0,
            f"Negative budget in {self}",
        )


@dataclass(frozen=True)
class BudgetUsage:
    bandwidth_hz: float
    backhaul_bps: float
    compute_cps: float
    storage_bits: float


@dataclass(frozen=True)
class OrchestrationPlan:
    latency_s: float
    allocations: List[Allocation]
    per_user_latency_s: List[float]
    per_user_storage_bits: List[float]
    budget_usage: BudgetUsage
    solver: str
    storage_feasible: bool = True
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def __str__(self) -> str:
        return f"OrchestrationPlan(latency={self.latency_s:.6g}s, users={len(self.allocations)}, solver={self.solver})"


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: Optional[List[float]] = None


@dataclass(frozen=True)
class ProvisioningAdvice:
    verdict: Verdict
    threshold_s: float
    latency_floor_s: float
    recommended_compute_cps: Optional[float] = None
    achieved_latency_s: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    n_users: int = DEFAULT_N_USERS
    d_max_bits: float = DEFAULT_D_MAX_BITS
    rho_range: Tuple[float, float] = DEFAULT_RHO_RANGE
    zeta_range: Tuple[float, float] = DEFAULT_ZETA_RANGE
    uav_position: Position3D = Position3D(*DEFAULT_UAV_POSITION)
    user_disc_radius_m: float = DEFAULT_DISC_RADIUS_M
    channel: ChannelParams = ChannelParams()
    budgets: Budgets = Budgets()
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    channel_method: ChannelMethod = "monte_carlo"

    def __post_init__(self):
        _require(self.n_users >= 1, f"Invalid user count: {self.n_users}")
        _require(self.d_max_bits > 0, f"Invalid maximum data size: {self.d_max_bits}")
        _require(
            0 < self.rho_range[0] <= self.rho_range[1],
            f"Invalid intensity range: {self.rho_range}",
        )
        _require(
            0 < self.zeta_range[0] <= self.zeta_range[1] < 1,
            f"Invalid output ratio range: {self.zeta_range}",
        )
        _require(
            self.user_disc_radius_m >= 0,
            f"Invalid disc radius: {self.user_disc_radius_m}",
        )
        _require(self.mc_samples >= 1, f"Invalid sample count: {self.mc_samples}")
        _require(
            self.channel_method in ("monte_carlo", "closed_form"),
            f"Unknown channel method: {self.channel_method}",
        )


class Scenario(NamedTuple):
    users: List[UserProfile]
    budgets: Budgets


@dataclass(frozen=True)
class ResultRow:
    scheme_name: Scheme
    seed: int
    latency_s: float
    per_user_latency_s: List[float]
    per_user_storage_bits: List[float]
    budget_usage: BudgetUsage

    def __post_init__(self):
        _require(self.latency_s > 0, f"Non-positive latency for {self.scheme_name}")


UserDocument = TypedDict(
    "UserDocument",
    {
        "data_bits": float,
        "intensity_cycles_per_bit": float,
        "output_ratio": float,
        "spectral_efficiency": float,
    },
)

ScenarioDocument = TypedDict(
    "ScenarioDocument",
    {
        # Explicit users override generation from the config
        "users": List[UserDocument],
        "config": Dict[str, object],
        "budgets": Dict[str, float],
    },
    total=False,
)


class SweepRow(NamedTuple):
    experiment: Experiment
    seed: int
    scheme: str
    sweep_var_name: str
    sweep_var_value: float
    latency_s: float
    storage_bits: float
    extra: Dict[str, float]
