import math

# Simulation parameters of the reference deployment
DEFAULT_N_USERS = 4
DEFAULT_D_MAX_BITS = 1e8
DEFAULT_RHO_RANGE = (1000.0, 5000.0)
DEFAULT_ZETA_RANGE = (0.01, 0.1)
DEFAULT_UAV_POSITION = (0.0, 0.0, 1000.0)
DEFAULT_DISC_RADIUS_M = 1000.0
DEFAULT_ETA_LOS_DB = 0.1
DEFAULT_ETA_NLOS_DB = 21.0
DEFAULT_A = 5.0188
DEFAULT_B = 0.3511
DEFAULT_CARRIER_HZ = 5.8e9
DEFAULT_LIGHT_SPEED = 3e8
DEFAULT_TX_POWER_W = 1.0
DEFAULT_NOISE_POWER_DBM = -114.0
DEFAULT_BANDWIDTH_TOTAL_HZ = 0.5e6
DEFAULT_BACKHAUL_TOTAL_BPS = 0.5e6
DEFAULT_COMPUTE_TOTAL_CPS = 5e9
DEFAULT_MC_SAMPLES = 1000

# Solver knobs
DEFAULT_TOL_REL = 1e-8
BISECTION_MAX_ITERATIONS = 200
BRACKET_MAX_DOUBLINGS = 64
# Budget comparisons in the feasibility check absorb rounding of sums
FEASIBILITY_SLACK = 1e-12
PLAN_TOL_REL = 1e-9
# Smallest storage scale for relative comparisons
STORAGE_FLOOR_BITS = 1.0


def dbm_to_watts(value_dbm: float) -> float:
    return 10 ** ((value_dbm - 30) / 10)


def safe_div(numerator: float, denominator: float) -> float:
    """
    Division for rate expressions: a positive amount over a zero rate never
    finishes, nothing over anything takes no time.
    """
    if denominator == 0:
        return 0.0 if numerator == 0 else math.inf

    return numerator / denominator


def relative_error(actual: float, expected: float, floor: float = 0.0) -> float:
    if actual == expected:
        return 0.0

    if math.isinf(actual) or math.isinf(expected):
        return math.inf

    scale = max(abs(actual), abs(expected), floor)

    if scale == 0:
        return 0.0

    return abs(actual - expected) / scale


def within_budget(used: float, total: float, tol_rel: float) -> bool:
    return used <= total + tol_rel * max(abs(total), 1.0)

