import math

import numpy as np
from scipy.special import exp1

from hub_orchestrator.errors import DegenerateGeometry, InvalidInput
from hub_orchestrator.types import ChannelParams, LinkGeometry, Position3D


def link_geometry(user: Position3D, uav: Position3D) -> LinkGeometry:
    """
    Distance and elevation angle (degrees) of the user-UAV link
    """
    dx = uav.x - user.x
    dy = uav.y - user.y
    dz = uav.z - user.z
    distance = math.sqrt(dx * dx + dy * dy + dz * dz)

    if distance == 0:
        raise DegenerateGeometry(f"User and UAV coincide at {user}")

    if dz <= 0:
        raise DegenerateGeometry(f"UAV at {uav} is not above user at {user}")

    # Clamp rounding so that vertical links stay at exactly 90 degrees
    elevation = math.degrees(math.asin(min(dz / distance, 1.0)))

    return LinkGeometry(distance_m=distance, elevation_deg=elevation)


def los_probability(elevation_deg: float, params: ChannelParams) -> float:
    return 1 / (1 + params.a * math.exp(-params.b * (elevation_deg - params.a)))


def large_scale_gain(geom: LinkGeometry, params: ChannelParams) -> float:
    """
    Linear amplitude gain of the probabilistic line-of-sight air-to-ground model.

    The sigmoid reuses `a` inside the exponent, as the model is usually stated.
    """
    excess = params.eta_los - params.eta_nlos
    free_space = 20 * math.log10(
        4 * math.pi * params.carrier_hz * geom.distance_m / params.light_speed
    )
    path_loss_db = (
        excess * los_probability(geom.elevation_deg, params)
        + params.eta_nlos
        + free_space
    )

    return 10 ** (-path_loss_db / 20)


def mean_snr(gain: float, params: ChannelParams) -> float:
    return params.tx_power_w * gain**2 / params.noise_power_w


def ergodic_spectral_efficiency(
    gain: float, params: ChannelParams, n_samples: int, seed: int
) -> float:
    """
    Monte-Carlo mean of log2(1 + SNR) over Rayleigh small-scale fading.

    The fading draws depend on the seed only, so the estimate is monotone in
    transmit power for a fixed seed.
    """
    if n_samples < 1:
        raise InvalidInput(f"Invalid sample count: {n_samples}")

    rng = np.random.default_rng(seed)
    # s ~ CN(0, 1): real and imaginary parts each carry half the power
    components = rng.standard_normal((2, n_samples))
    power = 0.5 * (components[0] ** 2 + components[1] ** 2)

    return float(np.mean(np.log2(1 + mean_snr(gain, params) * power)))


def rayleigh_spectral_efficiency(snr: float) -> float:
    """
    Exact ergodic spectral efficiency under Rayleigh fading at mean SNR `snr`
    """
    if snr <= 0:
        return 0.0

    inverse = 1 / snr

    if inverse > 500:
        # e^x overflows long before the product does; asymptotic series of e^x E1(x)
        scaled = (1 - 1 / inverse + 2 / inverse**2) / inverse
    else:
        scaled = math.exp(inverse) * float(exp1(inverse))

    return scaled / math.log(2)
