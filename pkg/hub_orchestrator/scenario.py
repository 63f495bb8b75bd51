import numpy as np
from loguru import logger

from hub_orchestrator.channel import (
    ergodic_spectral_efficiency,
    large_scale_gain,
    link_geometry,
    mean_snr,
    rayleigh_spectral_efficiency,
)
from hub_orchestrator.types import Position3D, Scenario, ScenarioConfig, UserProfile


def sample_positions(
    rng: np.random.Generator, count: int, radius_m: float
) -> np.ndarray:
    """
    `count` points uniform on a disc centred at the origin, as an (count, 2) array
    """
    radii = radius_m * np.sqrt(rng.uniform(0.0, 1.0, count))
    angles = rng.uniform(0.0, 2 * np.pi, count)

    return np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))


def _spectral_efficiency(
    position: Position3D, config: ScenarioConfig, channel_seed: int
) -> float:
    geometry = link_geometry(position, config.uav_position)
    gain = large_scale_gain(geometry, config.channel)

    if config.channel_method == "closed_form":
        return rayleigh_spectral_efficiency(mean_snr(gain, config.channel))

    return ergodic_spectral_efficiency(
        gain, config.channel, config.mc_samples, channel_seed
    )


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """
    Random users on the ground below the hub. Everything, fading draws
    included, is derived from `seed`.
    """
    rng = np.random.default_rng(seed)
    count = config.n_users

    data = rng.uniform(config.d_max_bits / 10, config.d_max_bits, count)
    intensity = rng.uniform(*config.rho_range, count)
    ratio = rng.uniform(*config.zeta_range, count)
    positions = sample_positions(rng, count, config.user_disc_radius_m)
    channel_seeds = rng.integers(0, 2**32, count)

    users = []
    for index in range(count):
        x, y = (float(v) for v in positions[index])
        position = Position3D(x, y, 0.0)
        users.append(
            UserProfile(
                data_bits=float(data[index]),
                intensity_cycles_per_bit=float(intensity[index]),
                output_ratio=float(ratio[index]),
                spectral_efficiency=_spectral_efficiency(
                    position, config, int(channel_seeds[index])
                ),
                position=position,
            )
        )

    logger.debug("Generated {} users from seed {}", count, seed)

    return Scenario(users=users, budgets=config.budgets)
