import dataclasses
import math
from pathlib import Path
from typing import Any, Dict, Tuple, cast

import ujson as json

from hub_orchestrator.errors import ScenarioError
from hub_orchestrator.scenario import generate_scenario
from hub_orchestrator.types import (
    Budgets,
    ChannelParams,
    Position3D,
    Scenario,
    ScenarioConfig,
    ScenarioDocument,
    UserDocument,
    UserProfile,
)
from hub_orchestrator.util import dbm_to_watts

DOCUMENT_KEYS = {"users", "config", "budgets"}
CONFIG_SCALARS = {
    "n_users": int,
    "d_max_bits": float,
    "user_disc_radius_m": float,
    "mc_samples": int,
    "seed": int,
    "channel_method": str,
}
CONFIG_RANGES = ("rho_range", "zeta_range")


def _fields(cls) -> set:
    return {field.name for field in dataclasses.fields(cls)}


def _check_keys(section: str, document: Dict[str, Any], allowed: set):
    if not isinstance(document, dict):
        raise ScenarioError(f"'{section}' must be an object")

    unknown = set(document) - allowed
    if unknown:
        raise ScenarioError(f"Unknown keys in '{section}': {sorted(unknown)}")


def _position(value: Any) -> Position3D:
    if isinstance(value, dict):
        _check_keys("position", value, {"x", "y", "z"})
        return Position3D(**{key: float(v) for key, v in value.items()})

    if isinstance(value, (list, tuple)) and len(value) == 3:
        return Position3D(*(float(v) for v in value))

    raise ScenarioError(f"Invalid position: {value}")


def parse_channel(document: Dict[str, Any]) -> ChannelParams:
    _check_keys("channel", document, _fields(ChannelParams) | {"noise_power_dbm"})
    values = {key: float(value) for key, value in document.items()}
    noise_dbm = values.pop("noise_power_dbm", None)

    # An explicit wattage wins over dBm
    if noise_dbm is not None and "noise_power_w" not in values:
        values["noise_power_w"] = dbm_to_watts(noise_dbm)

    return ChannelParams(**values)


def parse_budgets(document: Dict[str, Any], base: Budgets = Budgets()) -> Budgets:
    _check_keys("budgets", document, _fields(Budgets))

    return dataclasses.replace(
        base, **{key: float(value) for key, value in document.items()}
    )


def parse_config(document: Dict[str, Any]) -> ScenarioConfig:
    _check_keys("config", document, _fields(ScenarioConfig) - {"budgets"})
    values: Dict[str, Any] = {}

    for key, value in document.items():
        if key in CONFIG_SCALARS:
            values[key] = CONFIG_SCALARS[key](value)
        elif key in CONFIG_RANGES:
            low, high = value
            values[key] = (float(low), float(high))
        elif key == "uav_position":
            values[key] = _position(value)
        elif key == "channel":
            values[key] = parse_channel(value)

    return ScenarioConfig(**values)


def parse_user(document: UserDocument) -> UserProfile:
    raw = cast(Dict[str, Any], document)
    _check_keys("users[]", raw, _fields(UserProfile))
    values: Dict[str, Any] = {
        key: float(value) for key, value in raw.items() if key != "position"
    }

    if raw.get("position") is not None:
        values["position"] = _position(raw["position"])

    return UserProfile(**values)


def parse_scenario(document: ScenarioDocument) -> Tuple[Scenario, ScenarioConfig]:
    """
    Build a scenario from a parsed document. Explicit users win over
    generated ones; absent fields take the reference deployment defaults.
    """
    _check_keys("scenario", cast(Dict[str, Any], document), DOCUMENT_KEYS)

    try:
        config = parse_config(document.get("config", {}))
        config = dataclasses.replace(
            config, budgets=parse_budgets(document.get("budgets", {}), config.budgets)
        )

        if "users" in document:
            users = [parse_user(user) for user in document["users"]]
            return Scenario(users=users, budgets=config.budgets), config
    except (TypeError, ValueError) as error:
        raise ScenarioError(f"Malformed scenario: {error}") from error

    return generate_scenario(config, config.seed), config


def load_scenario(file_path: Path) -> Tuple[Scenario, ScenarioConfig]:
    try:
        with file_path.open() as stream:
            document = json.load(stream)
    except OSError as error:
        raise ScenarioError(f"Cannot read {file_path}: {error}") from error
    except ValueError as error:
        raise ScenarioError(f"Invalid JSON in {file_path}: {error}") from error

    return parse_scenario(document)


def _finite(value: Any) -> Any:
    # JSON has no infinities
    if isinstance(value, float) and not math.isfinite(value):
        return None

    if isinstance(value, dict):
        return {key: _finite(v) for key, v in value.items()}

    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]

    return value


def to_document(value: Any) -> Any:
    """
    JSON-ready form of a result dataclass (plan, trace, advice, result row)
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _finite(dataclasses.asdict(value))

    if isinstance(value, list):
        return [to_document(item) for item in value]

    return _finite(value)


def dumps(value: Any) -> str:
    return json.dumps(to_document(value), sort_keys=True, indent=2)