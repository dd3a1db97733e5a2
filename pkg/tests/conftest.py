import json
import math
import os
from dataclasses import replace
from typing import Optional, Tuple

import pytest

from modules.custom_logger import LoggingManager
from modules.kernel_solver import derive
from modules.vehicle_config import UnitSpec, ValidatedSpec, VehicleSpec, WheelSpec, validate
from schemas.vehicle import parse_vehicle_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')


def config_path(name: str) -> str:
    return os.path.join(CONFIG_DIR, f"{name}.json")


def load_config(name: str) -> VehicleSpec:
    with open(config_path(name), 'r', encoding='utf-8') as handle:
        spec, _ = parse_vehicle_config(json.load(handle))
    return spec


def tractor(wheelbase: float = 3.0, hitch: Optional[Tuple[float, float]] = None) -> UnitSpec:
    wheels = (WheelSpec((0.0, 0.0), 'rear'), WheelSpec((wheelbase, 0.0), 'front'))
    return UnitSpec(wheels, None, hitch)


def trailer(drawbar: float = 5.0, hitch: Optional[Tuple[float, float]] = None) -> UnitSpec:
    return UnitSpec((WheelSpec((0.0, 0.0), 'axle'),), (drawbar, 0.0), hitch)


def with_unit(spec: VehicleSpec, index: int, **changes) -> VehicleSpec:
    """Copy of a spec with one unit's fields replaced (1-based index)."""
    units = list(spec.units)
    units[index - 1] = replace(units[index - 1], **changes)
    return VehicleSpec(tuple(units))


def chain(trailers: int, wheelbase: float = 3.0, drawbar: float = 5.0, offset: float = 0.0) -> VehicleSpec:
    """Bicycle tractor followed by identical single-axle trailers hitched `offset` behind each axle."""
    if trailers == 0:
        return VehicleSpec((tractor(wheelbase),))
    units = [tractor(wheelbase, (-offset, 0.0))]
    for index in range(trailers):
        last = index == trailers - 1
        units.append(trailer(drawbar, None if last else (-offset, 0.0)))
    return VehicleSpec(tuple(units))


def circle_radius(wheelbase: float, steer_angle: float) -> float:
    return wheelbase / math.tan(steer_angle)


@pytest.fixture
def logger() -> LoggingManager:
    return LoggingManager('error')


@pytest.fixture
def bicycle() -> ValidatedSpec:
    return validate(load_config('bicycle'))


@pytest.fixture
def car() -> ValidatedSpec:
    return validate(load_config('two_axle_car'))


@pytest.fixture
def bicycle_model(bicycle):
    return derive(bicycle)


@pytest.fixture
def on_axle_model():
    return derive(load_config('one_trailer_on_axle'))


@pytest.fixture
def clean_env(monkeypatch):
    for name in ('NTRAILER_LOG', 'NTRAILER_LOG_DIR', 'NTRAILER_EPS_DIV', 'NTRAILER_EPS_V', 'NTRAILER_EPS_YAW',
                 'NTRAILER_DT'):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr('functions.settings.load_dotenv', lambda *args, **kwargs: False)
