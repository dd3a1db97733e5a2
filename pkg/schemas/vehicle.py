"""
Vehicle config file format.

    {
      "angle_unit": "rad" | "deg",            # optional, default "rad"
      "units": [
        {
          "label": "tractor",                  # optional
          "wheels": [{"x": 0.0, "y": 0.0, "label": "rear"}, ...],
          "hitch_front": {"x": .., "y": ..} | null,
          "hitch_rear": {"x": .., "y": ..} | null
        },
        ...
      ]
    }

Coordinates are meters in the unit's body frame (+x forward, +y left). Wheel order matters:
tractor wheels 1 and 2 and each trailer's wheel 1 are the independently steered ones.
`angle_unit` applies to angles in state files, initial states and control traces used with
the vehicle; geometry is always in meters. Unknown keys are rejected.
"""
from typing import Any, Dict, Optional, Tuple

from modules.errors import ConfigError
from modules.vehicle_config import Point, UnitSpec, VehicleSpec, WheelSpec

VEHICLE_KEYS = frozenset({'units', 'angle_unit'})
UNIT_KEYS = frozenset({'label', 'wheels', 'hitch_front', 'hitch_rear'})
WHEEL_KEYS = frozenset({'x', 'y', 'label'})
POINT_KEYS = frozenset({'x', 'y'})
ANGLE_UNITS = ('rad', 'deg')


def _reject_unknown(document: Dict[str, Any], allowed: frozenset, where: str) -> None:
    unknown = sorted(set(document) - allowed)
    if unknown:
        raise ConfigError(f"Unknown key(s) {unknown} in {where}")


def _point(document: Any, where: str) -> Optional[Point]:
    if document is None:
        return None
    if not isinstance(document, dict):
        raise ConfigError(f"{where} must be an object with x and y")
    _reject_unknown(document, POINT_KEYS, where)
    try:
        return (float(document['x']), float(document['y']))
    except KeyError as e:
        raise ConfigError(f"{where} is missing '{e.args[0]}'") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where} coordinates must be numbers") from None


def parse_vehicle_config(document: Any) -> Tuple[VehicleSpec, str]:
    """
    Parse a config document into a VehicleSpec and its angle unit.

    Raises:
        ConfigError: On unknown keys, wrong types or missing coordinates.
    """
    if not isinstance(document, dict):
        raise ConfigError("Vehicle config must be a JSON object")
    _reject_unknown(document, VEHICLE_KEYS, 'vehicle config')
    angle_unit = document.get('angle_unit', 'rad')
    if angle_unit not in ANGLE_UNITS:
        raise ConfigError(f"angle_unit must be one of {ANGLE_UNITS}, got {angle_unit!r}")
    units_document = document.get('units')
    if not isinstance(units_document, list):
        raise ConfigError("Vehicle config needs a 'units' list")

    units = []
    for i, unit_document in enumerate(units_document, start=1):
        where = f"unit {i}"
        if not isinstance(unit_document, dict):
            raise ConfigError(f"{where} must be an object")
        _reject_unknown(unit_document, UNIT_KEYS, where)
        wheels_document = unit_document.get('wheels')
        if not isinstance(wheels_document, list):
            raise ConfigError(f"{where} needs a 'wheels' list")
        wheels = []
        for k, wheel_document in enumerate(wheels_document, start=1):
            wheel_where = f"{where} wheel {k}"
            if not isinstance(wheel_document, dict):
                raise ConfigError(f"{wheel_where} must be an object")
            _reject_unknown(wheel_document, WHEEL_KEYS, wheel_where)
            position = _point({key: wheel_document.get(key) for key in ('x', 'y')}, wheel_where)
            wheels.append(WheelSpec(position, str(wheel_document.get('label', ''))))
        units.append(UnitSpec(
            wheels=tuple(wheels),
            hitch_front=_point(unit_document.get('hitch_front'), f"{where} hitch_front"),
            hitch_rear=_point(unit_document.get('hitch_rear'), f"{where} hitch_rear"),
            label=str(unit_document.get('label', '')),
        ))
    return VehicleSpec(tuple(units)), angle_unit


def _point_document(point: Optional[Point]) -> Optional[Dict[str, float]]:
    if point is None:
        return None
    return {'x': float(point[0]), 'y': float(point[1])}


def vehicle_config_document(spec: VehicleSpec, angle_unit: str = 'rad') -> Dict[str, Any]:
    """Inverse of parse_vehicle_config."""
    units = []
    for unit in spec.units:
        wheels = []
        for wheel in unit.wheels:
            entry: Dict[str, Any] = {'x': float(wheel.position[0]), 'y': float(wheel.position[1])}
            if wheel.label:
                entry['label'] = wheel.label
            wheels.append(entry)
        entry = {'wheels': wheels,
                 'hitch_front': _point_document(unit.hitch_front),
                 'hitch_rear': _point_document(unit.hitch_rear)}
        if unit.label:
            entry['label'] = unit.label
        units.append(entry)
    return {'angle_unit': angle_unit, 'units': units}
