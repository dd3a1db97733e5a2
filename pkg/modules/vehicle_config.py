import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from modules.errors import (EmptyVehicle, InvalidArgument, InvalidGeometry, MissingHitch,
                            TractorTooFewWheels, UnexpectedHitch)
from modules.symbolic_core import ZERO, AngleVar, Param, ScalarExpr, Vec2Sym, steer, yaw

Point = Tuple[float, float]


@dataclass(frozen=True)
class WheelSpec:
    """Wheel road-contact point (a, b) in the unit's body frame, meters."""

    position: Point
    label: str = ''


@dataclass(frozen=True)
class UnitSpec:
    wheels: Tuple[WheelSpec, ...]
    hitch_front: Optional[Point] = None
    hitch_rear: Optional[Point] = None
    label: str = ''


@dataclass(frozen=True)
class VehicleSpec:
    """Ordered units V_1 (tractor) ... V_n (rearmost trailer)."""

    units: Tuple[UnitSpec, ...]

    @property
    def n(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class CoordinateDescriptor:
    """One generalized coordinate. kind is 'position', 'yaw' or 'steer'."""

    name: str
    kind: str
    unit: int
    wheel: Optional[int] = None

    @property
    def angle_var(self) -> Optional[AngleVar]:
        if self.kind == 'yaw':
            return yaw(self.unit)
        if self.kind == 'steer':
            return steer(self.unit, self.wheel)
        return None

    @property
    def rate_name(self) -> str:
        return f"{self.name}_dot"


@dataclass(frozen=True)
class StateLayout:
    coordinates: Tuple[CoordinateDescriptor, ...]

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.coordinates)

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def __len__(self) -> int:
        return len(self.coordinates)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidArgument(f"No coordinate named {name} in layout") from None

    @property
    def angle_vars(self) -> Tuple[AngleVar, ...]:
        return tuple(c.angle_var for c in self.coordinates if c.angle_var is not None)

    @property
    def steer_coordinates(self) -> Tuple[CoordinateDescriptor, ...]:
        return tuple(c for c in self.coordinates if c.kind == 'steer')

    @property
    def yaw_coordinates(self) -> Tuple[CoordinateDescriptor, ...]:
        return tuple(c for c in self.coordinates if c.kind == 'yaw')

    def bindings(self, values: Sequence[float]) -> Dict[AngleVar, float]:
        """Angle bindings for symbolic evaluation from a value vector in layout order."""
        return {c.angle_var: float(v) for c, v in zip(self.coordinates, values) if c.angle_var is not None}


def is_independent(unit: int, wheel: int) -> bool:
    """Tractor wheels 1 and 2 and wheel 1 of every trailer carry independent steering."""
    return (unit == 1 and wheel <= 2) or (unit > 1 and wheel == 1)


def _rebased(point: Optional[Point], origin: Point) -> Optional[Point]:
    if point is None:
        return None
    return (point[0] - origin[0], point[1] - origin[1])


def _symbol(name: str, value: float) -> ScalarExpr:
    return ZERO if value == 0.0 else Param(name)


@dataclass(frozen=True)
class ValidatedSpec:
    """
    A VehicleSpec that passed validation, with every unit frame placed on its first wheel.

    Geometry entries become symbolic parameters (`a_i_k`, `b_i_k`, `hf_i_x`, `hr_i_y`, ...);
    entries that are exactly zero become the zero constant so that structural zeros
    (on-axle hitches, centered wheels) simplify away during derivation.
    """

    spec: VehicleSpec
    original: VehicleSpec
    offsets: Tuple[Point, ...]
    params: Dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def unit(self, i: int) -> UnitSpec:
        if not 1 <= i <= self.n:
            raise InvalidArgument(f"Unit index {i} outside 1..{self.n}")
        return self.spec.units[i - 1]

    def wheel_count(self, i: int) -> int:
        return len(self.unit(i).wheels)

    def wheel(self, i: int, k: int) -> WheelSpec:
        wheels = self.unit(i).wheels
        if not 1 <= k <= len(wheels):
            raise InvalidArgument(f"Wheel index {k} outside 1..{len(wheels)} for unit {i}")
        return wheels[k - 1]

    def wheel_label(self, i: int, k: int) -> str:
        return self.wheel(i, k).label or f"w_{i}_{k}"

    def unit_label(self, i: int) -> str:
        return self.unit(i).label or f"unit_{i}"

    @property
    def wheels(self) -> List[Tuple[int, int]]:
        return [(i, k) for i in range(1, self.n + 1) for k in range(1, self.wheel_count(i) + 1)]

    @property
    def independent_wheels(self) -> List[Tuple[int, int]]:
        return [(i, k) for i, k in self.wheels if is_independent(i, k)]

    @property
    def dependent_wheels(self) -> List[Tuple[int, int]]:
        return [(i, k) for i, k in self.wheels if not is_independent(i, k)]

    # symbolic geometry

    def wheel_vector(self, i: int, k: int) -> Vec2Sym:
        a, b = self.wheel(i, k).position
        return Vec2Sym(_symbol(f"a_{i}_{k}", a), _symbol(f"b_{i}_{k}", b))

    def hitch_front_vector(self, i: int) -> Vec2Sym:
        """h_{i,f}; identically zero for the tractor."""
        point = self.unit(i).hitch_front
        if point is None:
            return Vec2Sym(ZERO, ZERO)
        return Vec2Sym(_symbol(f"hf_{i}_x", point[0]), _symbol(f"hf_{i}_y", point[1]))

    def hitch_rear_vector(self, i: int) -> Vec2Sym:
        point = self.unit(i).hitch_rear
        if point is None:
            return Vec2Sym(ZERO, ZERO)
        return Vec2Sym(_symbol(f"hr_{i}_x", point[0]), _symbol(f"hr_{i}_y", point[1]))

    # numeric geometry

    def wheel_point(self, i: int, k: int) -> np.ndarray:
        return np.asarray(self.wheel(i, k).position, dtype=float)

    def hitch_front_point(self, i: int) -> np.ndarray:
        point = self.unit(i).hitch_front
        return np.zeros(2) if point is None else np.asarray(point, dtype=float)

    def hitch_rear_point(self, i: int) -> np.ndarray:
        point = self.unit(i).hitch_rear
        return np.zeros(2) if point is None else np.asarray(point, dtype=float)

    def state_layout(self) -> StateLayout:
        return state_layout(self)

    def full_layout(self) -> StateLayout:
        return full_layout(self)


def _check_point(point: Any, unit: int, what: str) -> Point:
    try:
        x, y = (float(point[0]), float(point[1]))
    except (TypeError, ValueError, IndexError, KeyError):
        raise InvalidGeometry(f"Unit {unit} {what} must be a pair of numbers, got {point!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidGeometry(f"Unit {unit} {what} has non-finite coordinates {point!r}")
    return (x, y)


def validate(spec: VehicleSpec, logger: Any = None) -> ValidatedSpec:
    """
    Check a vehicle description and rebase every unit frame onto its first wheel.

    Args:
        spec (VehicleSpec): The declarative description.
        logger (LoggingManager): Optional logger; rebasing is reported as a WARNING row.

    Returns:
        ValidatedSpec: The rebased spec together with its generated parameter values.

    Raises:
        EmptyVehicle, TractorTooFewWheels, MissingHitch, UnexpectedHitch, InvalidGeometry
    """
    if not spec.units:
        raise EmptyVehicle()
    n = len(spec.units)
    units: List[UnitSpec] = []
    offsets: List[Point] = []
    params: Dict[str, float] = {}
    for i, unit in enumerate(spec.units, start=1):
        if not unit.wheels:
            raise InvalidGeometry(f"Unit {i} has no wheels")
        if i == 1 and len(unit.wheels) < 2:
            raise TractorTooFewWheels(len(unit.wheels))
        if i == 1 and unit.hitch_front is not None:
            raise UnexpectedHitch(1, 'front')
        if i == n and unit.hitch_rear is not None:
            raise UnexpectedHitch(i, 'rear')
        if i > 1 and unit.hitch_front is None:
            raise MissingHitch(i, 'front')
        if i < n and unit.hitch_rear is None:
            raise MissingHitch(i, 'rear')

        wheels = [_check_point(w.position, i, f"wheel {k}") for k, w in enumerate(unit.wheels, start=1)]
        hitch_front = None if unit.hitch_front is None else _check_point(unit.hitch_front, i, 'hitch_front')
        hitch_rear = None if unit.hitch_rear is None else _check_point(unit.hitch_rear, i, 'hitch_rear')
        origin = wheels[0]
        if origin != (0.0, 0.0) and logger is not None:
            logger.write_log('vehicle_config', 'validate', 'WARNING',
                             f"Unit {i} frame rebased onto wheel 1 at ({origin[0]}, {origin[1]})")
        rebased_wheels = tuple(WheelSpec(_rebased(p, origin), w.label) for p, w in zip(wheels, unit.wheels))
        rebased = UnitSpec(rebased_wheels, _rebased(hitch_front, origin), _rebased(hitch_rear, origin), unit.label)
        units.append(rebased)
        offsets.append(origin)

        for k, wheel in enumerate(rebased.wheels, start=1):
            params[f"a_{i}_{k}"], params[f"b_{i}_{k}"] = wheel.position
        if rebased.hitch_front is not None:
            params[f"hf_{i}_x"], params[f"hf_{i}_y"] = rebased.hitch_front
        if rebased.hitch_rear is not None:
            params[f"hr_{i}_x"], params[f"hr_{i}_y"] = rebased.hitch_rear

    return ValidatedSpec(VehicleSpec(tuple(units)), spec, tuple(offsets), params)


def state_layout(spec: ValidatedSpec) -> StateLayout:
    """Reduced coordinates (x_1, y_1, psi_1..psi_n, theta_1_1, theta_1_2, theta_2_1..theta_n_1)."""
    coordinates = [CoordinateDescriptor('x_1', 'position', 1), CoordinateDescriptor('y_1', 'position', 1)]
    coordinates += [CoordinateDescriptor(f"psi_{i}", 'yaw', i) for i in range(1, spec.n + 1)]
    coordinates += [CoordinateDescriptor(f"theta_{i}_{k}", 'steer', i, k) for i, k in spec.independent_wheels]
    return StateLayout(tuple(coordinates))


def full_layout(spec: ValidatedSpec) -> StateLayout:
    """Reduced coordinates followed by the dependent steering angles, in (unit, wheel) order."""
    dependent = [CoordinateDescriptor(f"theta_{i}_{k}", 'steer', i, k) for i, k in spec.dependent_wheels]
    return StateLayout(state_layout(spec).coordinates + tuple(dependent))


def rotation_matrix(angle_value: float) -> np.ndarray:
    c, s = math.cos(angle_value), math.sin(angle_value)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class UnitPose:
    position: np.ndarray
    heading: float

    def transform(self, body_point: Sequence[float]) -> np.ndarray:
        return self.position + rotation_matrix(self.heading) @ np.asarray(body_point, dtype=float)


def _state_vector(spec: ValidatedSpec, state_values: Union[Sequence[float], Mapping[str, float]]) -> np.ndarray:
    layout = state_layout(spec)
    if isinstance(state_values, Mapping):
        try:
            return np.array([float(state_values[name]) for name in layout.names])
        except KeyError as e:
            raise InvalidArgument(f"State value for {e.args[0]} missing") from None
    values = np.asarray(state_values, dtype=float)
    if values.shape[0] < layout.dim:
        raise InvalidArgument(f"State vector has {values.shape[0]} entries, layout needs {layout.dim}")
    return values


def recover_poses(spec: ValidatedSpec, state_values: Union[Sequence[float], Mapping[str, float]],
                  method: str = 'iterative') -> List[UnitPose]:
    """
    Recover every unit pose (p_i, psi_i) from the reduced state using hitch coincidence.

    Args:
        spec (ValidatedSpec): The validated vehicle.
        state_values: Reduced state in StateLayout order, or a name -> value mapping.
        method (str): 'iterative' (unit by unit along the hitches) or 'closed' (sum form).

    Returns:
        List[UnitPose]: One pose per unit.
    """
    values = _state_vector(spec, state_values)
    n = spec.n
    headings = [float(values[2 + i]) for i in range(n)]
    p1 = np.array([values[0], values[1]], dtype=float)
    poses = [UnitPose(p1, headings[0])]
    if method == 'iterative':
        for i in range(1, n):
            previous = poses[-1]
            position = (previous.position + rotation_matrix(previous.heading) @ spec.hitch_rear_point(i)
                        - rotation_matrix(headings[i]) @ spec.hitch_front_point(i + 1))
            poses.append(UnitPose(position, headings[i]))
    elif method == 'closed':
        for i in range(2, n + 1):
            position = p1.copy()
            for m in range(1, i):
                position += rotation_matrix(headings[m - 1]) @ (spec.hitch_rear_point(m) - spec.hitch_front_point(m))
            position -= rotation_matrix(headings[i - 1]) @ spec.hitch_front_point(i)
            poses.append(UnitPose(position, headings[i - 1]))
    else:
        raise InvalidArgument(f"Unknown pose recovery method: {method}")
    return poses


def recover_positions(spec: ValidatedSpec, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized iterative pose recovery over a batch of states.

    Returns:
        positions (N, n, 2) and headings (N, n).
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = spec.n
    headings = states[:, 2:2 + n]
    positions = np.zeros((states.shape[0], n, 2))
    positions[:, 0, :] = states[:, 0:2]
    for i in range(1, n):
        rear = spec.hitch_rear_point(i)
        front = spec.hitch_front_point(i + 1)
        positions[:, i, :] = (positions[:, i - 1, :] + rotate_points(headings[:, i - 1], rear)
                              - rotate_points(headings[:, i], front))
    return positions, headings


def rotate_points(headings: np.ndarray, body_point: Sequence[float]) -> np.ndarray:
    """R(psi) p for a vector of headings and one body point; returns (N, 2)."""
    c, s = np.cos(headings), np.sin(headings)
    x, y = float(body_point[0]), float(body_point[1])
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def wheel_world_position(spec: ValidatedSpec, state_values: Union[Sequence[float], Mapping[str, float]],
                         unit: int, wheel: int) -> np.ndarray:
    """w|_s = p_i + R(psi_i) w|_{i}."""
    body = spec.wheel_point(unit, wheel)
    return recover_poses(spec, state_values)[unit - 1].transform(body)
