import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np

from modules.errors import DegeneratePoint, InvalidArgument, SingularDenominator
from modules.kernel_solver import KinematicModel, as_state_vector, state_derivative
from modules.vehicle_config import ValidatedSpec, is_independent, recover_poses, rotate_points

DEFAULT_EPS_V: float = 1e-9

StateValues = Union[Sequence[float], Mapping[str, float]]


@dataclass(frozen=True)
class PointVelocity:
    """World-frame velocity (m/s) of a point fixed on `unit`."""

    vx: float
    vy: float
    unit: int

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy])


@dataclass(frozen=True)
class SteeringSolution:
    """Steering angle relative to the unit heading, in (-pi, pi]; 0.0 when degenerate."""

    angle: float
    degenerate: bool = False
    speed: float = 0.0


def wrap_angle(value: float) -> float:
    """Wrap into (-pi, pi]."""
    return math.atan2(math.sin(value), math.cos(value))


def point_velocities(spec: ValidatedSpec, states: np.ndarray, derivatives: np.ndarray, unit: int,
                     body_point: Sequence[float]) -> np.ndarray:
    """
    Velocities (N, 2) of one body point for a batch of states and their derivatives:
    p_1_dot + sum_{m<i} R(psi_m + pi/2)(h_{m,r} - h_{m,f}) psi_m_dot + R(psi_i + pi/2)(p - h_{i,f}) psi_i_dot.
    """
    states = np.atleast_2d(states)
    derivatives = np.atleast_2d(derivatives)
    n = spec.n
    headings = states[:, 2:2 + n]
    yaw_rates = derivatives[:, 2:2 + n]
    velocity = derivatives[:, 0:2].copy()
    for m in range(1, unit):
        arm = spec.hitch_rear_point(m) - spec.hitch_front_point(m)
        velocity += rotate_points(headings[:, m - 1] + math.pi / 2, arm) * yaw_rates[:, m - 1:m]
    arm = np.asarray(body_point, dtype=float) - spec.hitch_front_point(unit)
    velocity += rotate_points(headings[:, unit - 1] + math.pi / 2, arm) * yaw_rates[:, unit - 1:unit]
    return velocity


def point_velocity(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues, u: Sequence[float],
                   unit: int, body_point: Sequence[float]) -> PointVelocity:
    """
    Velocity of a body-fixed point of `unit` under control u.

    Raises:
        SingularState: Propagated from the model evaluation.
    """
    spec.unit(unit)
    values = as_state_vector(model, state_values)
    derivative = state_derivative(model, values, u)
    vx, vy = point_velocities(spec, values, derivative, unit, body_point)[0]
    return PointVelocity(float(vx), float(vy), unit)


def _solution_from_velocity(velocity: PointVelocity, heading: float, reverse: bool, eps_v: float,
                            strict: bool) -> SteeringSolution:
    speed = velocity.speed
    if speed < eps_v:
        if strict:
            raise DegeneratePoint(velocity.unit, speed, eps_v)
        return SteeringSolution(0.0, True, speed)
    direction = math.atan2(velocity.vy, velocity.vx)
    if reverse:
        # wheels keep pointing forward while the vehicle backs up
        direction += math.pi
    return SteeringSolution(wrap_angle(direction - heading), False, speed)


def point_steer_angle(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues, u: Sequence[float],
                      unit: int, body_point: Sequence[float], eps_v: float = DEFAULT_EPS_V,
                      strict: bool = True) -> SteeringSolution:
    """
    Steering angle a virtual wheel at `body_point` would need to roll without slipping.

    Args:
        strict (bool): Raise DegeneratePoint below eps_v instead of returning a degenerate solution.
    """
    values = as_state_vector(model, state_values)
    velocity = point_velocity(spec, model, values, u, unit, body_point)
    return _solution_from_velocity(velocity, float(values[1 + unit]), float(u[0]) < 0, eps_v, strict)


def dependent_steer_angle(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues,
                          u: Sequence[float], unit: int, wheel: int, eps_v: float = DEFAULT_EPS_V,
                          strict: bool = True) -> SteeringSolution:
    """
    Generalized Ackermann angle of a dependent wheel: the direction of its contact-point
    velocity relative to the unit heading.

    Raises:
        InvalidArgument: If the wheel carries an independent steering coordinate.
        DegeneratePoint: If the contact point is (nearly) at rest and strict is set.
    """
    if is_independent(unit, wheel):
        raise InvalidArgument(f"Wheel ({unit}, {wheel}) is independently steered")
    return point_steer_angle(spec, model, state_values, u, unit, spec.wheel_point(unit, wheel), eps_v, strict)


def virtual_hitch_steer(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues, u: Sequence[float],
                        unit: int, which: str, eps_v: float = DEFAULT_EPS_V, strict: bool = True) -> SteeringSolution:
    """Steering angle of a virtual wheel placed at the front or rear hitch of `unit`."""
    if which not in ('front', 'rear'):
        raise InvalidArgument(f"Hitch must be 'front' or 'rear', got {which!r}")
    hitch = spec.unit(unit).hitch_front if which == 'front' else spec.unit(unit).hitch_rear
    if hitch is None:
        raise InvalidArgument(f"Unit {unit} has no {which} hitch")
    return point_steer_angle(spec, model, state_values, u, unit, hitch, eps_v, strict)


def single_unit_tan_formula(a2: float, b2: float, ak: float, bk: float, theta1: float, theta2: float,
                            eps: float = 1e-12) -> float:
    """
    tan(theta_{1,k}) of a dependent tractor wheel at (ak, bk) given the independent angles of
    wheel 1 (origin) and wheel 2 at (a2, b2).

    Raises:
        SingularDenominator: If |D| < eps.
    """
    t1, t2 = math.tan(theta1), math.tan(theta2)
    numerator = (a2 - ak) * t1 + (ak + b2 * t1) * t2
    denominator = a2 + (b2 - bk) * t2 + bk * t1
    if abs(denominator) < eps:
        raise SingularDenominator(denominator)
    return numerator / denominator


def instantaneous_center(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues,
                         u: Sequence[float], unit: int, eps_yaw: float = 1e-12) -> Optional[np.ndarray]:
    """World coordinates of the unit's instantaneous center of rotation; None when it does not turn."""
    values = as_state_vector(model, state_values)
    derivative = state_derivative(model, values, u)
    omega = derivative[1 + unit]
    if abs(omega) < eps_yaw:
        return None
    origin = recover_poses(spec, values)[unit - 1].position
    vx, vy = point_velocities(spec, values, derivative, unit, (0.0, 0.0))[0]
    return origin + np.array([-vy, vx]) / omega


def resolve_steering(spec: ValidatedSpec, model: KinematicModel, state_values: StateValues, u: Sequence[float],
                     eps_v: float = DEFAULT_EPS_V, strict: bool = False) -> Dict[str, SteeringSolution]:
    """
    Every dependent wheel angle (`theta_i_k`) and every virtual hitch angle
    (`hitch_front_i`, `hitch_rear_i`) at one state.
    """
    values = as_state_vector(model, state_values)
    solutions: Dict[str, SteeringSolution] = {}
    for i, k in spec.dependent_wheels:
        solutions[f"theta_{i}_{k}"] = dependent_steer_angle(spec, model, values, u, i, k, eps_v, strict)
    for i in range(1, spec.n + 1):
        if spec.unit(i).hitch_front is not None:
            solutions[f"hitch_front_{i}"] = virtual_hitch_steer(spec, model, values, u, i, 'front', eps_v, strict)
        if spec.unit(i).hitch_rear is not None:
            solutions[f"hitch_rear_{i}"] = virtual_hitch_steer(spec, model, values, u, i, 'rear', eps_v, strict)
    return solutions
