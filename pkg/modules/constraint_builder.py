import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from modules.errors import InvalidArgument
from modules.symbolic_core import (ZERO, AngleSum, Param, Product, ScalarExpr, Sum, Vec2Sym, evaluate,
                                   node_count, rot, simplify, steer, transpose_rot, yaw)
from modules.vehicle_config import StateLayout, ValidatedSpec, is_independent, rotation_matrix, state_layout

INDEPENDENT = 'independent'
DEPENDENT = 'dependent'


@dataclass(frozen=True)
class ConstraintRow:
    """
    Pfaffian row [0 1] C_{i,k} of one wheel over the reduced state velocities.

    `coefficients` is keyed by StateLayout coordinate name, in layout order; steering-rate
    entries are the zero expression.
    """

    coefficients: Dict[str, ScalarExpr]
    source: Tuple[int, int]
    kind: str
    heading: AngleSum

    def coefficient(self, name: str) -> ScalarExpr:
        return self.coefficients.get(name, ZERO)

    @property
    def entries(self) -> List[ScalarExpr]:
        return list(self.coefficients.values())

    def evaluate(self, bindings: Mapping, params: Mapping[str, float]) -> np.ndarray:
        return np.array([evaluate(expr, bindings, params) for expr in self.coefficients.values()])


@dataclass(frozen=True)
class PfaffianMatrix:
    """A(x): one ConstraintRow per independent wheel, in construction order."""

    rows: Tuple[ConstraintRow, ...]
    layout: StateLayout
    spec: ValidatedSpec

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.rows), self.layout.dim)

    def entries(self) -> List[List[ScalarExpr]]:
        return [row.entries for row in self.rows]

    def node_count(self) -> int:
        return node_count(expr for row in self.rows for expr in row.entries)

    def evaluate(self, state_values: Sequence[float]) -> np.ndarray:
        bindings = self.layout.bindings(state_values)
        return np.vstack([row.evaluate(bindings, self.spec.params) for row in self.rows])


def _check_wheel(spec: ValidatedSpec, i: int, k: int) -> None:
    spec.wheel(i, k)


def intermediate_term(spec: ValidatedSpec, i: int, m: int, k: int) -> Vec2Sym:
    """I_{i,m,k} = R(psi_m - psi_i - theta_{i,k} + pi/2)(h_{m,r} - h_{m,f})."""
    _check_wheel(spec, i, k)
    if not 1 <= m < i:
        raise InvalidArgument(f"Intermediate unit {m} must satisfy 1 <= m < {i}")
    angle = (yaw(m) - yaw(i) - steer(i, k)).shift(1)
    offset = spec.hitch_rear_vector(m) - spec.hitch_front_vector(m)
    return rot(angle) @ offset


def self_term(spec: ValidatedSpec, i: int, k: int) -> Vec2Sym:
    """S_{i,k} = R(pi/2 - theta_{i,k})(w_{i,k} - h_{i,f})."""
    _check_wheel(spec, i, k)
    angle = (-steer(i, k)).shift(1)
    return rot(angle) @ (spec.wheel_vector(i, k) - spec.hitch_front_vector(i))


def _wheel_blocks(spec: ValidatedSpec, i: int, k: int, component: int) -> Dict[str, ScalarExpr]:
    heading = yaw(i) + steer(i, k)
    selector = transpose_rot(heading).row(component)
    blocks: Dict[str, ScalarExpr] = {'x_1': selector[0], 'y_1': selector[1]}
    for m in range(1, spec.n + 1):
        if m < i:
            blocks[f"psi_{m}"] = tuple(intermediate_term(spec, i, m, k))[component]
        elif m == i:
            blocks[f"psi_{m}"] = tuple(self_term(spec, i, k))[component]
        else:
            blocks[f"psi_{m}"] = ZERO
    return blocks


def wheel_constraint_row(spec: ValidatedSpec, i: int, k: int, layout: Optional[StateLayout] = None) -> ConstraintRow:
    """
    No-slip row of wheel (i, k): the lateral wheel-frame velocity as a linear form in the
    reduced state velocities. Dependent wheels keep theta_{i,k} as a free angle.
    """
    layout = layout or state_layout(spec)
    blocks = _wheel_blocks(spec, i, k, 1)
    coefficients = {name: simplify(blocks.get(name, ZERO)) for name in layout.names}
    kind = INDEPENDENT if is_independent(i, k) else DEPENDENT
    return ConstraintRow(coefficients, (i, k), kind, yaw(i) + steer(i, k))


def wheel_velocity_expr(spec: ValidatedSpec, i: int, k: int) -> ScalarExpr:
    """
    Longitudinal wheel speed [1 0] C_{i,k} x_dot. State velocities appear as parameters
    named `<coordinate>_dot` (x_1_dot, y_1_dot, psi_m_dot).
    """
    blocks = _wheel_blocks(spec, i, k, 0)
    terms = [Product(expr, Param(f"{name}_dot")) for name, expr in blocks.items() if expr is not ZERO]
    if not terms:
        return ZERO
    return simplify(Sum(*terms))


def build_pfaffian(spec: ValidatedSpec, logger: Any = None) -> PfaffianMatrix:
    """
    Assemble the nonholonomic constraint matrix over the independent wheels.

    Args:
        spec (ValidatedSpec): The validated vehicle.
        logger (LoggingManager): Optional logger for construction statistics.

    Returns:
        PfaffianMatrix: n + 1 simplified rows.
    """
    try:
        layout = state_layout(spec)
        rows = tuple(wheel_constraint_row(spec, i, k, layout) for i, k in spec.independent_wheels)
        matrix = PfaffianMatrix(rows, layout, spec)
        if logger is not None:
            logger.write_log('constraint_builder', 'build_pfaffian', 'INFO',
                             f"Built {matrix.shape[0]}x{matrix.shape[1]} constraint matrix "
                             f"with {matrix.node_count()} expression nodes")
        return matrix
    except Exception as e:
        if logger is not None:
            logger.write_log('constraint_builder', 'build_pfaffian', 'ERROR', f"Error building constraint matrix: {str(e)}")
        raise


# numeric reconstruction used to cross-check the symbolic rows

def numeric_constraint_row(spec: ValidatedSpec, state_values: Sequence[float], i: int, k: int,
                           steer_angle: Optional[float] = None) -> np.ndarray:
    """
    Lateral no-slip row of wheel (i, k) assembled with floating-point rotations from the
    world-frame wheel velocity. Dependent wheels need `steer_angle`.
    """
    layout = state_layout(spec)
    values = np.asarray(state_values, dtype=float)
    if steer_angle is None:
        if not is_independent(i, k):
            raise InvalidArgument(f"Wheel ({i}, {k}) is dependent; pass its steering angle")
        steer_angle = values[layout.index(f"theta_{i}_{k}")]
    headings = values[2:2 + spec.n]
    to_wheel = rotation_matrix(headings[i - 1] + steer_angle).T
    row = np.zeros(layout.dim)
    row[0:2] = to_wheel[1]
    for m in range(1, i):
        arm = spec.hitch_rear_point(m) - spec.hitch_front_point(m)
        row[1 + m] = (to_wheel @ rotation_matrix(headings[m - 1] + math.pi / 2) @ arm)[1]
    arm = spec.wheel_point(i, k) - spec.hitch_front_point(i)
    row[1 + i] = (to_wheel @ rotation_matrix(headings[i - 1] + math.pi / 2) @ arm)[1]
    return row


def numeric_pfaffian(spec: ValidatedSpec, state_values: Sequence[float],
                     dependent_angles: Optional[Mapping[Tuple[int, int], float]] = None) -> np.ndarray:
    """
    Numeric constraint matrix: independent rows, followed by one row per entry of
    `dependent_angles` when given.
    """
    rows = [numeric_constraint_row(spec, state_values, i, k) for i, k in spec.independent_wheels]
    for (i, k), steer_angle in (dependent_angles or {}).items():
        rows.append(numeric_constraint_row(spec, state_values, i, k, steer_angle))
    return np.vstack(rows)
