from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from modules.constraint_builder import PfaffianMatrix, build_pfaffian
from modules.errors import DivisionNearZero, InvalidArgument, SingularState, StructurallySingular
from modules.symbolic_core import (DEFAULT_EPS_DIV, ONE, ZERO, CompiledExprs, Cos, Neg, Param, Product, Quotient,
                                   ScalarExpr, Sin, Sum, evaluate, node_count, simplify)
from modules.vehicle_config import StateLayout, ValidatedSpec, VehicleSpec, validate


@dataclass(frozen=True)
class ControlDescriptor:
    name: str
    kind: str
    unit: int
    wheel: int


@dataclass(frozen=True)
class SingularityReport:
    """Denominator divided by while solving for psi_dot of `location`'s unit."""

    location: Tuple[int, int]
    denominator: ScalarExpr
    description: str


@dataclass(frozen=True)
class KinematicModel:
    """
    Closed-form model x_dot = J(x) u with J = [F 0; 0 I].

    F holds (f_x_1, f_y_1, f_psi_1 .. f_psi_n); `recursive_F` is the same column with every
    f_psi_i written in terms of the earlier f_psi_m placeholders.
    """

    spec: ValidatedSpec
    layout: StateLayout
    controls: Tuple[ControlDescriptor, ...]
    F: Tuple[ScalarExpr, ...]
    recursive_F: Tuple[ScalarExpr, ...]
    singularities: Tuple[SingularityReport, ...]
    pfaffian: PfaffianMatrix
    evaluator: CompiledExprs = field(compare=False, repr=False)
    eps_div: float = DEFAULT_EPS_DIV

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def F_names(self) -> Tuple[str, ...]:
        return ('f_x_1', 'f_y_1') + tuple(f"f_psi_{i}" for i in range(1, self.n + 1))

    @property
    def control_names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.controls)

    @property
    def jacobian(self) -> List[List[ScalarExpr]]:
        """Symbolic (2n+3) x (n+2) block matrix."""
        rows: List[List[ScalarExpr]] = []
        width = len(self.controls)
        for expr in self.F:
            rows.append([expr] + [ZERO] * (width - 1))
        for j in range(1, width):
            rows.append([ONE if column == j else ZERO for column in range(width)])
        return rows

    def node_count(self) -> int:
        return node_count(self.F)


def _controls(spec: ValidatedSpec) -> Tuple[ControlDescriptor, ...]:
    controls = [ControlDescriptor('v_1_1', 'speed', 1, 1)]
    controls += [ControlDescriptor(f"omega_{i}_{k}", 'steer_rate', i, k) for i, k in spec.independent_wheels]
    return tuple(controls)


def solve_kernel(pfaffian: PfaffianMatrix, logger: Any = None, eps_div: float = DEFAULT_EPS_DIV) -> KinematicModel:
    """
    Back-substitute the kernel of A(x) row by row.

    Wheel (1,1) fixes the direction of p_1_dot, so with v the wheel-1 speed the x/y columns of
    every later row collapse to sin(h_1 - h_row), h being the wheel heading psi_i + theta_{i,k}.
    Each row then determines f_psi_i from the already solved f_psi_m, m < i.

    Args:
        pfaffian (PfaffianMatrix): Independent-wheel rows of a validated vehicle.
        logger (LoggingManager): Optional logger.
        eps_div (float): Singularity threshold used by the compiled evaluator.

    Returns:
        KinematicModel: The derived model.

    Raises:
        StructurallySingular: If a psi_i coefficient simplifies to zero.
    """
    spec = pfaffian.spec
    try:
        rows = pfaffian.rows
        reference = rows[0]
        if reference.source != (1, 1):
            raise InvalidArgument("The first constraint row must belong to wheel (1, 1)")
        heading = reference.heading
        solved: List[ScalarExpr] = [simplify(Cos(heading)), simplify(Sin(heading))]
        recursive: List[ScalarExpr] = list(solved)
        reports: List[SingularityReport] = []

        for row in rows[1:]:
            i, k = row.source
            denominator = row.coefficient(f"psi_{i}")
            if denominator is ZERO:
                raise StructurallySingular(
                    (i, k), f"the psi_{i} coefficient of wheel ({i}, {k}) is identically zero")
            lateral = simplify(Sin(heading - row.heading))
            known = [row.coefficient(f"psi_{m}") for m in range(1, i)]
            substituted = Sum(lateral, *(Product(coef, solved[1 + m]) for m, coef in enumerate(known, start=1)))
            placeholder = Sum(lateral, *(Product(coef, Param(f"f_psi_{m}")) for m, coef in enumerate(known, start=1)))
            solved.append(simplify(Quotient(Neg(substituted), denominator)))
            recursive.append(simplify(Quotient(Neg(placeholder), denominator)))
            reports.append(SingularityReport(
                (i, k), denominator, f"psi_{i} coefficient of wheel ({i}, {k}) vanishes"))

        layout = pfaffian.layout
        evaluator = CompiledExprs(solved, layout.angle_vars, spec.params.keys(), eps_div)
        model = KinematicModel(spec, layout, _controls(spec), tuple(solved), tuple(recursive),
                               tuple(reports), pfaffian, evaluator, eps_div)
        if logger is not None:
            logger.write_log('kernel_solver', 'solve_kernel', 'INFO',
                             f"Derived {len(solved)} model entries ({model.node_count()} nodes) for {spec.n} unit(s)")
        return model
    except StructurallySingular as e:
        if logger is not None:
            logger.write_log('kernel_solver', 'solve_kernel', 'ERROR', str(e))
        raise
    except Exception as e:
        if logger is not None:
            logger.write_log('kernel_solver', 'solve_kernel', 'ERROR', f"Error solving kernel: {str(e)}")
        raise


def derive(spec: Union[VehicleSpec, ValidatedSpec], logger: Any = None,
           eps_div: float = DEFAULT_EPS_DIV) -> KinematicModel:
    """Validate (if needed), build A(x) and solve its kernel."""
    if isinstance(spec, VehicleSpec):
        spec = validate(spec, logger)
    return solve_kernel(build_pfaffian(spec, logger), logger, eps_div)


def as_state_vector(model: KinematicModel, state_values: Union[Sequence[float], Mapping[str, float]]) -> np.ndarray:
    if isinstance(state_values, Mapping):
        try:
            return np.array([float(state_values[name]) for name in model.layout.names])
        except KeyError as e:
            raise InvalidArgument(f"State value for {e.args[0]} missing") from None
    values = np.asarray(state_values, dtype=float)
    if values.shape != (model.layout.dim,):
        raise InvalidArgument(f"State must have {model.layout.dim} entries, got shape {values.shape}")
    return values


def _locate_singularity(model: KinematicModel, values: np.ndarray, error: DivisionNearZero) -> SingularityReport:
    bindings = model.layout.bindings(values)
    worst: Optional[Tuple[float, SingularityReport]] = None
    for report in model.singularities:
        try:
            magnitude = abs(evaluate(report.denominator, bindings, model.spec.params))
        except DivisionNearZero:
            magnitude = 0.0
        if worst is None or magnitude < worst[0]:
            worst = (magnitude, report)
    if worst is not None and worst[0] < model.eps_div:
        return worst[1]
    return SingularityReport((0, 0), error.denominator, f"denominator evaluated to {error.value!r}")


def evaluate_model(model: KinematicModel, state_values: Union[Sequence[float], Mapping[str, float]]
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Numeric F (n+2) and J ((2n+3) x (n+2)) at one state.

    Raises:
        SingularState: If a denominator falls below the model's eps_div.
    """
    values = as_state_vector(model, state_values)
    angles = values[2:]
    try:
        f_values = np.array(model.evaluator(angles, model.spec.params))
    except DivisionNearZero as e:
        raise SingularState(_locate_singularity(model, values, e)) from e
    width = len(model.controls)
    jacobian = np.zeros((model.layout.dim, width))
    jacobian[:len(f_values), 0] = f_values
    jacobian[len(f_values):, 1:] = np.eye(width - 1)
    return f_values, jacobian


def state_derivative(model: KinematicModel, state_values: Union[Sequence[float], Mapping[str, float]],
                     u: Sequence[float]) -> np.ndarray:
    """x_dot = (F u_1 ; steering rates passed through)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (len(model.controls),):
        raise InvalidArgument(f"Control vector must have {len(model.controls)} entries, got shape {u.shape}")
    f_values, _ = evaluate_model(model, state_values)
    return np.concatenate([f_values * u[0], u[1:]])
