import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules.ackermann_kinematics import DEFAULT_EPS_V, point_velocities
from modules.errors import InvalidArgument, NonFiniteState, SingularState
from modules.kernel_solver import KinematicModel, state_derivative
from modules.vehicle_config import ValidatedSpec, recover_positions, rotate_points

DEFAULT_DT: float = 0.01
DEFAULT_EPS_YAW: float = 1e-3
HOLD_POLICIES = ('zoh', 'linear')
# sample lookup slack for step times that land a rounding error before a trace timestamp
TIME_TOLERANCE: float = 1e-9

FLAG_DEGENERATE = 1
FLAG_LOW_YAW = 2


@dataclass(frozen=True, eq=False)
class ControlTrace:
    """
    Sampled controls u = (v_1_1, omega_1_1, omega_1_2, omega_2_1 .. omega_n_1).

    hold is 'zoh' (piecewise constant) or 'linear' (interpolated); the last sample is held
    past the end of the trace.
    """

    times: np.ndarray
    controls: np.ndarray
    hold: str = 'zoh'
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
        if times.ndim != 1 or times.size == 0:
            raise InvalidArgument("Trace needs a non-empty 1-D time vector")
        if controls.shape[0] != times.size:
            raise InvalidArgument(f"Trace has {times.size} timestamps but {controls.shape[0]} control rows")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgument("Trace timestamps must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(controls))):
            raise InvalidArgument("Trace contains non-finite values")
        if self.hold not in HOLD_POLICIES:
            raise InvalidArgument(f"Unknown hold policy {self.hold!r}; use one of {HOLD_POLICIES}")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'controls', controls)

    @property
    def width(self) -> int:
        return self.controls.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def control_at(self, t: float) -> np.ndarray:
        if self.hold == 'linear':
            return np.array([np.interp(t, self.times, column) for column in self.controls.T])
        index = int(np.searchsorted(self.times, t + TIME_TOLERANCE, side='right')) - 1
        return self.controls[min(max(index, 0), self.times.size - 1)]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Integrated states plus everything recovered from them, one row per sample."""

    spec: ValidatedSpec
    model: KinematicModel
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    derivatives: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    wheel_paths: Dict[Tuple[int, int], np.ndarray]
    wheel_velocities: Dict[Tuple[int, int], np.ndarray]
    steering: Dict[str, np.ndarray]
    degenerate: np.ndarray
    eps_yaw: float = DEFAULT_EPS_YAW

    @property
    def yaw_rates(self) -> np.ndarray:
        return self.derivatives[:, 2:2 + self.spec.n]

    def __len__(self) -> int:
        return self.times.size

    def flags(self) -> np.ndarray:
        flags = np.where(self.degenerate, FLAG_DEGENERATE, 0)
        flags |= np.where(np.abs(self.yaw_rates[:, 0]) < self.eps_yaw, FLAG_LOW_YAW, 0)
        return flags.astype(int)

    def to_frame(self) -> pd.DataFrame:
        """Trajectory table: t, x1, y1, psi_*, theta_*, x_i, y_i, psidot_i, rwa_1_j, flags."""
        n = self.spec.n
        layout = self.model.layout
        columns: Dict[str, np.ndarray] = {'t': self.times, 'x1': self.states[:, 0], 'y1': self.states[:, 1]}
        for i in range(n):
            columns[f"psi_{i + 1}"] = self.states[:, 2 + i]
        for coordinate in layout.steer_coordinates:
            columns[coordinate.name] = self.states[:, layout.index(coordinate.name)]
        for i, k in self.spec.dependent_wheels:
            columns[f"theta_{i}_{k}"] = self.steering[f"theta_{i}_{k}"]
        for i in range(n):
            columns[f"x_{i + 1}"] = self.positions[:, i, 0]
            columns[f"y_{i + 1}"] = self.positions[:, i, 1]
        for i in range(n):
            columns[f"psidot_{i + 1}"] = self.yaw_rates[:, i]
        for j in range(2, n + 1):
            columns[f"rwa_1_{j}"] = rwa(self, 1, j).values
        columns['flags'] = self.flags()
        return pd.DataFrame(columns)


@dataclass(frozen=True, eq=False)
class RwaSeries:
    """
    Pointwise psi_dot_j / psi_dot_i (NaN where |psi_dot_i| < eps_yaw) and the peak-ratio
    metric max|psi_dot_j| / max|psi_dot_i|.
    """

    i: int
    j: int
    values: np.ndarray
    valid: np.ndarray
    peak_abs: Optional[float]
    peak_ratio: Optional[float]
    peak_lag: Optional[float]


def _rk4_step(model: KinematicModel, trace: ControlTrace, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    # zero-order hold keeps the step's opening sample for all four stages
    if trace.hold == 'zoh':
        u_start = u_mid = u_end = trace.control_at(t)
    else:
        u_start, u_mid, u_end = (trace.control_at(t + offset) for offset in (0.0, dt / 2, dt))
    k1 = state_derivative(model, x, u_start)
    k2 = state_derivative(model, x + dt / 2 * k1, u_mid)
    k3 = state_derivative(model, x + dt / 2 * k2, u_mid)
    k4 = state_derivative(model, x + dt * k3, u_end)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(model: KinematicModel, x0: Sequence[float], trace: ControlTrace, dt: float = DEFAULT_DT,
              t_end: Optional[float] = None, eps_v: float = DEFAULT_EPS_V, eps_yaw: float = DEFAULT_EPS_YAW,
              logger: Any = None) -> Trajectory:
    """
    Fixed-step classical Runge-Kutta integration of x_dot = J(x) u over a control trace.

    Args:
        model (KinematicModel): The derived model.
        x0 (Sequence[float]): Initial reduced state (2n+3 values).
        trace (ControlTrace): Controls; integration runs from its first to its last timestamp
            unless t_end is given.
        dt (float): Step size in seconds.

    Returns:
        Trajectory: All samples including the initial state.

    Raises:
        SingularState: With the failing sample index and the partial trajectory.
        NonFiniteState: If the state leaves the finite range.
    """
    x = np.asarray(x0, dtype=float)
    dim = model.layout.dim
    if x.shape != (dim,):
        raise InvalidArgument(f"Initial state must have {dim} entries, got shape {x.shape}")
    if not dt > 0:
        raise InvalidArgument(f"Step size must be positive, got {dt}")
    if trace.width != len(model.controls):
        raise InvalidArgument(f"Trace has {trace.width} control columns, model needs {len(model.controls)}")
    t0 = float(trace.times[0])
    t_end = float(trace.times[-1]) if t_end is None else float(t_end)
    steps = max(int(round((t_end - t0) / dt)), 0)
    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, dim))
    states[0] = x
    for sample in range(1, steps + 1):
        try:
            x = _rk4_step(model, trace, times[sample - 1], x, dt)
        except SingularState as e:
            partial = _recover(model, times[:sample], states[:sample], trace, eps_v, eps_yaw, tolerate=True)
            if logger is not None:
                logger.write_log('simulator', 'integrate', 'ERROR',
                                 f"Singular state after sample {sample - 1}: {e.report.description}")
            raise SingularState(e.report, sample - 1, partial) from e
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(sample)
        states[sample] = x
    trajectory = _recover(model, times, states, trace, eps_v, eps_yaw)
    if logger is not None:
        logger.write_log('simulator', 'integrate', 'INFO',
                         f"Integrated {steps} steps of {dt} s ({int(trajectory.degenerate.sum())} degenerate samples)")
    return trajectory


def _recover(model: KinematicModel, times: np.ndarray, states: np.ndarray, trace: ControlTrace,
             eps_v: float, eps_yaw: float, tolerate: bool = False) -> Optional[Trajectory]:
    spec = model.spec
    controls = np.vstack([trace.control_at(t) for t in times]) if times.size else np.zeros((0, trace.width))
    derivatives = np.empty_like(states)
    for sample, (x, u) in enumerate(zip(states, controls)):
        try:
            derivatives[sample] = state_derivative(model, x, u)
        except SingularState:
            if not tolerate:
                raise
            derivatives[sample] = np.nan
    positions, headings = recover_positions(spec, states)
    wheel_paths: Dict[Tuple[int, int], np.ndarray] = {}
    wheel_velocities: Dict[Tuple[int, int], np.ndarray] = {}
    steering: Dict[str, np.ndarray] = {}
    degenerate = np.zeros(times.size, dtype=bool)
    reverse = controls[:, 0] < 0 if times.size else np.zeros(0, dtype=bool)
    for i, k in spec.wheels:
        body = spec.wheel_point(i, k)
        wheel_paths[(i, k)] = positions[:, i - 1, :] + rotate_points(headings[:, i - 1], body)
        velocity = point_velocities(spec, states, derivatives, i, body)
        wheel_velocities[(i, k)] = velocity
        if (i, k) in spec.independent_wheels:
            continue
        speed = np.hypot(velocity[:, 0], velocity[:, 1])
        direction = np.arctan2(velocity[:, 1], velocity[:, 0]) + np.where(reverse, math.pi, 0.0)
        relative = direction - headings[:, i - 1]
        angles = np.arctan2(np.sin(relative), np.cos(relative))
        still = speed < eps_v
        degenerate |= still
        steering[f"theta_{i}_{k}"] = np.where(still, 0.0, angles)
    return Trajectory(spec, model, times, states, controls, derivatives, positions, headings,
                      wheel_paths, wheel_velocities, steering, degenerate, eps_yaw)


def _check_units(traj: Trajectory, *units: int) -> None:
    for unit in units:
        if not 1 <= unit <= traj.spec.n:
            raise InvalidArgument(f"Unit index {unit} outside 1..{traj.spec.n}")


def peak_time(traj: Trajectory, unit: int) -> float:
    """Time of the largest |psi_dot| of a unit (first occurrence)."""
    _check_units(traj, unit)
    return float(traj.times[int(np.nanargmax(np.abs(traj.yaw_rates[:, unit - 1])))])


def rwa(traj: Trajectory, i: int, j: int, eps_yaw: Optional[float] = None) -> RwaSeries:
    """
    Rearward yaw-rate amplification of unit j with respect to unit i (i <= j).

    Raises:
        InvalidArgument: For i > j or indices outside the vehicle.
    """
    _check_units(traj, i, j)
    if i > j:
        raise InvalidArgument(f"RWA needs i <= j, got i={i}, j={j}")
    eps_yaw = traj.eps_yaw if eps_yaw is None else eps_yaw
    lead = traj.yaw_rates[:, i - 1]
    follow = traj.yaw_rates[:, j - 1]
    valid = np.abs(lead) >= eps_yaw
    values = np.full(lead.shape, np.nan)
    np.divide(follow, lead, out=values, where=valid)
    peak_abs = float(np.nanmax(np.abs(values))) if valid.any() else None
    lead_peak = float(np.nanmax(np.abs(lead))) if lead.size else 0.0
    if lead_peak < eps_yaw:
        return RwaSeries(i, j, values, valid, peak_abs, None, None)
    peak_ratio = float(np.nanmax(np.abs(follow))) / lead_peak
    peak_lag = peak_time(traj, j) - peak_time(traj, i)
    return RwaSeries(i, j, values, valid, peak_abs, peak_ratio, peak_lag)


def _signed_distances(points: np.ndarray, polyline: np.ndarray, chunk: int = 256) -> Tuple[np.ndarray, np.ndarray]:
    """
    Signed perpendicular distance (left positive) of each point from a polyline whose first
    and last segments extend as lines, plus a mask of points lying behind its start.
    """
    starts = polyline[:-1]
    segments = polyline[1:] - starts
    lengths = np.einsum('ij,ij->i', segments, segments)
    usable = lengths > 0
    starts, segments, lengths = starts[usable], segments[usable], lengths[usable]
    result = np.zeros(points.shape[0])
    behind = np.zeros(points.shape[0], dtype=bool)
    if starts.shape[0] == 0:
        return np.hypot(*(points - polyline[0]).T), np.ones(points.shape[0], dtype=bool)
    lower = np.zeros(starts.shape[0])
    upper = np.ones(starts.shape[0])
    lower[0], upper[-1] = -np.inf, np.inf
    for begin in range(0, points.shape[0], chunk):
        block = points[begin:begin + chunk]
        offsets = block[:, None, :] - starts[None, :, :]
        raw = np.einsum('psj,sj->ps', offsets, segments) / lengths
        along = np.clip(raw, lower, upper)
        nearest = starts[None, :, :] + along[..., None] * segments[None, :, :]
        gaps = block[:, None, :] - nearest
        distances = np.hypot(gaps[..., 0], gaps[..., 1])
        best = np.argmin(distances, axis=1)
        rows = np.arange(block.shape[0])
        cross = segments[best, 0] * gaps[rows, best, 1] - segments[best, 1] * gaps[rows, best, 0]
        result[begin:begin + chunk] = np.where(cross < 0, -1.0, 1.0) * distances[rows, best]
        behind[begin:begin + chunk] = (best == 0) & (raw[rows, 0] < 0)
    return result, behind


def offtracking(traj: Trajectory, reference_unit: int, target_unit: int,
                reference_point: Sequence[float] = (0.0, 0.0),
                target_point: Sequence[float] = (0.0, 0.0), started_only: bool = False) -> np.ndarray:
    """
    Signed lateral deviation (m, left positive) of the target unit's reference point from
    the path traced by the reference unit's reference point. Reference points default to
    each unit's frame origin (wheel 1). A target still behind the start of that path is
    measured against the backward extension of its first segment, or reported as NaN when
    `started_only` is set.
    """
    _check_units(traj, reference_unit, target_unit)
    if len(traj) < 2:
        raise InvalidArgument("Offtracking needs at least 2 samples")
    reference = traj.positions[:, reference_unit - 1, :] + rotate_points(
        traj.headings[:, reference_unit - 1], reference_point)
    target = traj.positions[:, target_unit - 1, :] + rotate_points(traj.headings[:, target_unit - 1], target_point)
    deviations, behind = _signed_distances(target, reference)
    if started_only:
        deviations[behind] = np.nan
    return deviations


def inject_noise(trace: ControlTrace, sigma_v: float, sigma_omega: float, seed: int = 0) -> ControlTrace:
    """
    Additive Gaussian noise on the speed column and on every steering-rate column that is not
    identically zero. Deterministic for a given seed.
    """
    if sigma_v < 0 or sigma_omega < 0:
        raise InvalidArgument("Noise standard deviations must be non-negative")
    rng = np.random.default_rng(seed)
    controls = trace.controls.copy()
    count = controls.shape[0]
    if sigma_v > 0:
        controls[:, 0] += rng.normal(0.0, sigma_v, count)
    if sigma_omega > 0:
        for column in range(1, controls.shape[1]):
            if np.any(trace.controls[:, column] != 0):
                controls[:, column] += rng.normal(0.0, sigma_omega, count)
    return ControlTrace(trace.times.copy(), controls, trace.hold, trace.names)


def summarize(traj: Trajectory) -> Dict[str, Any]:
    """
    Peak RWA per (1, j) pair and peak |offtracking| per unit with respect to unit 1, taken
    over the samples where the unit has passed the start of unit 1's path (None if it never does).
    """
    pairs: Dict[str, Any] = {}
    for j in range(2, traj.spec.n + 1):
        series = rwa(traj, 1, j)
        pairs[f"rwa_1_{j}"] = {'peak_ratio': series.peak_ratio, 'peak_abs': series.peak_abs,
                               'peak_lag': series.peak_lag}
    tracking: Dict[str, Optional[float]] = {}
    for unit in range(2, traj.spec.n + 1):
        deviations = np.abs(offtracking(traj, 1, unit, started_only=True))
        tracking[f"unit_{unit}"] = float(np.nanmax(deviations)) if np.isfinite(deviations).any() else None
    return {
        'samples': len(traj),
        'duration': float(traj.times[-1] - traj.times[0]),
        'degenerate_samples': int(traj.degenerate.sum()),
        'rwa': pairs,
        'offtracking': tracking,
    }
