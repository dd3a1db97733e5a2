"""Built-in open-loop control traces (speed plus tractor wheel-2 steering rate)."""
import math
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from modules.errors import InvalidArgument
from modules.simulator import ControlTrace

SCENARIO_KINDS = ('step', 'sine', 'circle')

COMMON_DEFAULTS: Dict[str, float] = {'units': 1, 'duration': 20.0, 'sample_dt': 0.01, 'v': 5.0, 't_start': 1.0}
KIND_DEFAULTS: Dict[str, Dict[str, float]] = {
    'step': {'steer': 0.1, 'ramp': 0.5, 'hold': None},
    'sine': {'amplitude': 0.1, 'frequency': 0.2},
    'circle': {'steer': 0.2, 'ramp': 0.5},
}


def control_names(units: int) -> Tuple[str, ...]:
    return ('v', 'omega_1_1', 'omega_1_2') + tuple(f"omega_{i}_1" for i in range(2, units + 1))


def _resolve(kind: str, params: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    if kind not in SCENARIO_KINDS:
        raise InvalidArgument(f"Unknown scenario kind {kind!r}; use one of {SCENARIO_KINDS}")
    defaults = {**COMMON_DEFAULTS, **KIND_DEFAULTS[kind]}
    params = dict(params or {})
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise InvalidArgument(f"Unknown {kind} scenario parameter(s) {unknown}")
    resolved = {**defaults, **params}
    for name, value in resolved.items():
        if value is None:
            continue
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise InvalidArgument(f"Scenario parameter {name} must be a finite number, got {value!r}")
    if resolved['duration'] <= 0:
        raise InvalidArgument(f"Scenario duration must be positive, got {resolved['duration']}")
    if resolved['sample_dt'] <= 0:
        raise InvalidArgument(f"sample_dt must be positive, got {resolved['sample_dt']}")
    if int(resolved['units']) != resolved['units'] or resolved['units'] < 1:
        raise InvalidArgument(f"units must be a positive integer, got {resolved['units']}")
    if resolved['t_start'] < 0:
        raise InvalidArgument("t_start must not be negative")
    if 'ramp' in resolved and resolved['ramp'] <= 0:
        raise InvalidArgument(f"ramp must be positive, got {resolved['ramp']}")
    if resolved.get('hold') is not None and resolved['hold'] < 0:
        raise InvalidArgument("hold must not be negative")
    if kind == 'sine' and resolved['frequency'] <= 0:
        raise InvalidArgument("frequency must be positive")
    return resolved


def _ramp_rates(midpoints: np.ndarray, start: float, ramp: float, steer: float,
                hold: Optional[float]) -> np.ndarray:
    rates = np.where((midpoints >= start) & (midpoints < start + ramp), steer / ramp, 0.0)
    if hold is not None:
        release = start + ramp + hold
        rates = np.where((midpoints >= release) & (midpoints < release + ramp), -steer / ramp, rates)
    return rates


def build_scenario(kind: str, params: Optional[Mapping[str, Any]] = None) -> ControlTrace:
    """
    Generate a scenario trace.

    step    ramp theta_1_2 to `steer` over `ramp` s from `t_start`, hold it for `hold` s (default:
            until the end), then ramp back to zero. Zero-order hold.
    sine    theta_1_2(t) = amplitude * sin(2 pi frequency (t - t_start)) from `t_start`. Linear hold.
    circle  ramp to `steer` and keep it. Zero-order hold.

    Raises:
        InvalidArgument: For unknown kinds or parameters and non-positive durations.
    """
    p = _resolve(kind, params)
    count = int(round(p['duration'] / p['sample_dt']))
    times = np.arange(count + 1) * p['sample_dt']
    names = control_names(int(p['units']))
    controls = np.zeros((times.size, len(names)))
    controls[:, 0] = p['v']
    if kind == 'sine':
        phase = 2 * math.pi * p['frequency'] * (times - p['t_start'])
        rates = p['amplitude'] * 2 * math.pi * p['frequency'] * np.cos(phase)
        controls[:, 2] = np.where(times >= p['t_start'], rates, 0.0)
        return ControlTrace(times, controls, 'linear', names)
    midpoints = times + p['sample_dt'] / 2
    hold = p['hold'] if kind == 'step' else None
    controls[:, 2] = _ramp_rates(midpoints, p['t_start'], p['ramp'], p['steer'], hold)
    return ControlTrace(times, controls, 'zoh', names)
