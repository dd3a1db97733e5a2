"""
Time-series file formats (UTF-8 CSV, header row, '.' decimal separator, LF line endings).

Control trace:   t, v, omega_1_1, omega_1_2, omega_2_1, ..., omega_n_1
Trajectory:      t, x1, y1, psi_1..psi_n, theta_1_1, theta_1_2, theta_2_1..theta_n_1,
                 dependent theta_i_k (unit, wheel order), x_i, y_i (i = 1..n),
                 psidot_i (i = 1..n), rwa_1_j (j = 2..n, empty where masked), flags

`flags` is a bit field: 1 = a dependent wheel was at rest (its angle reported as 0),
2 = tractor yaw rate below the RWA masking threshold.
"""
from typing import List

import numpy as np
import pandas as pd

from modules.errors import TraceFormatError
from modules.vehicle_config import ValidatedSpec

TIME_COLUMN = 't'
SPEED_COLUMN = 'v'


def trace_columns(spec: ValidatedSpec) -> List[str]:
    return [TIME_COLUMN, SPEED_COLUMN] + [f"omega_{i}_{k}" for i, k in spec.independent_wheels]


def steering_rate_columns(spec: ValidatedSpec) -> List[str]:
    return trace_columns(spec)[2:]


def trajectory_columns(spec: ValidatedSpec) -> List[str]:
    n = spec.n
    columns = [TIME_COLUMN, 'x1', 'y1'] + [f"psi_{i}" for i in range(1, n + 1)]
    columns += [f"theta_{i}_{k}" for i, k in spec.independent_wheels]
    columns += [f"theta_{i}_{k}" for i, k in spec.dependent_wheels]
    for i in range(1, n + 1):
        columns += [f"x_{i}", f"y_{i}"]
    columns += [f"psidot_{i}" for i in range(1, n + 1)]
    columns += [f"rwa_1_{j}" for j in range(2, n + 1)]
    return columns + ['flags']


def check_trace_frame(frame: pd.DataFrame, spec: ValidatedSpec) -> pd.DataFrame:
    """
    Validate a raw trace table and return it as floats.

    Raises:
        TraceFormatError: With the offending (1-based data) row and column.
    """
    expected = trace_columns(spec)
    actual = [str(column).strip() for column in frame.columns]
    if actual != expected:
        missing = [column for column in expected if column not in actual]
        extra = [column for column in actual if column not in expected]
        if missing or extra:
            raise TraceFormatError(f"Trace columns {actual} do not match {expected}",
                                   column=(missing or extra)[0])
        raise TraceFormatError(f"Trace columns must be ordered as {expected}")
    frame = frame.copy()
    frame.columns = expected
    if frame.empty:
        raise TraceFormatError("Trace has no samples")
    for column in expected:
        values = pd.to_numeric(frame[column], errors='coerce')
        bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
            raise TraceFormatError("Value is not a finite number", row=row, column=column)
        frame[column] = values.astype(float)
    steps = np.diff(frame[TIME_COLUMN].to_numpy())
    if np.any(steps <= 0):
        row = int(np.flatnonzero(steps <= 0)[0]) + 2
        raise TraceFormatError("Timestamps must be strictly increasing", row=row, column=TIME_COLUMN)
    return frame
