import json
import os
import sys
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from modules.errors import ConfigError, TraceFormatError
from modules.simulator import ControlTrace, Trajectory
from modules.vehicle_config import ValidatedSpec, VehicleSpec
from schemas.traces import check_trace_frame, steering_rate_columns, trace_columns
from schemas.vehicle import parse_vehicle_config, vehicle_config_document

STDOUT = '-'


class FileStore:
    """
    Reads and writes the toolkit's files on the local file system.

    Attributes:
        logger (LoggingManager): A logger instance to log operations.
    """

    def __init__(self, logger: Any):
        """
        Initializes the FileStore with a logger instance.

        Args:
            logger (LoggingManager): An instance of the LoggingManager to store logs.
        """
        self.logger = logger

    @staticmethod
    def _prepare(path: str) -> None:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)

    def write_text(self, text: str, path: Optional[str]) -> None:
        """Write text to `path`, or to stdout when path is None or '-'."""
        if path in (None, STDOUT):
            sys.stdout.write(text)
            return
        try:
            self._prepare(path)
            with open(path, 'w', encoding='utf-8', newline='\n') as handle:
                handle.write(text)
            self.logger.write_log('file_store', 'write_text', 'DEBUG', f'Text written to {path}')
        except Exception as e:
            self.logger.write_log('file_store', 'write_text', 'ERROR', f'Error writing text to {path}: {str(e)}')
            raise

    def write_json_data(self, data: Any, path: Optional[str]) -> None:
        """
        Writes JSON data to the specified file (UTF-8, sorted keys, trailing newline).

        Args:
            data (Any): The JSON-serializable data to be written.
            path (str): Destination file.
        """
        try:
            json_data = json.dumps(data, indent=2, sort_keys=True, allow_nan=False)
            self.write_text(json_data + '\n', path)
        except Exception as e:
            self.logger.write_log('file_store', 'write_json_data', 'ERROR', f'Error writing data to {path}: {str(e)}')
            raise

    def read_json_data(self, path: str) -> Any:
        """
        Reads JSON data from the specified file.

        Raises:
            ConfigError: If the file is missing or is not valid JSON.
        """
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                data = json.load(handle)
            self.logger.write_log('file_store', 'read_json_data', 'DEBUG', f'Data read from {path}')
            return data
        except (OSError, json.JSONDecodeError) as e:
            self.logger.write_log('file_store', 'read_json_data', 'ERROR', f'Error reading data from {path}: {str(e)}')
            raise ConfigError(f"Cannot read JSON file {path}: {e}") from e

    def read_vehicle_config(self, path: str) -> Tuple[VehicleSpec, str]:
        """Parse a vehicle config file into (VehicleSpec, angle_unit)."""
        spec, angle_unit = parse_vehicle_config(self.read_json_data(path))
        self.logger.write_log('file_store', 'read_vehicle_config', 'INFO',
                              f'Vehicle with {spec.n} unit(s) read from {path}')
        return spec, angle_unit

    def write_vehicle_config(self, spec: VehicleSpec, path: str, angle_unit: str = 'rad') -> None:
        self.write_json_data(vehicle_config_document(spec, angle_unit), path)

    def read_trace(self, path: str, spec: ValidatedSpec, angle_unit: str = 'rad', hold: str = 'zoh') -> ControlTrace:
        """
        Reads a control trace CSV; steering-rate columns are converted to rad/s when the
        vehicle declares degrees.

        Raises:
            TraceFormatError: With row/column diagnostics for malformed files.
        """
        try:
            frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            self.logger.write_log('file_store', 'read_trace', 'ERROR', f'Error reading trace {path}: {str(e)}')
            raise TraceFormatError(f"Cannot parse trace {path}: {e}") from e
        frame = check_trace_frame(frame, spec)
        if angle_unit == 'deg':
            for column in steering_rate_columns(spec):
                frame[column] = np.deg2rad(frame[column])
        columns = trace_columns(spec)
        self.logger.write_log('file_store', 'read_trace', 'INFO', f'{len(frame)} trace samples read from {path}')
        return ControlTrace(frame['t'].to_numpy(), frame[columns[1:]].to_numpy(), hold, tuple(columns[1:]))

    def write_trace(self, trace: ControlTrace, path: Optional[str], columns: Optional[Tuple[str, ...]] = None) -> None:
        names = list(columns or trace.names)
        frame = pd.DataFrame(trace.controls, columns=names)
        frame.insert(0, 't', trace.times)
        self.write_frame(frame, path)

    def write_frame(self, frame: pd.DataFrame, path: Optional[str]) -> None:
        if path in (None, STDOUT):
            frame.to_csv(sys.stdout, index=False, lineterminator='\n')
            return
        try:
            self._prepare(path)
            frame.to_csv(path, index=False, lineterminator='\n', encoding='utf-8', na_rep='')
            self.logger.write_log('file_store', 'write_frame', 'DEBUG', f'{len(frame)} rows written to {path}')
        except Exception as e:
            self.logger.write_log('file_store', 'write_frame', 'ERROR', f'Error writing {path}: {str(e)}')
            raise

    def write_parquet_data(self, frame: pd.DataFrame, path: str) -> None:
        """
        Writes a DataFrame to a parquet file.

        Args:
            frame (pd.DataFrame): The DataFrame to be written.
            path (str): Destination file.
        """
        try:
            self._prepare(path)
            table = pa.Table.from_pandas(frame, preserve_index=False)
            pq.write_table(
                table,
                path,
                compression='snappy',
                use_dictionary=True,
                write_statistics=True
            )
            self.logger.write_log('file_store', 'write_parquet_data', 'DEBUG', f'Parquet data written to {path}')
        except Exception as e:
            self.logger.write_log('file_store', 'write_parquet_data', 'ERROR',
                                  f'Error writing parquet data to {path}: {str(e)}')
            raise

    def write_trajectory(self, trajectory: Trajectory, path: str, file_format: str = 'csv') -> pd.DataFrame:
        """Writes the trajectory table as CSV or parquet and returns it."""
        frame = trajectory.to_frame()
        if file_format == 'parquet':
            self.write_parquet_data(frame, path)
        elif file_format == 'csv':
            self.write_frame(frame, path)
        else:
            raise ConfigError(f"Unknown trajectory format {file_format!r}")
        return frame

    def read_inline_json(self, path_or_json: str) -> Any:
        """JSON from a file when `path_or_json` names one, otherwise the argument parsed as JSON."""
        if os.path.isfile(path_or_json):
            return self.read_json_data(path_or_json)
        try:
            return json.loads(path_or_json)
        except json.JSONDecodeError as e:
            self.logger.write_log('file_store', 'read_inline_json', 'ERROR', f'Argument is not JSON: {str(e)}')
            raise ConfigError(f"{path_or_json!r} is neither a JSON file nor inline JSON: {e}") from None

    def read_state(self, path_or_json: str, names: Tuple[str, ...], angle_unit: str = 'rad') -> np.ndarray:
        """
        Reads a state given as a JSON file or inline JSON: either a list in layout order or an
        object keyed by coordinate name (missing entries default to 0). Angles follow angle_unit.
        """
        document = self.read_inline_json(path_or_json)
        if isinstance(document, list):
            if len(document) != len(names):
                raise ConfigError(f"State needs {len(names)} values, got {len(document)}")
            values = document
        elif isinstance(document, dict):
            unknown = sorted(set(document) - set(names))
            if unknown:
                raise ConfigError(f"Unknown state coordinate(s) {unknown}")
            values = [document.get(name, 0.0) for name in names]
        else:
            raise ConfigError("State must be a JSON list or object")
        try:
            state = np.array([float(value) for value in values])
        except (TypeError, ValueError):
            raise ConfigError("State values must be numbers") from None
        if not np.all(np.isfinite(state)):
            raise ConfigError("State values must be finite")
        if angle_unit == 'deg':
            angular = np.array([not name.startswith(('x_', 'y_')) for name in names])
            state[angular] = np.deg2rad(state[angular])
        return state

    def read_controls(self, path_or_json: str, names: Tuple[str, ...], angle_unit: str = 'rad') -> np.ndarray:
        """Control vector (list or object keyed by control name); steering rates follow angle_unit."""
        values = self.read_state(path_or_json, names, 'rad')
        if angle_unit == 'deg':
            values[1:] = np.deg2rad(values[1:])
        return values

    def summary_json(self, summary: Dict[str, Any]) -> str:
        return json.dumps(summary, indent=2, sort_keys=True)
