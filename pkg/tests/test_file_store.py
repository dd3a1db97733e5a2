import json
import math

import numpy as np
import pandas as pd
import pytest

from conftest import config_path
from modules.errors import ConfigError, TraceFormatError
from modules.file_store import FileStore
from modules.simulator import ControlTrace, integrate
from modules.vehicle_config import validate
from schemas.traces import trace_columns

HEADER = 't,v,omega_1_1,omega_1_2\n'


@pytest.fixture
def store(logger):
    return FileStore(logger)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_read_vehicle_config(store):
    spec, angle_unit = store.read_vehicle_config(config_path('one_trailer_off_axle'))
    assert spec.n == 2
    assert angle_unit == 'rad'


def test_missing_file_is_a_config_error(store, tmp_path):
    with pytest.raises(ConfigError):
        store.read_json_data(str(tmp_path / 'absent.json'))
    with pytest.raises(ConfigError):
        store.read_json_data(write(tmp_path, 'broken.json', '{"units": ['))


def test_vehicle_config_round_trip(store, tmp_path, bicycle):
    path = str(tmp_path / 'nested' / 'bicycle.json')
    store.write_vehicle_config(bicycle.original, path, 'deg')
    spec, angle_unit = store.read_vehicle_config(path)
    assert angle_unit == 'deg'
    assert spec == bicycle.original


def test_read_trace(store, tmp_path, bicycle):
    path = write(tmp_path, 'trace.csv', HEADER + '0,5,0,0\n0.5,5,0,0.1\n1.0,5,0,0\n')
    trace = store.read_trace(path, bicycle)
    assert trace.times.tolist() == [0.0, 0.5, 1.0]
    assert trace.controls[1, 2] == 0.1
    assert trace.names == tuple(trace_columns(bicycle)[1:])


def test_read_trace_in_degrees(store, tmp_path, bicycle):
    path = write(tmp_path, 'trace.csv', HEADER + '0,5,0,90\n1,5,0,0\n')
    trace = store.read_trace(path, bicycle, angle_unit='deg', hold='linear')
    assert trace.controls[0, 2] == pytest.approx(math.pi / 2)
    assert trace.controls[0, 0] == 5.0
    assert trace.hold == 'linear'


@pytest.mark.parametrize('body, row, column', [
    ('0,5,0,0\n1,5,x,0\n', 2, 'omega_1_1'),
    ('0,5,0,0\n1,,0,0\n', 2, 'v'),
    ('0,5,0,0\n0,5,0,0\n', 2, 't'),
    ('0,5,0,inf\n', 1, 'omega_1_2'),
])
def test_malformed_trace_reports_location(store, tmp_path, bicycle, body, row, column):
    path = write(tmp_path, 'trace.csv', HEADER + body)
    with pytest.raises(TraceFormatError) as error:
        store.read_trace(path, bicycle)
    assert error.value.row == row
    assert error.value.column == column


def test_trace_column_checks(store, tmp_path, bicycle):
    with pytest.raises(TraceFormatError) as error:
        store.read_trace(write(tmp_path, 'a.csv', 't,v,omega_1_1\n0,1,0\n'), bicycle)
    assert error.value.column == 'omega_1_2'
    with pytest.raises(TraceFormatError):
        store.read_trace(write(tmp_path, 'b.csv', 't,v,omega_1_2,omega_1_1\n0,1,0,0\n'), bicycle)
    with pytest.raises(TraceFormatError):
        store.read_trace(write(tmp_path, 'c.csv', HEADER), bicycle)


def test_write_trace_to_stdout(store, capsys):
    trace = ControlTrace(np.array([0.0, 1.0]), np.array([[5.0, 0.0, 0.0], [5.0, 0.0, 0.1]]),
                         names=('v', 'omega_1_1', 'omega_1_2'))
    store.write_trace(trace, None)
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == HEADER.strip()
    assert lines[-1] == '1.0,5.0,0.0,0.1'


def test_write_trajectory(store, tmp_path, bicycle_model):
    trace = ControlTrace(np.array([0.0, 1.0]), np.array([[2.0, 0.0, 0.1], [2.0, 0.0, 0.1]]))
    trajectory = integrate(bicycle_model, np.zeros(5), trace, dt=0.1)
    csv_path = str(tmp_path / 'run.csv')
    frame = store.write_trajectory(trajectory, csv_path)
    assert list(pd.read_csv(csv_path).columns) == list(frame.columns)
    parquet_path = str(tmp_path / 'run.parquet')
    store.write_trajectory(trajectory, parquet_path, 'parquet')
    restored = pd.read_parquet(parquet_path)
    assert np.allclose(restored['x1'], frame['x1'])
    with pytest.raises(ConfigError):
        store.write_trajectory(trajectory, csv_path, 'xlsx')


def test_write_json_is_sorted_with_newline(store, tmp_path):
    path = str(tmp_path / 'out.json')
    store.write_json_data({'b': 1, 'a': 2}, path)
    with open(path, 'r', encoding='utf-8') as handle:
        text = handle.read()
    assert text.endswith('}\n')
    assert text.index('"a"') < text.index('"b"')


def test_read_inline_json(store, tmp_path):
    assert store.read_inline_json('{"duration": 3}') == {'duration': 3}
    path = write(tmp_path, 'params.json', json.dumps({'v': 2}))
    assert store.read_inline_json(path) == {'v': 2}
    with pytest.raises(ConfigError):
        store.read_inline_json('not json')


def test_read_state(store, on_axle_model):
    names = on_axle_model.layout.names
    as_list = store.read_state(json.dumps([0, 0, 0.1, 0, 0, 0.2, 0]), names)
    as_dict = store.read_state('{"psi_1": 0.1, "theta_1_2": 0.2}', names)
    assert np.array_equal(as_list, as_dict)
    in_degrees = store.read_state('{"x_1": 90, "theta_1_2": 90}', names, 'deg')
    assert in_degrees[0] == 90.0
    assert in_degrees[names.index('theta_1_2')] == pytest.approx(math.pi / 2)


@pytest.mark.parametrize('document', ['[1, 2]', '{"psi_9": 1}', '"flat"', '[0, 0, 0, 0, 0, "a", 0]',
                                      '[0, 0, 0, 0, 0, NaN, 0]'])
def test_read_state_errors(store, on_axle_model, document):
    with pytest.raises(ConfigError):
        store.read_state(document, on_axle_model.layout.names)


def test_read_controls_converts_only_rates(store, bicycle_model):
    controls = store.read_controls('{"v_1_1": 3, "omega_1_2": 180}', bicycle_model.control_names, 'deg')
    assert controls[0] == 3.0
    assert controls[2] == pytest.approx(math.pi)


def test_summary_json_is_stable(store):
    assert store.summary_json({'b': None, 'a': 1.5}) == '{\n  "a": 1.5,\n  "b": null\n}'


def test_validated_config_rejects_unknown_keys(store, tmp_path):
    path = write(tmp_path, 'bad.json', json.dumps({'units': [], 'mass': 3}))
    with pytest.raises(ConfigError):
        store.read_vehicle_config(path)
    path = write(tmp_path, 'empty.json', json.dumps({'units': []}))
    spec, _ = store.read_vehicle_config(path)
    with pytest.raises(ConfigError):
        validate(spec)
