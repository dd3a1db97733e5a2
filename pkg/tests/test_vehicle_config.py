import math

import numpy as np
import pytest

from conftest import chain, load_config, with_unit
from modules.custom_logger import LoggingManager
from modules.errors import (ConfigError, EmptyVehicle, InvalidArgument, InvalidGeometry, MissingHitch,
                            TractorTooFewWheels, UnexpectedHitch)
from modules.symbolic_core import ZERO, Param
from modules.vehicle_config import (UnitSpec, VehicleSpec, WheelSpec, is_independent, recover_poses,
                                    recover_positions, validate, wheel_world_position)
from schemas.vehicle import parse_vehicle_config, vehicle_config_document


def test_empty_vehicle():
    with pytest.raises(EmptyVehicle):
        validate(VehicleSpec(()))


def test_tractor_needs_two_wheels():
    spec = VehicleSpec((UnitSpec((WheelSpec((0.0, 0.0)),), None, None),))
    with pytest.raises(TractorTooFewWheels):
        validate(spec)


def test_missing_front_hitch_on_trailer():
    spec = with_unit(chain(1), 2, hitch_front=None)
    with pytest.raises(MissingHitch) as error:
        validate(spec)
    assert error.value.exit_code == 2


def test_missing_rear_hitch_before_a_trailer():
    spec = with_unit(chain(2), 2, hitch_rear=None)
    with pytest.raises(MissingHitch):
        validate(spec)


def test_rear_hitch_on_last_unit_is_rejected():
    spec = with_unit(chain(1), 2, hitch_rear=(0.0, 0.0))
    with pytest.raises(UnexpectedHitch):
        validate(spec)


def test_front_hitch_on_tractor_is_rejected():
    spec = with_unit(chain(0), 1, hitch_front=(1.0, 0.0))
    with pytest.raises(UnexpectedHitch):
        validate(spec)


def test_non_finite_geometry():
    spec = with_unit(chain(0), 1, wheels=(WheelSpec((0.0, 0.0)), WheelSpec((math.inf, 0.0))))
    with pytest.raises(InvalidGeometry):
        validate(spec)


def test_validation_rebases_onto_wheel_one():
    logger = LoggingManager('error')
    spec = VehicleSpec((UnitSpec((WheelSpec((1.0, 0.5)), WheelSpec((4.0, 0.5)), WheelSpec((4.0, 1.5))), None, None),))
    validated = validate(spec, logger)
    assert validated.unit(1).wheels[0].position == (0.0, 0.0)
    assert validated.unit(1).wheels[2].position == (3.0, 1.0)
    assert validated.offsets == ((1.0, 0.5),)
    assert validated.original is spec
    assert len(logger.rows('WARNING')) == 1


def test_independent_wheels():
    validated = validate(load_config('three_axle_tractor'))
    assert validated.independent_wheels == [(1, 1), (1, 2), (2, 1)]
    assert (1, 3) in validated.dependent_wheels
    assert is_independent(1, 2) and not is_independent(2, 2)


def test_geometry_parameters_and_structural_zeros(bicycle):
    assert bicycle.params['a_1_2'] == 3.0
    assert bicycle.wheel_vector(1, 2).x is Param('a_1_2')
    assert bicycle.wheel_vector(1, 2).y is ZERO
    assert bicycle.hitch_front_vector(1).x is ZERO


def test_state_layout():
    validated = validate(chain(2))
    layout = validated.state_layout()
    assert layout.names == ('x_1', 'y_1', 'psi_1', 'psi_2', 'psi_3', 'theta_1_1', 'theta_1_2', 'theta_2_1',
                            'theta_3_1')
    assert layout.dim == 2 * validated.n + 3
    assert layout.index('psi_2') == 3
    with pytest.raises(InvalidArgument):
        layout.index('theta_9_9')


def test_full_layout_appends_dependent_angles(car):
    names = car.full_layout().names
    assert names[-4:] == ('theta_1_3', 'theta_1_4', 'theta_1_5', 'theta_1_6')


def test_pose_recovery_through_hitch():
    spec = validate(VehicleSpec((
        UnitSpec((WheelSpec((0.0, 0.0)), WheelSpec((3.0, 0.0))), None, (-1.0, 0.0)),
        UnitSpec((WheelSpec((0.0, 0.0)),), (2.0, 0.0), None),
    )))
    poses = recover_poses(spec, [0.0] * 7)
    assert poses[1].position == pytest.approx([-3.0, 0.0])


def test_pose_recovery_methods_agree():
    spec = validate(chain(3, offset=0.7))
    rng = np.random.default_rng(3)
    state = rng.uniform(-1.0, 1.0, spec.state_layout().dim)
    iterative = recover_poses(spec, state, 'iterative')
    closed = recover_poses(spec, state, 'closed')
    batch, headings = recover_positions(spec, state[None, :])
    for index, (first, second) in enumerate(zip(iterative, closed)):
        assert first.position == pytest.approx(second.position, abs=1e-12)
        assert batch[0, index] == pytest.approx(first.position, abs=1e-12)
        assert headings[0, index] == first.heading
    with pytest.raises(InvalidArgument):
        recover_poses(spec, state, 'magic')


def test_hitch_points_coincide():
    spec = validate(chain(2, offset=1.2))
    state = {'x_1': 2.0, 'y_1': -1.0, 'psi_1': 0.4, 'psi_2': -0.2, 'psi_3': 0.9,
             'theta_1_1': 0.0, 'theta_1_2': 0.1, 'theta_2_1': 0.0, 'theta_3_1': 0.0}
    poses = recover_poses(spec, state)
    for i in range(1, spec.n):
        rear = poses[i - 1].transform(spec.hitch_rear_point(i))
        front = poses[i].transform(spec.hitch_front_point(i + 1))
        assert rear == pytest.approx(front, abs=1e-12)


def test_wheel_world_position(bicycle):
    position = wheel_world_position(bicycle, [1.0, 2.0, math.pi / 2, 0.0, 0.0], 1, 2)
    assert position == pytest.approx([1.0, 5.0])


def test_config_document_round_trip():
    spec = load_config('three_axle_tractor')
    parsed, unit = parse_vehicle_config(vehicle_config_document(spec, 'deg'))
    assert unit == 'deg'
    assert validate(parsed).spec == validate(spec).spec


def test_config_rejects_unknown_keys():
    document = vehicle_config_document(chain(0))
    document['units'][0]['mass'] = 1200
    with pytest.raises(ConfigError):
        parse_vehicle_config(document)


def test_config_rejects_bad_angle_unit():
    document = vehicle_config_document(chain(0))
    document['angle_unit'] = 'grad'
    with pytest.raises(ConfigError):
        parse_vehicle_config(document)


def test_config_rejects_missing_coordinates():
    document = vehicle_config_document(chain(0))
    del document['units'][0]['wheels'][1]['y']
    with pytest.raises(ConfigError):
        parse_vehicle_config(document)
