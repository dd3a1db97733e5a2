"""End-to-end properties of derived models and simulated runs."""
import json
import math
import time

import numpy as np
import pytest

from conftest import chain, circle_radius, config_path, load_config
from functions.scenarios import build_scenario
from modules.ackermann_kinematics import dependent_steer_angle
from modules.constraint_builder import build_pfaffian, numeric_pfaffian
from modules.errors import SingularState
from modules.kernel_solver import derive, evaluate_model
from modules.simulator import inject_noise, integrate, offtracking, peak_time, rwa
from modules.vehicle_config import UnitSpec, VehicleSpec, WheelSpec, validate
from ntrailer import run


def car(wheelbase: float, track: float) -> VehicleSpec:
    half = track / 2
    wheels = (WheelSpec((0.0, 0.0), 'rear'), WheelSpec((wheelbase, 0.0), 'front'),
              WheelSpec((wheelbase, half), 'front_left'), WheelSpec((wheelbase, -half), 'front_right'))
    return VehicleSpec((UnitSpec(wheels, None, None),))


@pytest.mark.parametrize('wheelbase', [2.0, 3.0, 4.0])
@pytest.mark.parametrize('track', [1.5, 2.0])
@pytest.mark.parametrize('radius', [8.0, 10.0, 20.0])
def test_ackermann_corollary_grid(wheelbase, track, radius):
    spec = validate(car(wheelbase, track))
    model = derive(spec)
    state = [0.0, 0.0, 0.0, 0.0, math.atan(wheelbase / radius)]
    u = [1.0, 0.0, 0.0]
    left = dependent_steer_angle(spec, model, state, u, 1, 3).angle
    right = dependent_steer_angle(spec, model, state, u, 1, 4).angle
    assert math.tan(left) == pytest.approx(wheelbase / (radius - track / 2), abs=1e-12)
    assert math.tan(right) == pytest.approx(wheelbase / (radius + track / 2), abs=1e-12)


def random_vehicle(rng: np.random.Generator) -> VehicleSpec:
    n = int(rng.integers(1, 5))
    units = []
    for i in range(1, n + 1):
        if i == 1:
            wheels = [WheelSpec((0.0, 0.0)), WheelSpec((rng.uniform(1.5, 5.0), rng.uniform(-1.0, 1.0)))]
            hitch_front = None
        else:
            wheels = [WheelSpec((0.0, 0.0))]
            hitch_front = (rng.uniform(0.5, 5.0), rng.uniform(-0.5, 0.5))
        for _ in range(int(rng.integers(0, 3))):
            wheels.append(WheelSpec((rng.uniform(-5.0, 5.0), rng.uniform(-2.5, 2.5))))
        hitch_rear = (-rng.uniform(0.5, 5.0), rng.uniform(-0.5, 0.5)) if i < n else None
        units.append(UnitSpec(tuple(wheels), hitch_front, hitch_rear))
    return VehicleSpec(tuple(units))


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    headings = rng.uniform(-math.pi, math.pi) + np.concatenate([[0.0], np.cumsum(rng.uniform(-0.5, 0.5, n - 1))])
    steering = rng.uniform(-0.4, 0.4, n + 1)
    return np.concatenate([rng.uniform(-10.0, 10.0, 2), headings, steering])


def test_jacobian_spans_the_constraint_kernel():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        spec = validate(random_vehicle(rng))
        model = derive(spec)
        for _ in range(10):
            state = random_state(rng, spec.n)
            try:
                _, jacobian = evaluate_model(model, state)
            except SingularState:
                continue
            constraints = numeric_pfaffian(spec, state)
            u = rng.normal(size=jacobian.shape[1])
            assert np.max(np.abs(constraints @ jacobian @ u)) < 1e-9
            singular_values = np.linalg.svd(constraints, compute_uv=False)
            assert constraints.shape[1] - np.sum(singular_values > 1e-8) == spec.n + 2
            checked += 1
    assert checked > 900


def test_tractor_yaw_rate_closed_form():
    a, b = 3.2, 0.4
    spec = VehicleSpec((UnitSpec((WheelSpec((0.0, 0.0)), WheelSpec((a, b))), None, None),))
    model = derive(spec)
    rng = np.random.default_rng(5)
    for _ in range(1000):
        theta_1, theta_2 = rng.uniform(-1.0, 1.0, 2)
        state = [0.0, 0.0, rng.uniform(-math.pi, math.pi), theta_1, theta_2]
        f_values, _ = evaluate_model(model, state)
        expected = math.sin(theta_2 - theta_1) / (a * math.cos(theta_2) + b * math.sin(theta_2))
        assert f_values[2] == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_on_axle_trailer_closed_form(on_axle_model):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        psi_1 = rng.uniform(-math.pi, math.pi)
        psi_2 = psi_1 + rng.uniform(-1.2, 1.2)
        f_values, _ = evaluate_model(on_axle_model, [0.0, 0.0, psi_1, psi_2, 0.0, 0.0, 0.0])
        assert f_values[3] == pytest.approx(math.sin(psi_1 - psi_2) / 5.0, rel=1e-10, abs=1e-14)


def lateral_slip(trajectory):
    spec = trajectory.spec
    layout = trajectory.model.layout
    worst = 0.0
    for (i, k), velocity in trajectory.wheel_velocities.items():
        name = f"theta_{i}_{k}"
        steer = trajectory.steering[name] if name in trajectory.steering else trajectory.states[:, layout.index(name)]
        direction = trajectory.headings[:, i - 1] + steer
        lateral = -velocity[:, 0] * np.sin(direction) + velocity[:, 1] * np.cos(direction)
        along = velocity[:, 0] * np.cos(direction) + velocity[:, 1] * np.sin(direction)
        worst = max(worst, float(np.max(np.abs(lateral) / (1.0 + np.abs(along)))))
    assert set(trajectory.wheel_velocities) == set(spec.wheels)
    return worst


@pytest.mark.parametrize('trailers', [0, 1, 2, 3])
@pytest.mark.parametrize('kind', ['step', 'sine'])
def test_wheels_roll_without_slipping(trailers, kind):
    model = derive(chain(trailers, offset=0.8))
    trace = build_scenario(kind, {'units': trailers + 1, 'duration': 5.0, 'steer': 0.2} if kind == 'step'
                           else {'units': trailers + 1, 'duration': 5.0, 'amplitude': 0.2, 'frequency': 0.3})
    trajectory = integrate(model, np.zeros(model.layout.dim), trace)
    assert lateral_slip(trajectory) < 1e-6


def test_three_axle_tractor_rolls_without_slipping():
    model = derive(load_config('three_axle_tractor'))
    trace = build_scenario('sine', {'units': 2, 'duration': 5.0, 'amplitude': 0.15})
    trajectory = integrate(model, np.zeros(model.layout.dim), trace)
    assert lateral_slip(trajectory) < 1e-6
    assert np.any(np.abs(trajectory.steering['theta_1_3']) > 1e-3)


def test_steady_circle_offtracking():
    steer_angle, drawbar = 0.2, 5.0
    radius = circle_radius(3.0, steer_angle)
    model = derive(chain(1, drawbar=drawbar))
    x0 = np.zeros(model.layout.dim)
    x0[model.layout.index('theta_1_2')] = steer_angle
    trace = build_scenario('step', {'units': 2, 'duration': 30.0, 'steer': 0.0, 'v': 5.0})
    trajectory = integrate(model, x0, trace)
    expected = radius - math.sqrt(radius ** 2 - drawbar ** 2)
    assert offtracking(trajectory, 1, 2)[-1] == pytest.approx(expected, rel=0.01)


def test_yaw_rate_amplifies_down_the_chain():
    model = derive(load_config('three_trailers'))
    trace = build_scenario('step', {'units': 4, 'duration': 14.0, 'steer': 0.2, 'hold': 8.0})
    trajectory = integrate(model, np.zeros(model.layout.dim), trace)
    peaks = [rwa(trajectory, 1, j).peak_abs for j in range(1, 5)]
    assert peaks[0] == pytest.approx(1.0)
    assert all(earlier <= later for earlier, later in zip(peaks, peaks[1:]))
    times = [peak_time(trajectory, unit) for unit in range(1, 5)]
    assert all(earlier < later for earlier, later in zip(times, times[1:]))


def node_total(spec: VehicleSpec) -> int:
    validated = validate(spec)
    return build_pfaffian(validated).node_count() + derive(validated).node_count()


def test_expression_size_grows_quadratically():
    ratio = node_total(chain(15, offset=1.0)) / node_total(chain(7, offset=1.0))
    assert 3.0 <= ratio <= 5.0


def test_thirty_two_unit_chain_derives_quickly():
    started = time.perf_counter()
    model = derive(chain(31, offset=1.0))
    elapsed = time.perf_counter() - started
    assert len(model.F) == 34
    assert elapsed < 5.0


def test_noise_barely_moves_the_amplification():
    model = derive(load_config('one_trailer_on_axle'))
    trace = build_scenario('step', {'units': 2, 'duration': 10.0, 'v': 10.0, 'steer': 0.1, 'hold': 4.0})
    clean = rwa(integrate(model, np.zeros(7), trace), 1, 2).peak_ratio
    noisy_trace = inject_noise(trace, 0.1, 0.01, seed=3)
    noisy = rwa(integrate(model, np.zeros(7), noisy_trace), 1, 2).peak_ratio
    assert noisy == pytest.approx(clean, rel=0.1)


def test_simulation_output_is_reproducible(tmp_path, clean_env, capsys):
    controls = tmp_path / 'trace.csv'
    assert run(['scenario', '--kind', 'sine', '--units', '2', '--params', '{"duration": 3.0}',
                '--out', str(controls)]) == 0
    outputs = []
    for name in ('a.csv', 'b.csv'):
        out = tmp_path / name
        assert run(['simulate', '--config', config_path('one_trailer_off_axle'), '--controls', str(controls),
                    '--out', str(out), '--noise-sigma-v', '0.1', '--seed', '9']) == 0
        outputs.append(out.read_bytes())
    printed = capsys.readouterr().out
    assert outputs[0] == outputs[1]
    assert printed[:len(printed) // 2] == printed[len(printed) // 2:]
    assert json.loads(printed[:len(printed) // 2])['samples'] == 301
