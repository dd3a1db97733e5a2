"""Command-line entry point: derive, simulate, ackermann and scenario sub-commands."""
import argparse
import sys
from typing import Optional, Sequence

import ackermann_angles
import derive_model
import generate_scenario
import simulate_trace
from functions.scenarios import SCENARIO_KINDS
from modules.simulator import HOLD_POLICIES

COMMANDS = {
    'derive': derive_model.main,
    'simulate': simulate_trace.main,
    'ackermann': ackermann_angles.main,
    'scenario': generate_scenario.main,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ntrailer', description='Kinematic models of n-trailer vehicles')
    commands = parser.add_subparsers(dest='command', required=True)

    derive = commands.add_parser('derive', help='derive the closed-form kinematic model of a vehicle')
    derive.add_argument('--config', required=True, help='vehicle config JSON')
    derive.add_argument('--emit', choices=('json', 'latex'), default='json')
    derive.add_argument('--out', help='output file (stdout when omitted)')
    derive.add_argument('--include-pfaffian', action='store_true', help='also emit the constraint matrix A(x)')
    derive.add_argument('--eps-div', type=float, help='division guard of the compiled evaluator')

    simulate = commands.add_parser('simulate', help='integrate a vehicle over a control trace')
    simulate.add_argument('--config', required=True)
    simulate.add_argument('--controls', required=True, help='control trace CSV')
    simulate.add_argument('--x0', help='initial state, JSON file or inline JSON (default: all zeros)')
    simulate.add_argument('--dt', type=float, help='RK4 step in seconds (default NTRAILER_DT)')
    simulate.add_argument('--out', required=True, help='trajectory file')
    simulate.add_argument('--format', choices=('csv', 'parquet'), default='csv')
    simulate.add_argument('--hold', choices=HOLD_POLICIES, default='zoh', help='control interpolation')
    simulate.add_argument('--noise-sigma-v', type=float, default=0.0)
    simulate.add_argument('--noise-sigma-omega', type=float, default=0.0)
    simulate.add_argument('--seed', type=int, default=0)

    ackermann = commands.add_parser('ackermann', help='dependent wheel and virtual hitch steering angles')
    ackermann.add_argument('--config', required=True)
    ackermann.add_argument('--state', required=True, help='state, JSON file or inline JSON')
    ackermann.add_argument('--u', required=True, help='controls, JSON file or inline JSON')

    scenario = commands.add_parser('scenario', help='write a built-in control trace')
    scenario.add_argument('--kind', required=True, choices=SCENARIO_KINDS)
    scenario.add_argument('--params', help='scenario parameters, JSON file or inline JSON')
    scenario.add_argument('--units', type=int, help='number of vehicle units (trace width)')
    scenario.add_argument('--out', help='trace CSV (stdout when omitted)')
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(run())
