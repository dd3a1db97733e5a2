import math
from argparse import Namespace
from typing import TYPE_CHECKING, Dict

from modules.ackermann_kinematics import resolve_steering
from modules.kernel_solver import derive
from modules.vehicle_config import validate

if TYPE_CHECKING:
    from functions.settings import Settings
    from modules.custom_logger import LoggingManager
    from modules.file_store import FileStore


def process_ackermann(args: Namespace, settings: "Settings", file_store: "FileStore",
                      logger: "LoggingManager") -> Dict[str, float]:
    """Dependent wheel and virtual hitch steering angles at one state, in the config's angle unit"""
    spec, angle_unit = file_store.read_vehicle_config(args.config)
    validated = validate(spec, logger)
    model = derive(validated, logger, settings.eps_div)

    state = file_store.read_state(args.state, model.layout.names, angle_unit)
    u = file_store.read_controls(args.u, model.control_names, angle_unit)
    solutions = resolve_steering(validated, model, state, u, settings.eps_v, strict=True)

    to_unit = math.degrees if angle_unit == 'deg' else float
    angles = {name: to_unit(solution.angle) for name, solution in solutions.items()}
    logger.write_log('ackermann', 'resolve', 'INFO', f'{len(angles)} steering angles resolved')
    return angles
