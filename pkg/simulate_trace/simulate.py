from argparse import Namespace
from typing import TYPE_CHECKING, Any, Dict

import numpy as np

from modules.errors import SingularState
from modules.kernel_solver import derive
from modules.simulator import inject_noise, integrate, summarize
from modules.vehicle_config import validate

if TYPE_CHECKING:
    from functions.settings import Settings
    from modules.custom_logger import LoggingManager
    from modules.file_store import FileStore


def process_simulate(args: Namespace, settings: "Settings", file_store: "FileStore",
                     logger: "LoggingManager") -> Dict[str, Any]:
    """Integrate a vehicle over a control trace, write the trajectory and return the metric summary"""
    spec, angle_unit = file_store.read_vehicle_config(args.config)
    validated = validate(spec, logger)
    model = derive(validated, logger, settings.eps_div)

    trace = file_store.read_trace(args.controls, validated, angle_unit, args.hold)
    if args.noise_sigma_v > 0 or args.noise_sigma_omega > 0:
        trace = inject_noise(trace, args.noise_sigma_v, args.noise_sigma_omega, args.seed)
        logger.write_log('simulate', 'noise', 'INFO',
                         f'Noise injected (sigma_v={args.noise_sigma_v}, sigma_omega={args.noise_sigma_omega}, '
                         f'seed={args.seed})')

    if args.x0:
        x0 = file_store.read_state(args.x0, model.layout.names, angle_unit)
    else:
        x0 = np.zeros(model.layout.dim)
    dt = args.dt if args.dt is not None else settings.dt

    try:
        trajectory = integrate(model, x0, trace, dt, eps_v=settings.eps_v, eps_yaw=settings.eps_yaw, logger=logger)
    except SingularState as e:
        if e.partial is not None and args.out:
            file_store.write_trajectory(e.partial, args.out, args.format)
            logger.write_log('simulate', 'integrate', 'WARNING',
                             f'Partial trajectory ({len(e.partial)} samples) written to {args.out}')
        raise

    file_store.write_trajectory(trajectory, args.out, args.format)
    logger.write_log('simulate', 'integrate', 'INFO', f'{len(trajectory)} samples written to {args.out}')
    return summarize(trajectory)
