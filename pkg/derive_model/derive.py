from argparse import Namespace
from typing import TYPE_CHECKING

from modules.constraint_builder import build_pfaffian
from modules.expression_writer import model_document, model_latex
from modules.kernel_solver import KinematicModel, solve_kernel
from modules.vehicle_config import validate

if TYPE_CHECKING:
    from functions.settings import Settings
    from modules.custom_logger import LoggingManager
    from modules.file_store import FileStore


def process_derive(args: Namespace, settings: "Settings", file_store: "FileStore",
                   logger: "LoggingManager") -> KinematicModel:
    """Derive the model of one vehicle config and emit it as JSON or LaTeX"""
    spec, _ = file_store.read_vehicle_config(args.config)
    validated = validate(spec, logger)
    eps_div = args.eps_div if getattr(args, 'eps_div', None) is not None else settings.eps_div
    model = solve_kernel(build_pfaffian(validated, logger), logger, eps_div)

    if args.emit == 'latex':
        file_store.write_text(model_latex(model, args.include_pfaffian), args.out)
    else:
        file_store.write_json_data(model_document(model, args.include_pfaffian), args.out)

    logger.write_log('derive', args.emit, 'INFO',
                     f'Model with {model.node_count()} nodes emitted for {args.config}')
    return model
