from argparse import Namespace
from typing import TYPE_CHECKING

from functions.scenarios import build_scenario
from modules.errors import InvalidArgument
from modules.simulator import ControlTrace

if TYPE_CHECKING:
    from modules.custom_logger import LoggingManager
    from modules.file_store import FileStore


def process_scenario(args: Namespace, file_store: "FileStore", logger: "LoggingManager") -> ControlTrace:
    """Generate a built-in control trace and write it as a trace CSV"""
    params = file_store.read_inline_json(args.params) if args.params else {}
    if not isinstance(params, dict):
        raise InvalidArgument("Scenario parameters must be a JSON object")
    if args.units is not None:
        params['units'] = args.units

    trace = build_scenario(args.kind, params)
    file_store.write_trace(trace, args.out)
    logger.write_log('scenario', args.kind, 'INFO', f'{len(trace.times)} samples generated')
    return trace
