import sys
from argparse import Namespace

from functions.settings import get_settings
from functions.save_logs import save_logs
from modules.errors import exit_code_for
from modules.file_store import FileStore
from .simulate import process_simulate


def main(args: Namespace) -> int:
    try:
        settings, logger = get_settings()
        file_store = FileStore(logger)

        summary = process_simulate(args, settings, file_store, logger)
        print(file_store.summary_json(summary))

        save_logs(logger, "simulate_trace", settings.log_dir)
        return 0

    except Exception as e:
        if 'logger' not in locals():
            print(f'Error in simulation: {str(e)}', file=sys.stderr)
            return exit_code_for(e)
        logger.write_log('system', 'Simulate Trace', 'ERROR', str(e))
        save_logs(logger, "simulate_trace", settings.log_dir)
        return exit_code_for(e)
