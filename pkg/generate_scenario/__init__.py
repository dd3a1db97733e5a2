import sys
from argparse import Namespace

from functions.settings import get_settings
from functions.save_logs import save_logs
from modules.errors import exit_code_for
from modules.file_store import FileStore
from .generate import process_scenario


def main(args: Namespace) -> int:
    try:
        settings, logger = get_settings()
        file_store = FileStore(logger)

        process_scenario(args, file_store, logger)

        save_logs(logger, "generate_scenario", settings.log_dir)
        return 0

    except Exception as e:
        if 'logger' not in locals():
            print(f'Error generating scenario: {str(e)}', file=sys.stderr)
            return exit_code_for(e)
        logger.write_log('system', 'Generate Scenario', 'ERROR', str(e))
        save_logs(logger, "generate_scenario", settings.log_dir)
        return exit_code_for(e)
