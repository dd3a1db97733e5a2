import sys
from argparse import Namespace

from functions.settings import get_settings
from functions.save_logs import save_logs
from modules.errors import exit_code_for
from modules.file_store import FileStore
from .angles import process_ackermann


def main(args: Namespace) -> int:
    try:
        settings, logger = get_settings()
        file_store = FileStore(logger)

        angles = process_ackermann(args, settings, file_store, logger)
        print(file_store.summary_json(angles))

        save_logs(logger, "ackermann_angles", settings.log_dir)
        return 0

    except Exception as e:
        if 'logger' not in locals():
            print(f'Error resolving steering angles: {str(e)}', file=sys.stderr)
            return exit_code_for(e)
        logger.write_log('system', 'Ackermann Angles', 'ERROR', str(e))
        save_logs(logger, "ackermann_angles", settings.log_dir)
        return exit_code_for(e)
