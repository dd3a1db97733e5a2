import sys
from argparse import Namespace

from functions.settings import get_settings
from functions.save_logs import save_logs
from modules.errors import exit_code_for
from modules.file_store import FileStore
from .derive import process_derive


def main(args: Namespace) -> int:
    try:
        settings, logger = get_settings()
        file_store = FileStore(logger)

        process_derive(args, settings, file_store, logger)

        save_logs(logger, "derive_model", settings.log_dir)
        return 0

    except Exception as e:
        if 'logger' not in locals():
            print(f'Error deriving model: {str(e)}', file=sys.stderr)
            return exit_code_for(e)
        logger.write_log('system', 'Derive Model', 'ERROR', str(e))
        save_logs(logger, "derive_model", settings.log_dir)
        return exit_code_for(e)
