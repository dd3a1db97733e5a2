import json
import os
from datetime import datetime
from typing import Optional

from modules.custom_logger import LoggingManager


def save_logs(logger: LoggingManager, process_name: str, directory: Optional[str]) -> Optional[str]:
    """Save logs from the logger instance to <directory>/<ddmmyyyy>/<process_name>.json"""
    if not directory:
        return None
    current_date = datetime.now().strftime("%d%m%Y")
    file_name = os.path.join(directory, current_date, f"{process_name}.json")
    os.makedirs(os.path.dirname(file_name), exist_ok=True)
    with open(file_name, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(logger.logging_rows, handle, indent=4)
    return file_name
