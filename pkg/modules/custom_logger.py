import sys
from datetime import datetime
from typing import Dict, List, TextIO

LEVELS: Dict[str, int] = {'DEBUG': 10, 'INFO': 20, 'WARNING': 30, 'ERROR': 40}
THRESHOLDS: Dict[str, str] = {'debug': 'DEBUG', 'info': 'INFO', 'warn': 'WARNING', 'warning': 'WARNING', 'error': 'ERROR'}


class LoggingManager:
    """
    A class to manage logging operations.

    Every row is kept in memory (so it can be saved as a JSON log file at the end of a run);
    rows at or above the configured threshold are also echoed to stderr.
    """

    def __init__(self, threshold: str = 'warn', stream: TextIO = None):
        """
        Initialize the LoggingManager with an empty list of logging rows.

        Args:
            threshold (str): One of error, warn, info or debug (the NTRAILER_LOG values).
            stream (TextIO): Where echoed rows go. Defaults to stderr.
        """
        self.logging_rows: List[Dict[str, str]] = []
        self.threshold: str = THRESHOLDS.get(threshold.lower(), 'WARNING')
        self.stream = stream

    def write_log(self, client: str, operation: str, kind: str, text: str) -> None:
        """
        Write a log entry with the specified information.

        Args:
            client (str): The component writing the entry (e.g. 'kernel_solver').
            operation (str): The operation being performed.
            kind (str): DEBUG, INFO, WARNING or ERROR.
            text (str): The main text content of the log entry.

        Returns:
            None
        """
        current_date = datetime.now()
        log_entry: Dict[str, str] = {
            'client': client,
            'date': current_date.strftime('%d-%m-%Y'),
            'time': current_date.strftime("%H:%M:%S"),
            'operation': operation,
            'kind': kind,
            'text': text
        }
        if LEVELS.get(kind, LEVELS['INFO']) >= LEVELS[self.threshold]:
            stream = self.stream if self.stream is not None else sys.stderr
            print(f"{log_entry['time']} [{kind}] {client}/{operation}: {text}", file=stream)
        self.logging_rows.append(log_entry)

    def rows(self, kind: str) -> List[Dict[str, str]]:
        """Return the recorded rows of one kind."""
        return [row for row in self.logging_rows if row['kind'] == kind]
