"""
Logging configuration for the yieldfusion CLI
"""

import logging
import sys
from pathlib import Path

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE_NAME = "yieldfusion.log"


def setup_logging(log_level: str = "INFO", log_dir: Path | None = None):
    """
    Setup application logging

    Console output goes to stderr so stdout stays free for reports. When a
    log directory is given a UTF-8 file handler is added as well.
    """
    level = getattr(logging, log_level.upper(), logging.INFO)

    # Clear any existing handlers
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
        handler.close()

    # Create file handler (only if we can write to the output directory)
    file_handler = None
    if log_dir is not None:
        try:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(
                Path(log_dir) / LOG_FILE_NAME,
                mode="a",  # append mode
                encoding="utf-8",
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        except PermissionError:
            # If we can't write to file, just use console logging
            file_handler = None

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root.setLevel(level)
    if file_handler:
        root.addHandler(file_handler)
    root.addHandler(console_handler)

    # Configure specific loggers
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(
        "Logging configured - console"
        + (f" and {file_handler.baseFilename}" if file_handler else "")
    )
