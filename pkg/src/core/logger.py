"""Shared ``SpanGuard`` logger: full detail to a daily file, warnings to stderr."""

import logging
import os
import sys
from datetime import datetime

FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
CONSOLE_FORMAT = "%(levelname)s - %(message)s"


def get_app_data_dir() -> str:
    """Directory for config.json, logs and fuzz reproducers.

    ``SPANGUARD_HOME`` wins over the platform default.
    """
    override = os.environ.get("SPANGUARD_HOME")
    if override:
        return override
    if sys.platform == "win32":
        return os.path.join(os.environ.get("LOCALAPPDATA") or os.path.expanduser("~"), "SpanGuard")
    if sys.platform == "darwin":
        return os.path.expanduser("~/Library/Application Support/SpanGuard")
    return os.path.expanduser("~/.local/share/SpanGuard")


APP_DATA_DIR = get_app_data_dir()
LOGS_DIR = os.path.join(APP_DATA_DIR, "logs")
os.makedirs(LOGS_DIR, exist_ok=True)

LOG_FILE = os.path.join(LOGS_DIR, f"spanguard_{datetime.now():%Y%m%d}.log")


def _console_level() -> int:
    name = os.environ.get("SPANGUARD_LOG_LEVEL", "WARNING").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.WARNING


def setup_logger(name: str = "SpanGuard") -> logging.Logger:
    """Return the named logger, attaching handlers on first use only."""
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    logger.setLevel(logging.DEBUG)

    file_handler = logging.FileHandler(LOG_FILE, encoding="utf-8")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
    logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(_console_level())
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    logger.addHandler(console_handler)

    return logger


logger = setup_logger()
