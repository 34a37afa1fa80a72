"""Logging setup and small shared helpers."""

import logging
import os
import time
from contextlib import contextmanager
from logging.handlers import RotatingFileHandler
from typing import Iterator

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE_NAME = "manifold_ar.log"

_configured = False


def configure_logging(log_dir: str = "logs", level: int = logging.INFO) -> logging.Logger:
    """
    Attach console and rotating-file handlers to the package logger.

    Args:
        log_dir (str): Directory for the rotating log file (created if needed).
        level (int): Console level; the file always records DEBUG.

    Returns:
        logging.Logger: The configured `manifold_ar` logger.
    """
    global _configured
    logger = logging.getLogger("manifold_ar")
    if _configured:
        return logger

    logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    try:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, LOG_FILE_NAME), maxBytes=10485760, backupCount=5
        )  # 10MB per file, keep 5 backups
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    except OSError as e:
        logger.warning("File logging disabled, cannot write to %s: %s", log_dir, e)

    _configured = True
    return logger


class Stopwatch:
    """Accumulates elapsed wall time in seconds."""

    def __init__(self):
        self.elapsed = 0.0

    @contextmanager
    def running(self) -> Iterator["Stopwatch"]:
        start = time.perf_counter()
        try:
            yield self
        finally:
            self.elapsed += time.perf_counter() - start


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a float64."""
    return f"{value:.17g}"

