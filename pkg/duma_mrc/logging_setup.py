"""Logging configuration: persistent rotating file log plus console output.

Library modules only call ``logging.getLogger(__name__)``; the CLI calls
``configure_logging`` once per process.
"""
import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from duma_mrc import config

PACKAGE_LOGGER = "duma_mrc"
LOG_FILE_NAME = "duma_mrc.log"


def configure_logging(log_dir: Optional[str] = None, level: Optional[str] = None) -> logging.Logger:
    """Attach file and console handlers to the package logger (idempotent)."""
    log_dir = log_dir or config.LOG_DIR
    level_name = (level or config.LOG_LEVEL).upper()
    os.makedirs(log_dir, exist_ok=True)

    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(getattr(logging, level_name, logging.INFO))
    if getattr(logger, "_duma_configured", False):
        return logger

    # File handler - rotates at 10MB, keeps 5 backups
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, LOG_FILE_NAME),
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding="utf-8",
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    ))

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(message)s",
        datefmt="%H:%M:%S",
    ))

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger._duma_configured = True

    logger.debug("Logging initialized, log file: %s", os.path.join(log_dir, LOG_FILE_NAME))
    return logger
