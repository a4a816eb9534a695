"""
Logging configuration module.

This module provides functions to configure the logging system for the toolkit.
Console output always goes to standard error so that command-line results
printed on standard output stay machine-readable.
"""

import logging
import logging.config
import logging.handlers
import os
from pathlib import Path

from config.settings import LOG_LEVEL, LOG_DIR, LOG_TO_FILE
from .logging_constants import (
    DEFAULT_LOG_LEVEL, LOG_LEVELS,
    CORE_LOG_FILE, SOLVER_LOG_FILE, EXPERIMENT_LOG_FILE,
    STORAGE_LOG_FILE, CLI_LOG_FILE
)

# Constants for logging
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DETAILED_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(module)s - %(funcName)s - %(message)s"
MAX_LOG_SIZE = 10 * 1024 * 1024  # 10MB
BACKUP_COUNT = 5

__all__ = [
    'DEFAULT_LOG_LEVEL', 'LOG_LEVELS', 'LOG_DIR',
    'CORE_LOG_FILE', 'SOLVER_LOG_FILE', 'EXPERIMENT_LOG_FILE',
    'STORAGE_LOG_FILE', 'CLI_LOG_FILE',
    'configure_logging', 'get_logger', 'set_log_level', 'get_log_level'
]


def get_log_level(level_name=None):
    """
    Get the log level from a string.

    Args:
        level_name (str | int, optional): Log level name (DEBUG, INFO, ...) or
            a logging constant. If None, LOG_LEVEL from settings is used.

    Returns:
        int: The log level constant (e.g., logging.INFO)
    """
    if level_name is None:
        level_name = LOG_LEVEL
    if isinstance(level_name, int):
        return level_name
    return LOG_LEVELS.get(str(level_name).lower(), DEFAULT_LOG_LEVEL)


def configure_logging(log_dir=None, level=None, to_file=None):
    """
    Configure the root logger for a command-line run.

    Args:
        log_dir: Directory to store logs (defaults to LOG_DIR)
        level: Console logging level (name or constant)
        to_file: Whether to add rotating file handlers (defaults to LOG_TO_FILE)

    Returns:
        logging.Logger: The configured root logger
    """
    log_dir = log_dir or LOG_DIR
    level = get_log_level(level)
    to_file = LOG_TO_FILE if to_file is None else to_file

    handlers = {
        'console': {
            'class': 'logging.StreamHandler',
            'level': level,
            'formatter': 'standard',
            'stream': 'ext://sys.stderr'
        }
    }
    if to_file:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        handlers['file'] = {
            'class': 'logging.handlers.RotatingFileHandler',
            'level': logging.DEBUG,
            'formatter': 'detailed',
            'filename': os.path.join(log_dir, 'application.log'),
            'maxBytes': MAX_LOG_SIZE,
            'backupCount': BACKUP_COUNT
        }
        handlers['error_file'] = {
            'class': 'logging.handlers.RotatingFileHandler',
            'level': logging.ERROR,
            'formatter': 'detailed',
            'filename': os.path.join(log_dir, 'errors.log'),
            'maxBytes': MAX_LOG_SIZE,
            'backupCount': BACKUP_COUNT
        }

    config = {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'standard': {'format': DEFAULT_LOG_FORMAT},
            'detailed': {'format': DETAILED_LOG_FORMAT}
        },
        'handlers': handlers,
        'loggers': {
            '': {
                'handlers': list(handlers),
                'level': min(level, logging.DEBUG) if to_file else level,
                'propagate': True
            }
        }
    }

    logging.config.dictConfig(config)
    logging.getLogger(__name__).debug("Logging system configured")
    return logging.getLogger()


def get_logger(name, log_file=None, console=True, level=None):
    """
    Get a configured logger instance.

    Args:
        name: Logger name
        log_file: Optional log file path (only used when LOG_TO_FILE is on)
        console: Whether to log to standard error
        level: Log level (defaults to LOG_LEVEL)

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)

    # Only configure if handlers aren't already set up
    if not logger.handlers:
        logger.setLevel(get_log_level(level))
        formatter = logging.Formatter(DEFAULT_LOG_FORMAT)

        if console:
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(formatter)
            logger.addHandler(console_handler)

        if log_file and LOG_TO_FILE:
            Path(os.path.dirname(log_file)).mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_file,
                maxBytes=MAX_LOG_SIZE,
                backupCount=BACKUP_COUNT
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        # Component handlers already print; don't duplicate through the root
        logger.propagate = False

    return logger


def set_log_level(logger, level):
    """
    Set log level for a logger and all its handlers.

    Args:
        logger: Logger to modify
        level: New log level
    """
    level = get_log_level(level)
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)
