"""
Utility module providing specialized loggers for the toolkit components.
"""

import functools
import logging
import time
from pathlib import Path

from config.logging_config import (
    DETAILED_LOG_FORMAT,
    get_log_level,
    get_logger,
    set_log_level,
    CORE_LOG_FILE,
    SOLVER_LOG_FILE,
    EXPERIMENT_LOG_FILE,
    STORAGE_LOG_FILE,
    CLI_LOG_FILE
)

_COMPONENT_FILES = {
    'core': CORE_LOG_FILE,
    'solver': SOLVER_LOG_FILE,
    'experiments': EXPERIMENT_LOG_FILE,
    'storage': STORAGE_LOG_FILE,
    'cli': CLI_LOG_FILE,
}


class LoggerFactory:
    """Factory class to create and manage component loggers."""

    _loggers = {}
    _file_handler = None

    @classmethod
    def get(cls, component, name=None):
        """Get a logger for ``component`` (core, solver, experiments, storage, cli)."""
        logger_name = f"{component}.{name}" if name else component
        if logger_name not in cls._loggers:
            cls._loggers[logger_name] = get_logger(
                logger_name,
                log_file=_COMPONENT_FILES.get(component),
                console=True
            )
            if cls._file_handler is not None:
                cls._loggers[logger_name].addHandler(cls._file_handler)
        return cls._loggers[logger_name]

    @classmethod
    def get_solver_logger(cls, name=None):
        """Get a logger for solver components."""
        return cls.get('solver', name)

    @classmethod
    def get_experiment_logger(cls, name=None):
        """Get a logger for experiment components."""
        return cls.get('experiments', name)

    @classmethod
    def set_global_log_level(cls, level):
        """Set log level for all managed loggers."""
        for logger in cls._loggers.values():
            set_log_level(logger, level)

    @classmethod
    def attach_file(cls, path, level=None):
        """Send every managed logger, present and future, to ``path`` as well."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, encoding='utf-8')
        handler.setFormatter(logging.Formatter(DETAILED_LOG_FORMAT))
        handler.setLevel(get_log_level(level))
        cls.detach_file()
        cls._file_handler = handler
        for logger in cls._loggers.values():
            logger.addHandler(handler)
        return handler

    @classmethod
    def detach_file(cls):
        if cls._file_handler is None:
            return
        for logger in cls._loggers.values():
            logger.removeHandler(cls._file_handler)
        cls._file_handler.close()
        cls._file_handler = None


def get_component_logger(component_type, name=None):
    """
    Get an appropriate logger based on component type.

    Args:
        component_type (str): One of 'core', 'solver', 'experiments', 'storage', 'cli'
        name (str, optional): Specific name within the component

    Returns:
        logging.Logger: Configured logger for the component
    """
    component_type = component_type.lower()
    if component_type in _COMPONENT_FILES:
        return LoggerFactory.get(component_type, name)
    return get_logger(f"app.{name}" if name else "app")


def _timed(logger_getter, func, logger_name):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = logger_getter(logger_name or func.__module__.split('.')[-1])
        logger.debug(f"Starting {func.__name__}")
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
            elapsed = time.perf_counter() - start_time
            logger.debug(f"Completed {func.__name__} in {elapsed:.2f}s")
            return result
        except Exception as e:
            elapsed = time.perf_counter() - start_time
            logger.error(f"Error in {func.__name__} after {elapsed:.2f}s: {str(e)}")
            raise
    return wrapper


def log_solver_function(func=None, *, logger_name=None):
    """Decorator for logging solver calls with timing."""
    def decorator(f):
        return _timed(LoggerFactory.get_solver_logger, f, logger_name)

    if func is None:
        return decorator
    return decorator(func)


def log_experiment_function(func=None, *, logger_name=None):
    """Decorator for logging experiment calls with timing."""
    def decorator(f):
        return _timed(LoggerFactory.get_experiment_logger, f, logger_name)

    if func is None:
        return decorator
    return decorator(func)


# Structured logging support
def log_structured(logger, level, event, **kwargs):
    """
    Log a structured message for downstream log aggregation.

    Args:
        logger (logging.Logger): Logger to use
        level (str): Log level ('debug', 'info', 'warning', 'error', 'critical')
        event (str): Event name or type
        **kwargs: Additional structured data to include
    """
    message = {
        "event": event,
        "data": kwargs
    }
    log_method = getattr(logger, level.lower(), logger.info)
    log_method(f"STRUCTURED_LOG: {message}")
