"""
Utility package for the tensor completion toolkit.
"""

# Import logger utilities for easy access
from utils.logger import (
    get_component_logger,
    log_solver_function,
    log_experiment_function,
    log_structured,
    LoggerFactory
)

__all__ = [
    'get_component_logger',
    'log_solver_function',
    'log_experiment_function',
    'log_structured',
    'LoggerFactory'
]
