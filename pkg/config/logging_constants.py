"""
Logging constants module.
"""

import logging
import os

from config.settings import LOG_DIR

# Log file paths
CORE_LOG_FILE = os.path.join(LOG_DIR, "core", "core.log")
SOLVER_LOG_FILE = os.path.join(LOG_DIR, "solver", "solver.log")
EXPERIMENT_LOG_FILE = os.path.join(LOG_DIR, "experiments", "experiments.log")
STORAGE_LOG_FILE = os.path.join(LOG_DIR, "storage", "storage.log")
CLI_LOG_FILE = os.path.join(LOG_DIR, "cli", "cli.log")

# Log levels
DEFAULT_LOG_LEVEL = logging.INFO
LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL
}
