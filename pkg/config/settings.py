"""
Configuration settings for the tensor completion toolkit.
Loads settings from environment variables and provides defaults.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Determine the project root directory
PROJECT_ROOT = Path(__file__).parent.parent

# Load environment variables from .env file
load_dotenv(os.path.join(PROJECT_ROOT, '.env'))


def _env_flag(name, default=False):
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


# Set up logging level based on environment variable
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
LOG_TO_FILE = _env_flag('LOG_TO_FILE', False)

# Log directory
LOG_DIR = os.getenv('LOG_DIR', os.path.join(PROJECT_ROOT, 'logs'))

# Default worker count for sweeps; the only environment knob for parallelism
NUM_WORKERS = max(1, int(os.getenv('TC_NUM_WORKERS', 1)))

# Written into every run manifest so reruns can detect format drift
ARTIFACT_VERSION = '1'
