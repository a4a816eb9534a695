"""
CSV reports: solve traces, evaluation metrics and sweep tables.

Floats are written in shortest round-trip form; missing values are empty.
All files are replaced atomically.
"""

import pandas as pd

from core.errors import TensorArgumentError
from experiments.harness import AGGREGATE_COLUMNS, TRIAL_COLUMNS
from storage.tensor_file import atomic_write
from utils.logger import get_component_logger

logger = get_component_logger('storage', 'reports')

SOLVE_REPORT_COLUMNS = ['iteration', 'objective', 'elapsed']
METRICS_COLUMNS = ['rse', 'psnr', 'ssim']


def _write_frame(path, frame):
    atomic_write(path, frame.to_csv(index=False, na_rep='', lineterminator='\n'))
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def solve_report_frame(report):
    """
    One row per recorded step.

    LRFMTC reports carry one objective per block update; HaLRTC reports
    carry no objective, so their rows hold the relative iterate change.
    """
    values = report.objective_trace if report.objective_trace else report.change_trace
    elapsed = list(report.elapsed_trace)[:len(values)]
    elapsed += [None] * (len(values) - len(elapsed))
    return pd.DataFrame({
        'iteration': range(1, len(values) + 1),
        'objective': values,
        'elapsed': elapsed,
    }, columns=SOLVE_REPORT_COLUMNS)


def write_solve_report(path, report):
    _write_frame(path, solve_report_frame(report))


def write_metrics(path, row):
    """Write one ``rse,psnr,ssim`` row; ``row`` maps column names to values (ssim may be None)."""
    unknown = set(row) - set(METRICS_COLUMNS)
    if unknown:
        raise TensorArgumentError(f"unknown metric columns {sorted(unknown)}")
    frame = pd.DataFrame([{name: row.get(name) for name in METRICS_COLUMNS}], columns=METRICS_COLUMNS)
    _write_frame(path, frame)


def trials_path(path):
    """Companion per-trial file of a sweep report: ``<report>.trials.csv``."""
    path = str(path)
    stem = path[:-4] if path.lower().endswith('.csv') else path
    return f"{stem}.trials.csv"


def write_sweep(path, table, trials=None):
    """Write the aggregate sweep table and, when given, the per-trial table next to it."""
    _write_frame(path, table[AGGREGATE_COLUMNS])
    if trials is not None:
        _write_frame(trials_path(path), trials[TRIAL_COLUMNS])
        return trials_path(path)
    return None
