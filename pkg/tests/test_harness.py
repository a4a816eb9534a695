"""
Unit tests for the trial runner and sweep aggregation.
"""

import json
import math
import os
import tempfile
import unittest
from unittest.mock import patch

import numpy as np
from pydantic import ValidationError

from core.errors import NumericalDivergenceError
from experiments.harness import (
    AGGREGATE_COLUMNS, TRIAL_COLUMNS, SweepGrid, TrialSpec, derive_seeds, run_sweep, run_trial
)
from solvers.halrtc import HalrtcConfig
from solvers.lrfmtc import SolverConfig

RUN_SLOW = bool(os.environ.get("RUN_SLOW_TESTS"))

FAST_SOLVER = SolverConfig(alpha=1.0, L=6, max_outer=4, max_inner=5, als_sweeps=2)
FAST_HALRTC = HalrtcConfig(max_iters=10)


def _spec(**overrides):
    values = dict(
        dims=(10, 10, 10), rank=(2, 2, 2), sampling_ratio=0.5, snr_db=20.0,
        root_seed=7, solver=FAST_SOLVER, halrtc=FAST_HALRTC
    )
    values.update(overrides)
    return TrialSpec(**values)


class TestSeeds(unittest.TestCase):
    """Test cases for derive_seeds"""

    def test_deterministic_and_distinct(self):
        seeds = derive_seeds(3, 0)
        self.assertEqual(seeds, derive_seeds(3, 0))
        self.assertEqual(len(set(seeds)), 4)
        self.assertNotEqual(seeds, derive_seeds(3, 1))
        self.assertNotEqual(seeds, derive_seeds(4, 0))


class TestRunTrial(unittest.TestCase):
    """Test cases for run_trial"""

    def test_lrfmtc_record(self):
        record = run_trial(_spec(), 'lrfmtc', trial=1)
        self.assertFalse(record.failed)
        self.assertTrue(math.isfinite(record.rse))
        self.assertEqual(len(record.estimated_rank), 3)
        self.assertEqual(record.L, 6)
        self.assertEqual(list(record.to_row()), TRIAL_COLUMNS)
        self.assertEqual(record.to_row()['dims'], '10x10x10')

    def test_halrtc_record(self):
        record = run_trial(_spec(), 'halrtc', trial=0)
        self.assertFalse(record.failed)
        self.assertEqual(record.method, 'halrtc')

    def test_deterministic(self):
        a = run_trial(_spec(), 'lrfmtc', trial=2).to_row()
        b = run_trial(_spec(), 'lrfmtc', trial=2).to_row()
        a.pop('wall_time')
        b.pop('wall_time')
        self.assertEqual(a, b)

    def test_noiseless_row(self):
        row = run_trial(_spec(snr_db=None), 'halrtc').to_row()
        self.assertEqual(row['snr_db'], math.inf)
        self.assertEqual(row['noise'], 'none')

    @patch('experiments.harness.solve')
    def test_solver_failure_is_recorded(self, mock_solve):
        mock_solve.side_effect = NumericalDivergenceError("iterate became non-finite")
        record = run_trial(_spec(), 'lrfmtc')
        self.assertTrue(record.failed)
        self.assertTrue(math.isnan(record.rse))
        self.assertIn("NumericalDivergenceError", record.error)

    def test_invalid_spec_raises(self):
        with self.assertRaises(ValidationError):
            _spec(rank=(11, 2, 2))
        with self.assertRaises(ValueError):
            run_trial(_spec(), 'tucker')


class TestSweep(unittest.TestCase):
    """Test cases for run_sweep and SweepGrid"""

    def setUp(self):
        self.grid = SweepGrid(
            dims=(10, 10, 10), ranks=[(2, 2, 2)], sampling_ratios=[0.5],
            methods=['lrfmtc', 'halrtc'], trials=2, root_seed=1,
            solver=FAST_SOLVER, halrtc=FAST_HALRTC
        )

    def test_cells(self):
        grid = self.grid.model_copy(update={'L': [4, 6], 'alpha': [1.0, 2.0]})
        cells = grid.cells()
        self.assertEqual(len(cells), 8)
        self.assertEqual({spec.solver.L for spec, _ in cells}, {4, 6})
        self.assertEqual(cells[0][0].solver.max_outer, 4)

    def test_sweep_tables(self):
        table, trials = run_sweep(self.grid, workers=1)
        self.assertEqual(list(table.columns), AGGREGATE_COLUMNS)
        self.assertEqual(list(trials.columns), TRIAL_COLUMNS)
        self.assertEqual(len(table), 2)
        self.assertEqual(len(trials), 4)
        self.assertEqual(list(table['method']), ['lrfmtc', 'halrtc'])
        self.assertEqual(list(table['trials']), [2, 2])
        self.assertEqual(list(table['failures']), [0, 0])
        self.assertEqual(list(trials['cell']), [0, 0, 1, 1])

    def test_failures_are_counted(self):
        with patch('experiments.harness.solve', side_effect=NumericalDivergenceError("boom")):
            table, _ = run_sweep(self.grid, trials=1, workers=1)
        self.assertEqual(list(table['failures']), [1, 0])
        self.assertTrue(math.isnan(table['mean_rse'].iloc[0]))

    def test_rejects_zero_trials(self):
        with self.assertRaises(ValueError):
            run_sweep(self.grid, trials=0)

    def test_load_grid(self):
        payload = {"dims": [10, 10, 10], "ranks": [[2, 2, 2], [3, 3, 3]], "sampling_ratios": [0.3],
                   "methods": ["halrtc"], "snr_db": [None, 10], "trials": 3}
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "grid.json")
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(payload, f)
            grid = SweepGrid.load(path)
        self.assertEqual(grid.ranks, [(2, 2, 2), (3, 3, 3)])
        self.assertEqual(len(grid.cells()), 4)
        self.assertIsNone(grid.cells()[0][0].snr_db)

    def test_unknown_grid_key(self):
        with self.assertRaises(ValidationError):
            SweepGrid(ranks=[(2, 2, 2)], sampling_ratios=[0.5], width=[3])


@unittest.skipUnless(RUN_SLOW, "set RUN_SLOW_TESTS=1 to run the 50x50x50 parameter trends")
class TestParameterTrends(unittest.TestCase):
    """Recovery error over the CPD width and the trace-norm weight, rank (6,6,6), SR 0.2, 20 dB."""

    def _mean_rse(self, **axes):
        grid = SweepGrid(ranks=[(6, 6, 6)], sampling_ratios=[0.2], snr_db=[20.0], trials=5, **axes)
        table, _ = run_sweep(grid)
        return [float(v) for v in table['mean_rse']]

    def test_width_trend(self):
        """Mean RSE does not grow with L; beyond 80 it plateaus within 1%."""
        narrow, middle, wide = self._mean_rse(L=[20, 80, 150])
        self.assertLessEqual(middle, narrow)
        self.assertLessEqual(wide, middle * 1.01)

    def test_alpha_window(self):
        alphas = [0.1, 5.0, 30.0, 300.0]
        errors = self._mean_rse(alpha=alphas)
        best = alphas[int(np.argmin(errors))]
        self.assertIn(best, (5.0, 30.0), dict(zip(alphas, errors)))


if __name__ == "__main__":
    unittest.main()
