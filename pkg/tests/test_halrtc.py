"""
Unit tests for the noisy HaLRTC baseline.
"""

import os
import unittest

import numpy as np
from pydantic import ValidationError

from core.errors import TensorArgumentError
from core.linalg import nuclear_norm
from core.tensors import ObservationMask, unfold
from experiments.corruption import MaskSpec, NoiseSpec, apply_noise, make_mask
from experiments.metrics import rse
from experiments.synthetic import SyntheticSpec, generate_tucker
from solvers.halrtc import HalrtcConfig, halrtc_m_update, halrtc_solve, halrtc_x_update
from solvers.lrfmtc import SolverConfig, solve

RUN_SLOW = bool(os.environ.get("RUN_SLOW_TESTS"))


class TestXUpdate(unittest.TestCase):
    """Test cases for the closed-form X step."""

    def setUp(self):
        rng = np.random.default_rng(0)
        self.dims = (3, 4, 2)
        self.m_list = [rng.standard_normal(self.dims) for _ in range(3)]
        self.y_list = [rng.standard_normal(self.dims) for _ in range(3)]
        self.target = rng.standard_normal(self.dims)
        self.observed = rng.random(self.dims) < 0.5
        self.rho = 0.7
        self.gamma = 2.5

    def test_matches_dense_least_squares(self):
        """The update minimizes gamma/2 ||P(X - T)||^2 + sum rho/2 ||X - M_i + Y_i / rho||^2."""
        n = int(np.prod(self.dims))
        o = self.observed.ravel(order='F').astype(float)
        blocks = [np.sqrt(self.gamma) * np.diag(o)]
        rhs = [np.sqrt(self.gamma) * o * self.target.ravel(order='F')]
        for m, y in zip(self.m_list, self.y_list):
            blocks.append(np.sqrt(self.rho) * np.eye(n))
            rhs.append(np.sqrt(self.rho) * (m - y / self.rho).ravel(order='F'))
        oracle = np.linalg.lstsq(np.vstack(blocks), np.concatenate(rhs), rcond=None)[0]

        x = halrtc_x_update(self.m_list, self.y_list, self.target, self.observed, self.rho, self.gamma)
        np.testing.assert_allclose(x.ravel(order='F'), oracle, rtol=1e-8, atol=1e-8)

    def test_large_gamma_pins_observations(self):
        x = halrtc_x_update(self.m_list, self.y_list, self.target, self.observed, self.rho, 1e12)
        np.testing.assert_allclose(x[self.observed], self.target[self.observed], atol=1e-6)


class TestMUpdate(unittest.TestCase):
    """Test cases for the singular-value shrinkage step."""

    def test_prox_optimal_against_perturbations(self):
        rng = np.random.default_rng(4)
        dims = (5, 4, 6)
        for mode in (1, 2, 3):
            x = rng.standard_normal(dims)
            y_i = rng.standard_normal(dims)
            alpha_i, rho = 1.0 / 3.0, 0.2
            center = x + y_i / rho

            def value(m):
                return alpha_i * nuclear_norm(unfold(m, mode)) + 0.5 * rho * np.sum((m - center) ** 2)

            m = halrtc_m_update(x, y_i, mode, alpha_i, rho)
            best = value(m)
            for scale in (1e-4, 1e-2, 1.0):
                for _ in range(50):
                    trial = m + scale * rng.standard_normal(dims)
                    self.assertGreaterEqual(value(trial), best - 1e-12)

    def test_shrinks_rank(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((6, 5, 4))
        m = halrtc_m_update(x, np.zeros_like(x), 1, 1.0, 1.0)
        s_in = np.linalg.svd(unfold(x, 1), compute_uv=False)
        s_out = np.linalg.svd(unfold(m, 1), compute_uv=False)
        np.testing.assert_allclose(s_out, np.maximum(s_in - 1.0, 0.0), atol=1e-10)


class TestHalrtcSolve(unittest.TestCase):
    """Test cases for the ADMM loop."""

    def setUp(self):
        self.truth, _ = generate_tucker(SyntheticSpec(dims=(12, 12, 12), rank=(2, 2, 2), seed=1))
        self.mask = make_mask(self.truth.shape, MaskSpec(sampling_ratio=0.5, seed=2))
        self.y = np.where(self.mask.observed, self.truth, 0.0)
        self.cfg = HalrtcConfig(max_iters=60)

    def test_config_validation(self):
        with self.assertRaises(ValidationError):
            HalrtcConfig(alphas=(0.5, 0.5, 0.5))
        with self.assertRaises(ValidationError):
            HalrtcConfig(alphas=(1.5, -0.5, 0.0))
        with self.assertRaises(ValidationError):
            HalrtcConfig(rho=0.0)
        HalrtcConfig(alphas=(0.2, 0.3, 0.5))

    def test_report(self):
        x, report = halrtc_solve(self.y, self.mask, self.cfg)
        self.assertEqual(x.shape, self.truth.shape)
        self.assertEqual(report.method, "halrtc")
        self.assertEqual(report.objective_trace, [])
        self.assertEqual(len(report.change_trace), report.outer_iters)
        self.assertEqual(len(report.elapsed_trace), report.outer_iters)
        self.assertLessEqual(report.outer_iters, 60)
        self.assertEqual(len(report.estimated_rank), 3)
        self.assertTrue(all(1 <= r <= 12 for r in report.estimated_rank))

    def test_stops_on_tolerance(self):
        _, report = halrtc_solve(self.y, self.mask, HalrtcConfig(tol=0.5, max_iters=100))
        self.assertTrue(report.converged)
        self.assertLess(report.change_trace[-1], 0.5)

    def test_large_gamma_fits_observations(self):
        x, _ = halrtc_solve(self.y, self.mask, HalrtcConfig(gamma=1e12, max_iters=30))
        np.testing.assert_allclose(x[self.mask.observed], self.y[self.mask.observed], atol=1e-6)

    def test_improves_on_mean_fill(self):
        x, _ = halrtc_solve(self.y, self.mask, HalrtcConfig(gamma=1e3, max_iters=200))
        mean_fill = np.where(self.mask.observed, self.y, self.y[self.mask.observed].mean())
        self.assertLess(rse(self.truth, x), rse(self.truth, mean_fill))

    def test_deterministic(self):
        x1, _ = halrtc_solve(self.y, self.mask, self.cfg)
        x2, _ = halrtc_solve(self.y, self.mask, self.cfg)
        np.testing.assert_array_equal(x1, x2)

    def test_shape_mismatch(self):
        with self.assertRaises(TensorArgumentError):
            halrtc_solve(self.y, ObservationMask.full((12, 12, 11)), self.cfg)


@unittest.skipUnless(RUN_SLOW, "set RUN_SLOW_TESTS=1 to run the 50x50x50 baseline contrast")
class TestBaselineContrast(unittest.TestCase):
    """HaLRTC's thresholded n-rank saturates where LRFMTC recovers the true rank."""

    def _trial(self, rank, ratio, snr_db, trial):
        truth, _ = generate_tucker(SyntheticSpec(dims=(50, 50, 50), rank=rank, seed=500 + trial))
        mask = make_mask(truth.shape, MaskSpec(sampling_ratio=ratio, seed=600 + trial))
        noise = NoiseSpec(kind='gaussian_snr', snr_db=snr_db) if snr_db else NoiseSpec(kind='none')
        y = np.where(mask.observed, apply_noise(truth, noise, 700 + trial), 0.0)
        return truth, y, mask

    def test_rank_saturation(self):
        ranks = []
        for trial in range(10):
            _, y, mask = self._trial((8, 8, 8), 0.2, 20.0, trial)
            ranks.append(halrtc_solve(y, mask)[1].estimated_rank)
        self.assertTrue(all(np.mean(ranks, axis=0) > 40), ranks)

    def test_small_rank_readout(self):
        ranks = []
        for trial in range(10):
            _, y, mask = self._trial((2, 2, 2), 0.2, 20.0, trial)
            ranks.append(halrtc_solve(y, mask)[1].estimated_rank)
        self.assertTrue(all(abs(m - 2) <= 1 for m in np.mean(ranks, axis=0)), ranks)

    def test_rse_ordering(self):
        for r in (6, 8, 10):
            ours, baseline = [], []
            for trial in range(10):
                truth, y, mask = self._trial((r, r, r), 0.2, 20.0, trial)
                _, model, _ = solve(y, mask, SolverConfig(seed=trial))
                ours.append(rse(truth, model.reconstruct()))
                baseline.append(rse(truth, halrtc_solve(y, mask)[0]))
            self.assertLess(np.mean(ours), np.mean(baseline), f"rank {r}")


if __name__ == "__main__":
    unittest.main()
