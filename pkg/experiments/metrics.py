"""
Recovery-quality metrics: RSE, PSNR and SSIM over third-order tensors.
"""

import math

import numpy as np
from skimage.metrics import structural_similarity

from core.errors import TensorArgumentError
from core.tensors import as_tensor3

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(truth, estimate):
    truth = as_tensor3(truth, name="truth")
    estimate = as_tensor3(estimate, name="estimate")
    if truth.shape != estimate.shape:
        raise TensorArgumentError(f"truth {truth.shape} and estimate {estimate.shape} differ in shape")
    return truth, estimate


def _peak(truth, peak):
    if peak is None:
        peak = float(np.max(np.abs(truth)))
    if not peak > 0:
        raise TensorArgumentError(f"peak must be positive, got {peak}")
    return float(peak)


def rse(truth, estimate):
    """||truth - estimate||_F / ||truth||_F."""
    truth, estimate = _pair(truth, estimate)
    scale = np.linalg.norm(truth)
    if scale == 0:
        raise TensorArgumentError("RSE is undefined for an all-zero truth tensor")
    return float(np.linalg.norm(truth - estimate) / scale)


def psnr(truth, estimate, peak=None):
    """
    10 log10(peak^2 / MSE) in dB; ``math.inf`` when the estimate is exact.

    ``peak`` defaults to max|truth|.
    """
    truth, estimate = _pair(truth, estimate)
    peak = _peak(truth, peak)
    mse = float(np.mean((truth - estimate) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def ssim(truth, estimate, peak=None):
    """
    Mean single-scale SSIM over the frontal slices ``x[:, :, n]``.

    Each slice uses an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
    K2 = 0.03 and dynamic range ``peak`` (default max|truth|); the slice
    score is the mean over the windows that fit inside the slice.
    """
    truth, estimate = _pair(truth, estimate)
    rows, cols, slices = truth.shape
    if rows < SSIM_WINDOW or cols < SSIM_WINDOW:
        raise TensorArgumentError(
            f"SSIM needs frontal slices of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {rows}x{cols}"
        )
    peak = _peak(truth, peak)
    scores = [
        structural_similarity(
            truth[:, :, n], estimate[:, :, n],
            gaussian_weights=True, sigma=SSIM_SIGMA, use_sample_covariance=False,
            K1=SSIM_K1, K2=SSIM_K2, data_range=peak
        )
        for n in range(slices)
    ]
    return float(np.mean(scores))
