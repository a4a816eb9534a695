"""
Matrix kernels for the completion solvers: thin SVD, singular value
shrinkage, the Hadamard product of Gram matrices and its largest eigenvalue.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from core.errors import NumericalError, TensorArgumentError
from core.tensors import as_matrix, unfold, _check_mode
from utils.logger import get_component_logger

logger = get_component_logger('core', 'linalg')

SYMMETRY_TOL = 1e-10
POWER_TOL = 1e-10
POWER_MAX_ITER = 5000
POWER_RESIDUAL_TOL = 1e-3


class SvdResult(NamedTuple):
    """Thin SVD m = u @ diag(s) @ vt with s nonincreasing."""
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


def thin_svd(m):
    """
    Thin SVD keeping min(rows, cols) triplets.

    Falls back from the divide-and-conquer LAPACK driver to the QR-iteration
    one before giving up.

    Raises:
        TensorArgumentError: empty or non-finite input
        NumericalError: both drivers failed to converge
    """
    m = as_matrix(m)
    last_error = None
    for driver in ('gesdd', 'gesvd'):
        try:
            u, s, vt = scipy.linalg.svd(
                m, full_matrices=False, lapack_driver=driver, check_finite=False
            )
            return SvdResult(u, s, vt)
        except np.linalg.LinAlgError as e:
            logger.warning(f"SVD driver {driver} failed on {m.shape} matrix: {e}")
            last_error = e
    raise NumericalError(f"SVD did not converge for {m.shape} matrix: {last_error}")


def svt(m, threshold, return_singular_values=False):
    """
    Singular value shrinkage U diag(max(s - threshold, 0)) V^T.

    This is the proximal map of ``threshold * nuclear_norm``.

    Args:
        m: Input matrix
        threshold (float): Nonnegative shrinkage amount
        return_singular_values (bool): Also return the shrunk singular values

    Returns:
        numpy.ndarray, or (numpy.ndarray, numpy.ndarray)
    """
    if not threshold >= 0:
        raise TensorArgumentError(f"svt threshold must be nonnegative, got {threshold}")
    u, s, vt = thin_svd(m)
    shrunk = np.maximum(s - threshold, 0.0)
    keep = shrunk > 0
    result = (u[:, keep] * shrunk[keep]) @ vt[keep, :]
    if return_singular_values:
        return result, shrunk
    return result


def nuclear_norm(m):
    """Sum of singular values."""
    m = as_matrix(m)
    return float(np.sum(scipy.linalg.svdvals(m, check_finite=False)))


def gram_hadamard(factors, skip):
    """
    Elementwise product of the Gram matrices B_h^T B_h over h != skip.

    Equals kr_complement(factors, skip).T @ kr_complement(factors, skip).
    """
    _check_mode(skip)
    result = np.ones((factors.L, factors.L))
    for h in (3, 2, 1):
        if h != skip:
            b = factors.factor(h)
            result *= b.T @ b
    return result


def _power_iteration(m, tol, max_iter):
    n = m.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    reseeded = False
    lam_prev = None
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = m @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            if reseeded:
                return 0.0
            # the all-ones seed sits in the null space; restart from a fixed random vector
            v = np.random.default_rng(0).standard_normal(n)
            v /= np.linalg.norm(v)
            reseeded = True
            lam_prev = None
            continue
        lam = float(v @ w)
        residual = np.linalg.norm(w - lam * v)
        v = w / norm_w
        # a stalled quotient with a large residual means opposite-sign eigenvalues of equal size
        if (lam_prev is not None
                and abs(lam - lam_prev) <= tol * max(abs(lam), np.finfo(float).tiny)
                and residual <= POWER_RESIDUAL_TOL * norm_w):
            return lam
        lam_prev = lam
    raise NumericalError(
        f"power iteration did not converge in {max_iter} iterations",
        iterations=max_iter, last_estimate=lam
    )


def max_eig_sym(m, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """
    Largest eigenvalue of a symmetric matrix by power iteration.

    Starts from the all-ones vector and stops when the Rayleigh quotient
    changes by less than ``tol`` relatively. When the dominant-magnitude
    eigenvalue is negative a second pass on the shifted matrix recovers the
    largest one.

    Raises:
        TensorArgumentError: non-square or asymmetric input
        NumericalError: iteration cap reached (``last_estimate`` is set)
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise TensorArgumentError(f"max_eig_sym needs a square matrix, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise TensorArgumentError("max_eig_sym needs a symmetric matrix")
    m = 0.5 * (m + m.T)

    dominant = _power_iteration(m, tol, max_iter)
    if dominant >= 0:
        return dominant
    shifted = m - dominant * np.eye(m.shape[0])
    return _power_iteration(shifted, tol, max_iter) + dominant


def threshold_rank(s, ratio):
    """Number of singular values with s_i^2 > ratio * s_max^2."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s.max() == 0:
        return 0
    s_max = s.max()
    return int(np.count_nonzero(s ** 2 > ratio * s_max ** 2))


def numerical_rank(m, rel_tol=1e-8):
    """Number of singular values above ``rel_tol * s_max``."""
    s = scipy.linalg.svdvals(as_matrix(m), check_finite=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def n_rank(t, ratio=1e-4):
    """Thresholded ranks of the three unfoldings of ``t`` (squared-ratio rule)."""
    return tuple(
        threshold_rank(scipy.linalg.svdvals(unfold(t, k), check_finite=False), ratio)
        for k in (1, 2, 3)
    )