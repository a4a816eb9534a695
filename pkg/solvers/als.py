"""
CP decomposition by alternating least squares, used to initialize LRFMTC.
"""

import numpy as np
import scipy.linalg

from core.linalg import gram_hadamard
from core.tensors import FactorSet, as_tensor3, kr_complement, unfold
from utils.logger import get_component_logger

logger = get_component_logger('solver', 'als')


def _solve_normal_equations(gram, rhs):
    """Solve gram @ x.T = rhs.T for x, Cholesky first, least squares if not PD."""
    try:
        c = scipy.linalg.cho_factor(gram, check_finite=False)
        return scipy.linalg.cho_solve(c, rhs.T, check_finite=False).T
    except np.linalg.LinAlgError:
        logger.warning("ALS normal matrix not positive definite, using least squares")
        return scipy.linalg.lstsq(gram, rhs.T, check_finite=False)[0].T


def rebalance(factors):
    """
    Rescale columns so the three factors share equal column norms.

    The reconstructed tensor is unchanged; zero columns are left alone.
    """
    norms = np.stack([np.linalg.norm(b, axis=0) for b in factors])
    alive = np.all(norms > 0, axis=0)
    target = np.ones(factors.L)
    target[alive] = np.prod(norms[:, alive], axis=0) ** (1.0 / 3.0)
    scaled = []
    for b, n in zip(factors, norms):
        scale = np.ones(factors.L)
        scale[alive] = target[alive] / n[alive]
        scaled.append(b * scale)
    return FactorSet(*scaled)


def cp_als(x, rank, rng, sweeps=30, ridge=1e-8):
    """
    Fit a rank-``rank`` CPD to a dense tensor by ALS.

    Args:
        x: Dense third-order tensor
        rank (int): Number of rank-one components
        rng (numpy.random.Generator): Source of the standard-normal start
        sweeps (int): Number of full passes over the three modes
        ridge (float): Tikhonov term added to each L x L normal matrix

    Returns:
        FactorSet: The fitted factors, column norms balanced across modes
    """
    x = as_tensor3(x)
    factors = FactorSet(*(rng.standard_normal((d, rank)) for d in x.shape))
    eye = np.eye(rank)

    for sweep in range(sweeps):
        for k in (1, 2, 3):
            gram = gram_hadamard(factors, k) + ridge * eye
            rhs = unfold(x, k) @ kr_complement(factors, k)
            factors = factors.replace(k, _solve_normal_equations(gram, rhs))
        factors = rebalance(factors)

    logger.debug(f"ALS finished {sweeps} sweeps at rank {rank} for dims {x.shape}")
    return factors
