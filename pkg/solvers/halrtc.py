"""
Noisy HaLRTC baseline: ADMM over three unfolding-wise auxiliary tensors.

Model:
    min  gamma/2 ||X_Omega - T_Omega||_F^2 + sum_i alpha_i ||M_i(i)||_*
    s.t. X = M_i, i = 1, 2, 3

The hard projection of the noiseless method is replaced by the least-squares
term; gamma -> infinity recovers it.
"""

import time
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import NumericalDivergenceError, TensorArgumentError
from core.linalg import n_rank, svt
from core.tensors import as_tensor3, fold, unfold
from solvers.lrfmtc import EPS, SolveReport
from utils.logger import get_component_logger, log_solver_function, log_structured

logger = get_component_logger('solver', 'halrtc')


class HalrtcConfig(BaseModel):
    """Parameters of a noisy HaLRTC run."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    alphas: Tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    rho: float = Field(1e-2, gt=0, description="initial ADMM penalty")
    rho_growth: float = Field(1.05, ge=1)
    rho_max: float = Field(10.0, gt=0)
    gamma: float = Field(0.05, gt=0, description="data-fit weight")
    max_iters: int = Field(500, ge=1)
    tol: float = Field(1e-6, gt=0)
    rank_threshold_ratio: float = Field(1e-4, gt=0, lt=1)

    @field_validator('alphas')
    @classmethod
    def _alphas_on_simplex(cls, value):
        if any(a < 0 for a in value):
            raise ValueError(f"alphas must be nonnegative, got {value}")
        if abs(sum(value) - 1.0) > 1e-12:
            raise ValueError(f"alphas must sum to 1, got {sum(value)!r}")
        return value


def halrtc_m_update(x, y_i, mode, alpha_i, rho):
    """
    Minimizer in M_i of alpha_i ||M_i(mode)||_* + rho/2 ||M_i - X - Y_i / rho||_F^2:
    singular-value shrinkage of the mode unfolding of X + Y_i / rho by alpha_i / rho.
    """
    shifted = unfold(x, mode) + unfold(y_i, mode) / rho
    return fold(svt(shifted, alpha_i / rho), mode, x.shape)


def halrtc_x_update(m_list, y_list, target, observed, rho, gamma):
    """
    Exact minimizer in X of the augmented Lagrangian given {M_i, Y_i}.

    Off the observed set X = (1/n) sum (M_i - Y_i / rho); on it
    X = (gamma T + sum (rho M_i - Y_i)) / (n rho + gamma).

    Args:
        m_list, y_list: Auxiliary tensors and multipliers
        target: Observed data T (values off the observed set are ignored)
        observed: Boolean tensor of observed entries
        rho (float): ADMM penalty
        gamma (float): Data-fit weight
    """
    n = len(m_list)
    sum_m = sum(m_list)
    sum_y = sum(y_list)
    off = (sum_m - sum_y / rho) / n
    on = (gamma * target + rho * sum_m - sum_y) / (n * rho + gamma)
    return np.asfortranarray(np.where(observed, on, off))


@log_solver_function
def halrtc_solve(y, o, cfg: Optional[HalrtcConfig] = None):
    """
    Complete ``y`` on the mask ``o`` with noisy HaLRTC.

    X starts from the observed entries with the observed mean filled in,
    M_i = X and Y_i = 0. Each iteration shrinks the unfoldings, updates X in
    closed form and ascends the multipliers; rho grows geometrically up to
    ``rho_max``. Stops after ``max_iters`` or when the relative X change is
    below ``tol``.

    Returns:
        tuple: (completed tensor, SolveReport with the X-change trace)
    """
    cfg = cfg or HalrtcConfig()
    y = as_tensor3(y, name="observations")
    if y.shape != o.dims:
        raise TensorArgumentError(f"observations {y.shape} and mask {o.dims} differ in shape")
    if o.observed_count == 0:
        raise TensorArgumentError("mask has no observed entries")

    start = time.perf_counter()
    report = SolveReport(method="halrtc")
    observed = o.observed
    dims = y.shape

    x = np.asfortranarray(np.where(observed, y, y[observed].mean()))
    m_list = [x.copy() for _ in range(3)]
    y_list = [np.zeros(dims, order='F') for _ in range(3)]
    rho = cfg.rho
    logger.info(f"HaLRTC on {dims} tensor, SR={o.sampling_ratio:.3f}, gamma={cfg.gamma}")

    for it in range(1, cfg.max_iters + 1):
        for i, mode in enumerate((1, 2, 3)):
            m_list[i] = halrtc_m_update(x, y_list[i], mode, cfg.alphas[i], rho)

        x_prev = x
        x = halrtc_x_update(m_list, y_list, y, observed, rho, cfg.gamma)
        if not np.all(np.isfinite(x)):
            raise NumericalDivergenceError(
                f"HaLRTC iterate became non-finite at iteration {it}", iterations=it
            )
        for i in range(3):
            y_list[i] = y_list[i] - rho * (m_list[i] - x)

        change = float(np.linalg.norm(x - x_prev) / max(np.linalg.norm(x_prev), EPS))
        report.change_trace.append(change)
        report.elapsed_trace.append(time.perf_counter() - start)
        report.outer_iters = it
        logger.debug(f"iteration {it}: rho={rho:.3g} change={change:.3e}")
        if change < cfg.tol:
            report.converged = True
            break
        rho = min(rho * cfg.rho_growth, cfg.rho_max)

    report.estimated_rank = n_rank(x, cfg.rank_threshold_ratio)
    report.wall_time = time.perf_counter() - start
    log_structured(
        logger, "info", "solve_complete",
        method="halrtc", iterations=report.outer_iters, converged=report.converged,
        estimated_rank=report.estimated_rank, wall_time=round(report.wall_time, 3)
    )
    return x, report
