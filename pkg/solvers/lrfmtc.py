"""
Tucker completion by trace-norm regularized factor matrices (LRFMTC).

The Tucker model is carried in its equivalent wide CPD form
X = [[B1, B2, B3]] with low-rank B_k. The solver minimizes

    alpha * sum_k ||B_k||_* + 1/2 ||(Y - [[B1, B2, B3]]) * O||_F^2

by block coordinate descent over k = 1, 2, 3; each block is solved by an
accelerated proximal fixed-point iteration. The multilinear rank and the
Tucker core/factors are read off the SVDs of the final B_k.
"""

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from core.errors import DegenerateStateError, NumericalDivergenceError, NumericalError, TensorArgumentError
from core.linalg import gram_hadamard, max_eig_sym, nuclear_norm, svt, thin_svd, threshold_rank
from core.tensors import (
    FactorSet, as_tensor3, cpd_reconstruct, kr_complement,
    masked_residual, tucker_reconstruct, unfold
)
from solvers.als import cp_als
from utils.logger import get_component_logger, log_solver_function, log_structured

logger = get_component_logger('solver', 'lrfmtc')

EPS = np.finfo(np.float64).eps


class SolverConfig(BaseModel):
    """Parameters of an LRFMTC run."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    alpha: float = Field(30.0, ge=0, description="trace-norm weight")
    L: int = Field(150, ge=1, description="CPD width of the factor matrices")
    max_outer: int = Field(200, ge=1)
    max_inner: int = Field(50, ge=1)
    inner_tol: float = Field(1e-4, gt=0)
    outer_tol: float = Field(1e-6, gt=0)
    rank_threshold_ratio: float = Field(1e-4, gt=0, lt=1)
    step_safety: float = Field(1.0, gt=0, lt=2)
    seed: int = 0
    als_sweeps: int = Field(30, ge=0)
    als_ridge: float = Field(1e-8, ge=0)
    accelerate: bool = True
    backtrack: bool = True


@dataclass(frozen=True)
class TuckerModel:
    """Core tensor plus factor matrices U1, U2, U3."""

    core: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    @property
    def rank(self) -> Tuple[int, int, int]:
        return tuple(int(r) for r in self.core.shape)

    @property
    def factors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.u1, self.u2, self.u3)

    def reconstruct(self) -> np.ndarray:
        return tucker_reconstruct(self.core, self.u1, self.u2, self.u3)


@dataclass
class SolveReport:
    """Per-run trace and summary of a completion solve."""

    method: str
    objective_trace: List[float] = field(default_factory=list)
    change_trace: List[float] = field(default_factory=list)
    elapsed_trace: List[float] = field(default_factory=list)
    outer_iters: int = 0
    inner_iters_total: int = 0
    converged: bool = False
    estimated_rank: Tuple[int, int, int] = (0, 0, 0)
    wall_time: float = 0.0


def _check_problem(y, o, factors=None):
    y = as_tensor3(y, name="observations")
    if y.shape != o.dims:
        raise TensorArgumentError(f"observations {y.shape} and mask {o.dims} differ in shape")
    if factors is not None and factors.dims != y.shape:
        raise TensorArgumentError(f"factor rows {factors.dims} do not match tensor dims {y.shape}")
    return y


def objective(factors, y, o, alpha):
    """alpha * sum_k ||B_k||_* + 1/2 ||(Y - [[B1, B2, B3]]) * O||_F^2."""
    y = _check_problem(y, o, factors)
    penalty = sum(nuclear_norm(b) for b in factors) if alpha != 0 else 0.0
    return alpha * penalty + masked_residual(y, cpd_reconstruct(factors), o)


class _Block:
    """Unfolded data and frozen Khatri-Rao complement of one BCD block."""

    def __init__(self, factors, k, y, o):
        if k not in (1, 2, 3):
            raise TensorArgumentError(f"block index must be 1, 2 or 3, got {k!r}")
        self.k = k
        self.kr = kr_complement(factors, k)
        self.yk = unfold(y, k)
        self.ok = unfold(o.indicator, k)

    def residual(self, b):
        return (b @ self.kr.T - self.yk) * self.ok

    def gradient(self, b):
        return self.residual(b) @ self.kr

    def fit(self, b):
        r = self.residual(b)
        return 0.5 * float(np.vdot(r, r))

    def objective(self, b, alpha):
        penalty = alpha * nuclear_norm(b) if alpha != 0 else 0.0
        return penalty + self.fit(b)


def subgrad_smooth(factors, k, y, o):
    """Gradient of the fitting term with respect to B_k: [(B_k K^T - Y_(k)) * O_(k)] K."""
    y = _check_problem(y, o, factors)
    return _Block(factors, k, y, o).gradient(factors.factor(k))


def subproblem_objective(b, k, factors, y, o, alpha):
    """Objective of the B_k block with the other factors frozen at ``factors``."""
    y = _check_problem(y, o, factors)
    return _Block(factors, k, y, o).objective(np.asarray(b, dtype=np.float64), alpha)


def step_size(factors, k, safety=1.0):
    """
    tau_k = safety / lambda_max(Hadamard product of the complement Grams).

    Falls back to a dense symmetric eigensolver when power iteration hits
    its iteration cap.
    """
    if not 0 < safety < 2:
        raise TensorArgumentError(f"step safety must lie in (0, 2), got {safety}")
    gram = gram_hadamard(factors, k)
    try:
        lam = max_eig_sym(gram)
    except NumericalError as e:
        logger.warning(f"Power iteration for block {k} stalled ({e}); using dense eigensolver")
        lam = float(scipy.linalg.eigh(
            0.5 * (gram + gram.T), eigvals_only=True,
            subset_by_index=[gram.shape[0] - 1, gram.shape[0] - 1]
        )[0])
    if not lam > 0:
        raise DegenerateStateError(
            f"step size undefined for block {k}: complement factors are zero (lambda_max={lam})"
        )
    return safety / lam


def solve_subproblem(factors, k, y, o, alpha, max_inner, inner_tol,
                     step_safety=1.0, accelerate=True, backtrack=True):
    """
    Update B_k by the proximal fixed-point iteration with the others frozen.

    With ``accelerate`` the extrapolated iteration is used:
        Z = M - tau * grad(M);  B+ = svt(Z, tau * alpha)
        u+ = (1 + sqrt(1 + 4 u^2)) / 2;  M+ = B+ + ((u - 1) / u+) (B+ - B)
    starting from u = 1, M = B. Without it M+ = B+ (basic iteration).
    Stops when ||B+ - B||_F / ||B||_F < inner_tol or after ``max_inner``.

    With ``backtrack`` the first trial step is the Hadamard-Gram bound
    divided by the sampling ratio. It is halved until the quadratic upper
    bound of the fitting term holds at the prox point, and is never taken
    below the bound.

    The block objective at the returned matrix never exceeds its value at
    the input; if the last iterate is worse, the input is kept.

    Returns:
        tuple: (new B_k, number of inner iterations)
    """
    y = _check_problem(y, o, factors)
    block = _Block(factors, k, y, o)
    tau_floor = step_size(factors, k, step_safety)
    tau = tau_floor / o.sampling_ratio if backtrack else tau_floor

    b_start = np.array(factors.factor(k))
    b_prev = b_start
    momentum = b_start
    u = 1.0
    iterations = 0

    for iterations in range(1, max_inner + 1):
        r = block.residual(momentum)
        grad = r @ block.kr
        fit = 0.5 * float(np.vdot(r, r))
        while True:
            z = momentum - tau * grad
            if not np.all(np.isfinite(z)):
                raise NumericalDivergenceError(
                    f"block {k} iterate became non-finite at inner iteration {iterations}",
                    iterations=iterations
                )
            b_next = svt(z, tau * alpha)
            if tau <= tau_floor:
                break
            step = b_next - momentum
            bound = fit + float(np.vdot(grad, step)) + float(np.vdot(step, step)) / (2.0 * tau)
            if block.fit(b_next) <= bound:
                break
            tau = max(0.5 * tau, tau_floor)
        if accelerate:
            u_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * u * u))
            momentum = b_next + ((u - 1.0) / u_next) * (b_next - b_prev)
            u = u_next
        else:
            momentum = b_next
        change = np.linalg.norm(b_next - b_prev) / max(np.linalg.norm(b_prev), EPS)
        b_prev = b_next
        if change < inner_tol:
            break

    start_value = block.objective(b_start, alpha)
    end_value = block.objective(b_prev, alpha)
    if end_value > start_value:
        logger.warning(
            f"Block {k} ended above its start ({end_value:.6g} > {start_value:.6g}); keeping input"
        )
        return b_start, iterations
    return b_prev, iterations


def stationarity_gap(factors, k, y, o, alpha, step_safety=1.0):
    """
    Relative proximal-gradient residual of block k:
    ||svt(B_k - tau * grad, tau * alpha) - B_k||_F / ||B_k||_F.
    """
    y = _check_problem(y, o, factors)
    b = factors.factor(k)
    tau = step_size(factors, k, step_safety)
    moved = svt(b - tau * _Block(factors, k, y, o).gradient(b), tau * alpha)
    return float(np.linalg.norm(moved - b) / max(np.linalg.norm(b), EPS))


def initialize(y, o, L, seed, sweeps=30, ridge=1e-8):
    """
    Initial factors: CPD of Y by ALS after filling unobserved entries with the observed mean.

    Args:
        y: Observed tensor (unobserved entries are ignored)
        o (ObservationMask): Observed entries
        L (int): CPD width
        seed (int): Seed of the standard-normal ALS start

    Returns:
        FactorSet
    """
    y = _check_problem(y, o)
    if L < 1:
        raise TensorArgumentError(f"L must be positive, got {L}")
    if o.observed_count == 0:
        raise TensorArgumentError("cannot initialize from a mask with no observed entries")
    observed = o.observed
    filled = np.where(observed, y, y[observed].mean())
    return cp_als(filled, L, np.random.default_rng(seed), sweeps=sweeps, ridge=ridge)


def extract_tucker(factors, threshold_ratio=1e-4):
    """
    Tucker model from the SVDs B_k = U_k D_k V_k^T.

    Keeps the triplets with s_i^2 > threshold_ratio * s_max^2; the core is
    [[D1 V1^T, D2 V2^T, D3 V3^T]] over the kept triplets and the factors are
    the kept U_k.
    """
    if not 0 < threshold_ratio < 1:
        raise TensorArgumentError(f"threshold ratio must lie in (0, 1), got {threshold_ratio}")
    bases, weights = [], []
    for k, b in enumerate(factors, start=1):
        u, s, vt = thin_svd(b)
        if s[0] == 0:
            raise DegenerateStateError(f"factor B{k} is identically zero")
        r = threshold_rank(s, threshold_ratio)
        bases.append(u[:, :r])
        weights.append(s[:r, None] * vt[:r, :])
    core = cpd_reconstruct(FactorSet(*weights))
    return TuckerModel(core, *bases)


@log_solver_function
def solve(y, o, cfg: Optional[SolverConfig] = None, initial: Optional[FactorSet] = None):
    """
    Run LRFMTC: ALS initialization, BCD sweeps k = 1, 2, 3, Tucker extraction.

    The outer loop stops when the relative change between successive
    reconstructions falls below ``cfg.outer_tol`` or after ``cfg.max_outer``
    sweeps; hitting the cap is reported through ``converged=False``.

    Returns:
        tuple: (FactorSet, TuckerModel, SolveReport)
    """
    cfg = cfg or SolverConfig()
    y = _check_problem(y, o, initial)
    if o.observed_count == 0:
        raise TensorArgumentError("mask has no observed entries")

    start = time.perf_counter()
    report = SolveReport(method="lrfmtc")
    factors = initial if initial is not None else initialize(
        y, o, cfg.L, cfg.seed, sweeps=cfg.als_sweeps, ridge=cfg.als_ridge
    )
    logger.info(
        f"LRFMTC on {y.shape} tensor, SR={o.sampling_ratio:.3f}, alpha={cfg.alpha}, L={factors.L}"
    )

    x_prev = cpd_reconstruct(factors)
    for outer in range(1, cfg.max_outer + 1):
        for k in (1, 2, 3):
            b, inner = solve_subproblem(
                factors, k, y, o, cfg.alpha, cfg.max_inner, cfg.inner_tol,
                step_safety=cfg.step_safety, accelerate=cfg.accelerate,
                backtrack=cfg.backtrack
            )
            factors = factors.replace(k, b)
            report.inner_iters_total += inner
            report.objective_trace.append(objective(factors, y, o, cfg.alpha))
            report.elapsed_trace.append(time.perf_counter() - start)

        x = cpd_reconstruct(factors)
        change = float(np.linalg.norm(x - x_prev) / max(np.linalg.norm(x_prev), EPS))
        report.change_trace.append(change)
        report.outer_iters = outer
        x_prev = x
        logger.debug(
            f"outer {outer}: objective={report.objective_trace[-1]:.10g} change={change:.3e}"
        )
        if change < cfg.outer_tol:
            report.converged = True
            break

    model = extract_tucker(factors, cfg.rank_threshold_ratio)
    report.estimated_rank = model.rank
    report.wall_time = time.perf_counter() - start

    log_structured(
        logger, "info", "solve_complete",
        method="lrfmtc", outer_iters=report.outer_iters,
        inner_iters=report.inner_iters_total, converged=report.converged,
        estimated_rank=report.estimated_rank, wall_time=round(report.wall_time, 3)
    )
    return factors, model, report
