"""
Trial runner and parameter sweeps for the synthetic completion experiments.

A trial draws a Tucker tensor, a missing pattern and a noise realization
from seeds derived from one root seed, completes it with LRFMTC or the
noisy HaLRTC baseline and records the recovery error and estimated rank.
A sweep runs every cell of a grid for a number of trials and aggregates
the trials per cell.
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Literal, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import settings
from core.errors import TensorCompletionError
from experiments.corruption import MaskSpec, NoiseSpec, apply_noise, make_mask
from experiments.metrics import rse
from experiments.synthetic import SyntheticSpec, check_feasible, generate_tucker
from solvers.halrtc import HalrtcConfig, halrtc_solve
from solvers.lrfmtc import SolverConfig, solve
from utils.logger import get_component_logger, log_experiment_function, log_structured

logger = get_component_logger('experiments', 'harness')

Method = Literal['lrfmtc', 'halrtc']

AGGREGATE_COLUMNS = [
    'dims', 'rank_1', 'rank_2', 'rank_3', 'sampling_ratio', 'snr_db', 'noise', 'mask',
    'method', 'L', 'alpha', 'trials', 'failures', 'mean_rank_1', 'mean_rank_2',
    'mean_rank_3', 'mean_rse', 'std_rse', 'mean_wall_time'
]

TRIAL_COLUMNS = [
    'cell', 'trial', 'seed', 'dims', 'rank_1', 'rank_2', 'rank_3', 'sampling_ratio',
    'snr_db', 'noise', 'mask', 'method', 'L', 'alpha', 'rse', 'est_rank_1', 'est_rank_2',
    'est_rank_3', 'wall_time', 'converged', 'failed', 'error'
]


class TrialSeeds(NamedTuple):
    data: int
    mask: int
    noise: int
    init: int


def derive_seeds(root_seed, trial):
    """Independent per-use seeds of one trial, spawned from (root_seed, trial)."""
    children = np.random.SeedSequence([int(root_seed), int(trial)]).spawn(4)
    return TrialSeeds(*(int(c.generate_state(1, dtype=np.uint64)[0]) for c in children))


class TrialSpec(BaseModel):
    """
    Everything a trial needs besides the method and the trial index.

    ``snr_db=None`` means noiseless observations whatever ``noise`` says.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    dims: Tuple[int, int, int] = (50, 50, 50)
    rank: Tuple[int, int, int]
    sampling_ratio: float = Field(..., gt=0, le=1)
    snr_db: Optional[float] = 20.0
    noise: Literal['gaussian_snr', 'poisson', 'none'] = 'gaussian_snr'
    mask: Literal['random', 'block_ltuple'] = 'random'
    l: int = Field(4, ge=1)
    root_seed: int = 0
    solver: SolverConfig = SolverConfig()
    halrtc: HalrtcConfig = HalrtcConfig()

    @model_validator(mode='after')
    def _feasible_rank(self):
        check_feasible(self.dims, self.rank)
        return self

    def noise_spec(self) -> NoiseSpec:
        if self.noise == 'none' or (self.noise == 'gaussian_snr' and self.snr_db is None):
            return NoiseSpec(kind='none', snr_db=None)
        return NoiseSpec(kind=self.noise, snr_db=self.snr_db)

    def mask_spec(self, seed) -> MaskSpec:
        return MaskSpec(kind=self.mask, sampling_ratio=self.sampling_ratio, l=self.l, seed=seed)


@dataclass
class TrialRecord:
    """Outcome of one trial; failed trials carry the error text and NaN RSE."""

    method: str
    dims: Tuple[int, int, int]
    rank: Tuple[int, int, int]
    sampling_ratio: float
    snr_db: Optional[float]
    noise: str
    mask: str
    L: int
    alpha: float
    trial: int
    seed: int
    rse: float = math.nan
    estimated_rank: Tuple[int, int, int] = (0, 0, 0)
    wall_time: float = 0.0
    converged: bool = False
    failed: bool = False
    error: str = ''
    cell: int = 0

    def to_row(self):
        row = asdict(self)
        row['dims'] = 'x'.join(str(d) for d in self.dims)
        for i in range(3):
            row[f'rank_{i + 1}'] = self.rank[i]
            row[f'est_rank_{i + 1}'] = self.estimated_rank[i]
        row['snr_db'] = math.inf if self.snr_db is None else self.snr_db
        return {name: row[name] for name in TRIAL_COLUMNS}


def _complete(method, y, mask, spec, init_seed):
    if method == 'lrfmtc':
        cfg = spec.solver.model_copy(update={'seed': init_seed})
        _, model, report = solve(y, mask, cfg)
        return model.reconstruct(), report
    if method == 'halrtc':
        return halrtc_solve(y, mask, spec.halrtc)
    raise ValueError(f"unknown method {method!r}")


def run_trial(spec: TrialSpec, method: Method, trial=0):
    """
    Run one seeded trial of ``method``.

    Solver and numerical failures are returned as a record with
    ``failed=True``; invalid specs raise.
    """
    if method not in ('lrfmtc', 'halrtc'):
        raise ValueError(f"unknown method {method!r}")
    seeds = derive_seeds(spec.root_seed, trial)
    record = TrialRecord(
        method=method, dims=spec.dims, rank=spec.rank, sampling_ratio=spec.sampling_ratio,
        snr_db=spec.snr_db if spec.noise_spec().kind != 'none' else None,
        noise=spec.noise_spec().kind, mask=spec.mask,
        L=spec.solver.L, alpha=spec.solver.alpha, trial=trial, seed=seeds.data
    )
    try:
        truth, _ = generate_tucker(SyntheticSpec(dims=spec.dims, rank=spec.rank, seed=seeds.data))
        mask = make_mask(spec.dims, spec.mask_spec(seeds.mask))
        noisy = apply_noise(truth, spec.noise_spec(), seeds.noise)
        y = np.asfortranarray(np.where(mask.observed, noisy, 0.0))

        estimate, report = _complete(method, y, mask, spec, seeds.init)
        record.rse = rse(truth, estimate)
        record.estimated_rank = tuple(int(r) for r in report.estimated_rank)
        record.wall_time = report.wall_time
        record.converged = report.converged
    except TensorCompletionError as e:
        logger.warning(f"Trial {trial} ({method}, rank {spec.rank}) failed: {e}")
        record.failed = True
        record.error = f"{type(e).__name__}: {e}"

    log_structured(
        logger, "info", "trial_complete",
        method=method, trial=trial, rank=list(spec.rank), rse=record.rse,
        estimated_rank=list(record.estimated_rank), failed=record.failed
    )
    return record


class SweepGrid(BaseModel):
    """
    Cartesian grid of trial settings, loaded from a JSON file for ``sweep --grid``.

    ``solver`` and ``halrtc`` hold the settings shared by every cell; the
    swept ``L`` and ``alpha`` values override theirs.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    dims: Tuple[int, int, int] = (50, 50, 50)
    ranks: List[Tuple[int, int, int]] = Field(..., min_length=1)
    sampling_ratios: List[float] = Field(..., min_length=1)
    snr_db: List[Optional[float]] = Field(default_factory=lambda: [20.0], min_length=1)
    methods: List[Method] = Field(default_factory=lambda: ['lrfmtc'], min_length=1)
    L: List[int] = Field(default_factory=lambda: [150], min_length=1)
    alpha: List[float] = Field(default_factory=lambda: [30.0], min_length=1)
    noise: Literal['gaussian_snr', 'poisson', 'none'] = 'gaussian_snr'
    mask: Literal['random', 'block_ltuple'] = 'random'
    l: int = Field(4, ge=1)
    trials: int = Field(10, ge=1)
    root_seed: int = 0
    solver: SolverConfig = SolverConfig()
    halrtc: HalrtcConfig = HalrtcConfig()

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            return cls.model_validate_json(f.read())

    def cells(self):
        """(TrialSpec, method) per grid cell, in a fixed order."""
        cells = []
        for rank, sr, snr, method, width, alpha in itertools.product(
            self.ranks, self.sampling_ratios, self.snr_db, self.methods, self.L, self.alpha
        ):
            spec = TrialSpec(
                dims=self.dims, rank=rank, sampling_ratio=sr, snr_db=snr,
                noise=self.noise, mask=self.mask, l=self.l, root_seed=self.root_seed,
                solver=self.solver.model_copy(update={'L': width, 'alpha': alpha}),
                halrtc=self.halrtc
            )
            cells.append((spec, method))
        return cells


def _run_job(job):
    cell, spec, method, trial = job
    record = run_trial(spec, method, trial)
    record.cell = cell
    return record


def aggregate(trials):
    """Per-cell summary of a trial table; failed trials are counted, not averaged."""
    keys = ['cell', 'dims', 'rank_1', 'rank_2', 'rank_3', 'sampling_ratio', 'snr_db',
            'noise', 'mask', 'method', 'L', 'alpha']
    counts = trials.groupby('cell').agg(trials=('trial', 'size'), failures=('failed', 'sum'))

    ok = trials[~trials['failed']]
    stats = ok.groupby('cell').agg({
        'est_rank_1': ['mean'],
        'est_rank_2': ['mean'],
        'est_rank_3': ['mean'],
        'rse': ['mean', 'std'],
        'wall_time': ['mean']
    })
    stats.columns = ['_'.join(col).strip() for col in stats.columns.values]
    stats = stats.rename(columns={
        'est_rank_1_mean': 'mean_rank_1', 'est_rank_2_mean': 'mean_rank_2',
        'est_rank_3_mean': 'mean_rank_3', 'rse_mean': 'mean_rse', 'rse_std': 'std_rse',
        'wall_time_mean': 'mean_wall_time'
    })

    table = (trials[keys].drop_duplicates('cell').set_index('cell')
             .join(counts).join(stats).reset_index(drop=True))
    table['failures'] = table['failures'].astype(int)
    return table[AGGREGATE_COLUMNS]


@log_experiment_function
def run_sweep(grid: SweepGrid, trials=None, workers=None):
    """
    Run ``trials`` seeded trials per grid cell, in parallel when ``workers`` > 1.

    Records are ordered by (cell, trial) before aggregation, so the result
    does not depend on completion order.

    Returns:
        tuple: (aggregate DataFrame, per-trial DataFrame)
    """
    trials = grid.trials if trials is None else int(trials)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    workers = settings.NUM_WORKERS if workers is None else max(1, int(workers))

    jobs = [
        (cell, spec, method, trial)
        for cell, (spec, method) in enumerate(grid.cells())
        for trial in range(trials)
    ]
    logger.info(f"Sweep of {len(jobs) // trials} cells x {trials} trials on {workers} worker(s)")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(job) for job in jobs]

    records.sort(key=lambda r: (r.cell, r.trial))
    trial_table = pd.DataFrame([r.to_row() for r in records], columns=TRIAL_COLUMNS)
    table = aggregate(trial_table)
    log_structured(
        logger, "info", "sweep_complete",
        cells=len(table), trials=len(trial_table), failures=int(trial_table['failed'].sum())
    )
    return table, trial_table
