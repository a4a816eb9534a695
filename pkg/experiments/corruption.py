"""
Noise injection and missing-entry patterns for completion experiments.
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import TensorArgumentError
from core.tensors import ObservationMask, as_tensor3, check_dims
from utils.logger import get_component_logger

logger = get_component_logger('experiments', 'corruption')


class NoiseSpec(BaseModel):
    """
    Additive Gaussian noise at a target SNR, Poisson noise, or none.

    SNR (dB) = 10 log10(var(signal) / var(noise)) over the full tensor.
    Poisson noise draws counts at rate ``scale * (x - min x)``, so brighter
    entries are noisier.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['none', 'gaussian_snr', 'poisson'] = 'none'
    snr_db: Optional[float] = 20.0
    scale: float = Field(1000.0, gt=0)

    @model_validator(mode='after')
    def _snr_given(self):
        if self.kind == 'gaussian_snr' and (self.snr_db is None or math.isnan(self.snr_db)):
            raise ValueError("gaussian_snr noise needs snr_db")
        return self


class MaskSpec(BaseModel):
    """
    Random or block (l-tuple) missingness at a target sampling ratio.

    Block masks remove runs of ``l`` consecutive entries along the fibers of
    one mode (``mode``, or a mode drawn from the seed when None).
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['random', 'block_ltuple'] = 'random'
    sampling_ratio: float = Field(..., gt=0, le=1)
    l: int = Field(4, ge=1)
    seed: int = 0
    mode: Optional[int] = Field(None, ge=1, le=3)


def apply_noise(x, spec: NoiseSpec, seed):
    """
    Return a noisy copy of ``x``.

    gaussian_snr: i.i.d. N(0, var(x) 10^(-snr/10)); an infinite SNR adds nothing.
    poisson: Poisson(scale (x - min x)) / scale + min x.
    none: identity.
    """
    x = as_tensor3(x)
    if spec.kind == 'none':
        return x.copy(order='F')
    rng = np.random.default_rng(seed)
    if spec.kind == 'gaussian_snr':
        if math.isinf(spec.snr_db) and spec.snr_db > 0:
            return x.copy(order='F')
        noise_var = float(np.var(x)) * 10.0 ** (-spec.snr_db / 10.0)
        noisy = x + rng.normal(0.0, math.sqrt(noise_var), size=x.shape)
    else:
        floor = float(x.min())
        counts = rng.poisson(spec.scale * (x - floor))
        noisy = counts / spec.scale + floor
    return np.asfortranarray(noisy)


def realized_snr(clean, noisy):
    """SNR in dB actually achieved by ``noisy`` relative to ``clean``."""
    clean = np.asarray(clean, dtype=np.float64)
    noise_var = float(np.var(np.asarray(noisy, dtype=np.float64) - clean))
    if noise_var == 0:
        return math.inf
    return 10.0 * math.log10(float(np.var(clean)) / noise_var)


def observed_target(n_entries, sampling_ratio):
    """ceil(SR * N), robust to the rounding of SR * N."""
    return min(n_entries, max(1, math.ceil(sampling_ratio * n_entries - 1e-9)))


def _random_mask(dims, n_observed, rng):
    n = int(np.prod(dims))
    flat = np.zeros(n)
    flat[rng.choice(n, size=n_observed, replace=False)] = 1.0
    return flat.reshape(dims, order='F')


def _block_mask(dims, n_missing, l, mode, rng):
    axis = mode - 1
    length = dims[axis]
    n_fibers = int(np.prod(dims)) // length
    # slots of l entries plus one guard entry; guards are only removed once
    # every slot is, merging neighbouring runs
    starts = np.arange(0, length, l + 1)
    run_lengths = np.minimum(l, length - starts)
    guards = starts[starts + l < length] + l

    fibers = np.ones((n_fibers, length))
    remaining = n_missing
    for slot in rng.permutation(n_fibers * starts.size):
        if remaining == 0:
            break
        fiber, j = divmod(int(slot), starts.size)
        run = min(int(run_lengths[j]), remaining)
        fibers[fiber, starts[j]:starts[j] + run] = 0.0
        remaining -= run

    if remaining:
        logger.debug(f"block mask needs {remaining} guard entries; runs along mode {mode} merge")
        picks = rng.permutation(n_fibers * guards.size)[:remaining]
        fiber, j = np.divmod(picks, guards.size)
        fibers[fiber, guards[j]] = 0.0

    others = [d for i, d in enumerate(dims) if i != axis]
    moved = fibers.reshape((others[0], others[1], length), order='F')
    return np.moveaxis(moved, -1, axis)


def make_mask(dims, spec: MaskSpec):
    """
    Build an observation mask with exactly ceil(SR * N) observed entries.

    random: uniform selection without replacement.
    block_ltuple: runs of ``l`` consecutive unobserved entries along the
    fibers of one mode; the last run is truncated to hit the count exactly.
    Below SR = 1/(l+1) the separating entries are removed too, so some runs
    merge and grow longer than ``l``.
    """
    dims = check_dims(dims)
    if not 0 < spec.sampling_ratio <= 1:
        raise TensorArgumentError(f"sampling ratio must lie in (0, 1], got {spec.sampling_ratio}")
    n = int(np.prod(dims))
    n_observed = observed_target(n, spec.sampling_ratio)
    rng = np.random.default_rng(spec.seed)

    if spec.kind == 'random':
        indicator = _random_mask(dims, n_observed, rng)
    else:
        mode = spec.mode if spec.mode is not None else int(rng.integers(1, 4))
        indicator = _block_mask(dims, n - n_observed, spec.l, mode, rng)

    mask = ObservationMask.from_indicator(indicator)
    logger.debug(
        f"{spec.kind} mask on {dims}: {mask.observed_count} observed (SR={mask.sampling_ratio:.4f})"
    )
    return mask
